#include "cgae/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include "cgae/errors.hpp"
#include "cgae/rng.hpp"
#include "cgae/text.hpp"

namespace cgae {

namespace {

constexpr std::string_view kHeader = "site_id,latitude,longitude,timestamp,ghi";
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Row {
  std::int64_t t;
  double ghi;
  std::size_t line;
};

struct SiteRows {
  double latitude = 0.0;
  double longitude = 0.0;
  std::size_t first_line = 0;
  std::vector<Row> rows;
};

std::string where(std::string_view source, std::size_t line) {
  return std::string(source) + ":" + std::to_string(line);
}

}  // namespace

std::size_t SiteSeries::missing() const {
  return static_cast<std::size_t>(std::count_if(values.begin(), values.end(), [](double v) { return std::isnan(v); }));
}

IngestResult parse_csv(std::string_view contents, std::string_view source) {
  IngestResult out;
  std::vector<std::string> lines;
  {
    std::string all(contents);
    std::istringstream is(all);
    std::string line;
    while (std::getline(is, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(line);
    }
  }
  std::size_t first = 0;
  while (first < lines.size() && text::trim(lines[first]).empty()) ++first;
  if (first == lines.size()) throw DataError(std::string(source) + ": missing header '" + std::string(kHeader) + "'");
  if (text::trim(lines[first]) != kHeader) {
    throw DataError(where(source, first + 1) + ": expected header '" + std::string(kHeader) + "', found '" +
                    lines[first] + "'");
  }

  std::map<std::string, SiteRows> by_site;
  for (std::size_t ln = first + 1; ln < lines.size(); ++ln) {
    const std::string_view raw = text::trim(lines[ln]);
    if (raw.empty()) continue;
    ++out.report.rows_read;
    const auto f = text::split(raw, ',');
    const std::string at = where(source, ln + 1);
    if (f.size() != 5) throw DataError(at + ": expected 5 fields, found " + std::to_string(f.size()));
    const std::string id(text::trim(f[0]));
    if (id.empty()) throw DataError(at + ": empty site_id");
    const double lat = text::parse_double(text::trim(f[1]), at + " latitude");
    const double lon = text::parse_double(text::trim(f[2]), at + " longitude");
    if (!(std::fabs(lat) <= 90.0) || !(std::fabs(lon) <= 180.0)) throw DataError(at + ": coordinates out of range");
    std::int64_t t = 0;
    try {
      t = text::parse_timestamp(text::trim(f[3]));
    } catch (const Error& e) {
      throw DataError(at + ": " + e.what());
    }
    const std::string_view ghi_field = text::trim(f[4]);
    double ghi = kNaN;
    if (!ghi_field.empty()) {
      ghi = text::parse_double(ghi_field, at + " ghi");
      if (!std::isfinite(ghi)) throw DataError(at + ": ghi must be finite or empty");
      if (ghi < 0.0) {
        out.report.warnings.push_back(at + ": negative ghi " + std::string(ghi_field) + " for site " + id +
                                      " rejected");
        ++out.report.rows_rejected;
        ghi = kNaN;
      }
    }
    auto [it, inserted] = by_site.try_emplace(id);
    SiteRows& site = it->second;
    if (inserted) {
      site.latitude = lat;
      site.longitude = lon;
      site.first_line = ln + 1;
    } else if (site.latitude != lat || site.longitude != lon) {
      throw DataError(at + ": site " + id + " changes coordinates (first given on line " +
                      std::to_string(site.first_line) + ")");
    }
    site.rows.push_back({t, ghi, ln + 1});
  }
  if (by_site.empty()) out.report.warnings.push_back(std::string(source) + ": no data rows");

  for (auto& [id, site] : by_site) {
    auto& rows = site.rows;
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.t < b.t; });
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].t == rows[i - 1].t) {
        throw DataError(std::string(source) + ": duplicate row for site " + id + " at " +
                        text::format_timestamp(rows[i].t) + " (lines " + std::to_string(rows[i - 1].line) + " and " +
                        std::to_string(rows[i].line) + ")");
      }
    }
    std::vector<std::string> off_grid;
    for (const Row& r : rows)
      if ((r.t - rows.front().t) % kStepSeconds != 0) off_grid.push_back(text::format_timestamp(r.t));
    if (!off_grid.empty()) {
      std::string list;
      for (std::size_t i = 0; i < off_grid.size() && i < 10; ++i) list += (i ? ", " : "") + off_grid[i];
      if (off_grid.size() > 10) list += ", ... (" + std::to_string(off_grid.size()) + " in total)";
      throw DataError(std::string(source) + ": site " + id + " is not on a uniform 30-minute grid starting at " +
                      text::format_timestamp(rows.front().t) + "; offending timestamps: " + list);
    }

    SiteSeries s;
    s.site_id = id;
    s.latitude = site.latitude;
    s.longitude = site.longitude;
    const std::size_t steps = static_cast<std::size_t>((rows.back().t - rows.front().t) / kStepSeconds) + 1;
    s.timestamps.resize(steps);
    s.values.assign(steps, kNaN);
    for (std::size_t k = 0; k < steps; ++k) s.timestamps[k] = rows.front().t + static_cast<std::int64_t>(k) * kStepSeconds;
    for (const Row& r : rows) s.values[static_cast<std::size_t>((r.t - rows.front().t) / kStepSeconds)] = r.ghi;
    const std::size_t filled = steps - rows.size();
    if (filled) {
      out.report.gaps_filled += filled;
      out.report.warnings.push_back("site " + id + ": " + std::to_string(filled) + " missing steps recorded as gaps");
    }
    out.sites.push_back(std::move(s));
  }
  return out;
}

IngestResult ingest_csv(const std::string& path) { return parse_csv(text::read_file(path), path); }

std::string format_csv(std::span<const SiteSeries> sites) {
  std::ostringstream os;
  os << kHeader << '\n';
  for (const SiteSeries& s : sites) {
    if (s.timestamps.size() != s.values.size()) throw DimensionError("export: site " + s.site_id + " has misaligned series");
    const std::string prefix =
        s.site_id + ',' + text::format_double(s.latitude) + ',' + text::format_double(s.longitude) + ',';
    for (std::size_t k = 0; k < s.size(); ++k) {
      os << prefix << text::format_timestamp(s.timestamps[k]) << ',';
      if (!std::isnan(s.values[k])) os << text::format_double(s.values[k]);
      os << '\n';
    }
  }
  return os.str();
}

void export_csv(std::span<const SiteSeries> sites, const std::string& path) {
  text::write_file(path, format_csv(sites));
}

std::size_t Panel::index_at_or_after(std::int64_t t) const {
  if (t <= start) return 0;
  const std::int64_t d = t - start;
  return static_cast<std::size_t>((d + kStepSeconds - 1) / kStepSeconds);
}

Panel align_panel(std::span<const SiteSeries> sites) {
  Panel p;
  if (sites.empty()) throw DataError("no sites to align");
  std::int64_t lo = std::numeric_limits<std::int64_t>::max();
  std::int64_t hi = std::numeric_limits<std::int64_t>::min();
  for (const SiteSeries& s : sites) {
    if (s.timestamps.empty()) throw DataError("site " + s.site_id + " has no observations");
    lo = std::min(lo, s.timestamps.front());
    hi = std::max(hi, s.timestamps.back());
  }
  for (const SiteSeries& s : sites) {
    if ((s.timestamps.front() - lo) % kStepSeconds != 0) {
      throw DataError("site " + s.site_id + " starts at " + text::format_timestamp(s.timestamps.front()) +
                      ", off the shared 30-minute grid starting at " + text::format_timestamp(lo));
    }
  }
  const std::size_t steps = static_cast<std::size_t>((hi - lo) / kStepSeconds) + 1;
  p.start = lo;
  for (const SiteSeries& s : sites) {
    p.node_ids.push_back(s.site_id);
    p.locations.push_back({s.latitude, s.longitude});
    std::vector<double> row(steps, kNaN);
    const auto offset = static_cast<std::size_t>((s.timestamps.front() - lo) / kStepSeconds);
    for (std::size_t k = 0; k < s.size(); ++k) row[offset + k] = s.values[k];
    p.values.push_back(std::move(row));
  }
  return p;
}

void SynthConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("synth." + msg); };
  if (nodes < 2) fail("nodes: must be >= 2");
  if (days < 2) fail("days: must be >= 2");
  if (!(noise >= 0.0) || !std::isfinite(noise)) fail("noise: must be a finite value >= 0");
  if (!(peak_ghi > 0.0)) fail("peak_ghi: must be > 0");
  if (!(0.0 <= sunrise_hour && sunrise_hour < sunset_hour && sunset_hour <= 24.0))
    fail("sunrise_hour/sunset_hour: need 0 <= sunrise < sunset <= 24");
  if (!(cloud_persistence >= 0.0 && cloud_persistence < 1.0)) fail("cloud_persistence: must lie in [0, 1)");
  if (!(cloud_depth >= 0.0 && cloud_depth <= 1.0)) fail("cloud_depth: must lie in [0, 1]");
  if (!(correlation_km > 0.0)) fail("correlation_km: must be > 0");
  if (!(measurement_noise >= 0.0)) fail("measurement_noise: must be >= 0");
  if (!(box_degrees >= 0.0)) fail("box_degrees: must be >= 0");
  if (!locations.empty() && locations.size() != nodes) fail("locations: need exactly one location per node");
}

namespace {

// Lower Cholesky factor; a small diagonal jitter keeps co-located sites (a
// singular correlation matrix) factorable.
std::vector<std::vector<double>> cholesky(std::vector<std::vector<double>> a) {
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) a[i][i] += 1e-10;
  std::vector<std::vector<double>> l(n, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j][j];
    for (std::size_t k = 0; k < j; ++k) d -= l[j][k] * l[j][k];
    l[j][j] = std::sqrt(std::max(d, 1e-12));
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i][j];
      for (std::size_t k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
      l[i][j] = s / l[j][j];
    }
  }
  return l;
}

}  // namespace

SynthResult synth_generate(const SynthConfig& config) {
  config.validate();
  const std::size_t n = config.nodes;
  Rng rng(config.seed);

  std::vector<GeoPoint> where = config.locations;
  if (where.empty()) {
    for (std::size_t i = 0; i < n; ++i) {
      const double lat = config.center.latitude + (rng.uniform() - 0.5) * config.box_degrees;
      const double lon = config.center.longitude + (rng.uniform() - 0.5) * config.box_degrees;
      where.push_back({lat, lon});
    }
  }

  std::vector<std::vector<double>> corr(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) corr[i][j] = std::exp(-great_circle_km(where[i], where[j]) / config.correlation_km);
  const auto chol = cholesky(corr);

  auto correlated = [&] {
    std::vector<double> eta(n), out(n, 0.0);
    for (double& e : eta) e = rng.normal();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k <= i; ++k) out[i] += chol[i][k] * eta[k];
    return out;
  };

  const double phi = config.cloud_persistence;
  const double innovation = std::sqrt(1.0 - phi * phi);
  std::vector<double> g = correlated();
  const std::size_t steps = config.days * kStepsPerDay;

  SynthResult result;
  result.sites.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    SiteSeries& s = result.sites[i];
    const std::string num = std::to_string(i + 1);
    s.site_id = "site_" + std::string(num.size() < 2 ? 2 - num.size() : 0, '0') + num;
    s.latitude = where[i].latitude;
    s.longitude = where[i].longitude;
    s.timestamps.resize(steps);
    s.values.resize(steps);
  }

  const double day_length = config.sunset_hour - config.sunrise_hour;
  for (std::size_t t = 0; t < steps; ++t) {
    const std::int64_t ts = config.start + static_cast<std::int64_t>(t) * kStepSeconds;
    const std::int64_t sec_of_day = ((ts % 86400) + 86400) % 86400;
    const double hour = static_cast<double>(sec_of_day) / 3600.0;
    double clear = 0.0;
    if (hour > config.sunrise_hour && hour < config.sunset_hour)
      clear = config.peak_ghi * std::sin(std::numbers::pi * (hour - config.sunrise_hour) / day_length);

    if (t > 0) {
      const auto eta = correlated();
      for (std::size_t i = 0; i < n; ++i) g[i] = phi * g[i] + innovation * eta[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double e = rng.normal();
      double v = clear;
      if (config.noise > 0.0 && clear > 0.0) {
        const double cloud = 1.0 / (1.0 + std::exp(-g[i]));
        v = clear * (1.0 - config.noise * config.cloud_depth * cloud) +
            config.noise * config.measurement_noise * clear * e;
      }
      result.sites[i].timestamps[t] = ts;
      result.sites[i].values[t] = v > 0.0 ? v : 0.0;
    }
  }

  std::ostringstream os;
  using text::format_double;
  os << "# synthetic GHI generator\n"
     << "model = max(0, C(t) * (1 - noise * cloud_depth * logistic(g_i(t))) + noise * measurement_noise * C(t) * e)\n"
     << "clear_sky = peak_ghi * sin(pi * (hour - sunrise_hour) / (sunset_hour - sunrise_hour)) inside daylight, else 0\n"
     << "cloud_state = g(t) = cloud_persistence * g(t-1) + sqrt(1 - cloud_persistence^2) * L * eta, g(0) = L * eta\n"
     << "innovation_correlation = exp(-great_circle_km / correlation_km), L its Cholesky factor\n"
     << "nodes = " << n << "\n"
     << "days = " << config.days << "\n"
     << "steps = " << steps << "\n"
     << "step_seconds = " << kStepSeconds << "\n"
     << "start = " << text::format_timestamp(config.start) << "\n"
     << "seed = " << config.seed << "\n"
     << "noise = " << format_double(config.noise) << "\n"
     << "peak_ghi = " << format_double(config.peak_ghi) << "\n"
     << "sunrise_hour = " << format_double(config.sunrise_hour) << "\n"
     << "sunset_hour = " << format_double(config.sunset_hour) << "\n"
     << "cloud_persistence = " << format_double(config.cloud_persistence) << "\n"
     << "cloud_depth = " << format_double(config.cloud_depth) << "\n"
     << "correlation_km = " << format_double(config.correlation_km) << "\n"
     << "measurement_noise = " << format_double(config.measurement_noise) << "\n";
  for (std::size_t i = 0; i < n; ++i) {
    os << "site " << result.sites[i].site_id << " = " << format_double(where[i].latitude) << ','
       << format_double(where[i].longitude) << "\n";
  }
  result.description = os.str();
  return result;
}

}  // namespace cgae
