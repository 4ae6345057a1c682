#include "cgae/config.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>

#include "cgae/errors.hpp"
#include "cgae/text.hpp"

namespace cgae {

namespace {

struct FieldError {
  std::string message;
};

std::size_t to_size(std::string_view v) {
  std::size_t out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || r.ec != std::errc() || r.ptr != v.data() + v.size())
    throw FieldError{"expected a non-negative integer, got '" + std::string(v) + "'"};
  return out;
}

std::uint64_t to_u64(std::string_view v) {
  std::uint64_t out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || r.ec != std::errc() || r.ptr != v.data() + v.size())
    throw FieldError{"expected an unsigned 64-bit integer, got '" + std::string(v) + "'"};
  return out;
}

double to_double(std::string_view v) {
  double out = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || r.ec != std::errc() || r.ptr != v.data() + v.size() || !std::isfinite(out))
    throw FieldError{"expected a finite number, got '" + std::string(v) + "'"};
  return out;
}

bool to_bool(std::string_view v) {
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  throw FieldError{"expected true or false, got '" + std::string(v) + "'"};
}

std::int64_t to_time(std::string_view v) {
  try {
    return text::parse_timestamp(v);
  } catch (const Error& e) {
    throw FieldError{e.what()};
  }
}

std::optional<std::int64_t> to_optional_time(std::string_view v) {
  if (v.empty() || v == "none") return std::nullopt;
  return to_time(v);
}

template <class T, class F>
std::vector<T> to_list(std::string_view v, F&& one) {
  std::vector<T> out;
  if (text::trim(v).empty()) return out;
  for (const std::string& part : text::split(v, ',')) out.push_back(one(text::trim(part)));
  return out;
}

std::string join_sizes(const std::vector<std::size_t>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + std::to_string(xs[i]);
  return s;
}

std::string join_doubles(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + text::format_double(xs[i]);
  return s;
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

std::string fmt_time(const std::optional<std::int64_t>& t) { return t ? text::format_timestamp(*t) : "none"; }

struct Field {
  const char* name;  // "section.key", or "key" at top level
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define CGAE_SIZE(NAME, MEMBER)                                                 \
  Field {                                                                       \
    NAME, [](RunConfig& c, std::string_view v) { c.MEMBER = to_size(v); },      \
        [](const RunConfig& c) { return std::to_string(c.MEMBER); }             \
  }
#define CGAE_DOUBLE(NAME, MEMBER)                                               \
  Field {                                                                       \
    NAME, [](RunConfig& c, std::string_view v) { c.MEMBER = to_double(v); },    \
        [](const RunConfig& c) { return text::format_double(c.MEMBER); }        \
  }
#define CGAE_BOOL(NAME, MEMBER)                                                 \
  Field {                                                                       \
    NAME, [](RunConfig& c, std::string_view v) { c.MEMBER = to_bool(v); },      \
        [](const RunConfig& c) { return fmt_bool(c.MEMBER); }                   \
  }
#define CGAE_STRING(NAME, MEMBER)                                               \
  Field {                                                                       \
    NAME, [](RunConfig& c, std::string_view v) { c.MEMBER = std::string(v); },  \
        [](const RunConfig& c) { return c.MEMBER; }                             \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      Field{"seed", [](RunConfig& c, std::string_view v) { c.seed = to_u64(v); },
            [](const RunConfig& c) { return std::to_string(c.seed); }},
      CGAE_STRING("paths.work_dir", work_dir),
      CGAE_STRING("paths.data", data),
      CGAE_SIZE("synth.nodes", synth.nodes),
      CGAE_SIZE("synth.days", synth.days),
      CGAE_DOUBLE("synth.noise", synth.noise),
      Field{"synth.start", [](RunConfig& c, std::string_view v) { c.synth.start = to_time(v); },
            [](const RunConfig& c) { return text::format_timestamp(c.synth.start); }},
      CGAE_DOUBLE("synth.peak_ghi", synth.peak_ghi),
      CGAE_DOUBLE("synth.sunrise_hour", synth.sunrise_hour),
      CGAE_DOUBLE("synth.sunset_hour", synth.sunset_hour),
      CGAE_DOUBLE("synth.cloud_persistence", synth.cloud_persistence),
      CGAE_DOUBLE("synth.cloud_depth", synth.cloud_depth),
      CGAE_DOUBLE("synth.correlation_km", synth.correlation_km),
      CGAE_DOUBLE("synth.measurement_noise", synth.measurement_noise),
      CGAE_DOUBLE("synth.box_degrees", synth.box_degrees),
      CGAE_STRING("graph.mode", graph_mode),
      CGAE_DOUBLE("graph.threshold", graph_threshold),
      CGAE_DOUBLE("graph.kernel_scale_km", kernel_scale_km),
      CGAE_SIZE("lags.max_lag", max_lag),
      CGAE_DOUBLE("lags.tau", tau),
      CGAE_SIZE("lags.bins", bins),
      CGAE_SIZE("model.latent_dim", model.latent_dim),
      CGAE_SIZE("model.gfenn_layers", model.gfenn_layers),
      CGAE_SIZE("model.encoder_layers", model.encoder_layers),
      CGAE_SIZE("model.decoder_layers", model.decoder_layers),
      CGAE_SIZE("model.gfenn_width", model.gfenn_width),
      Field{"model.encoder_widths",
            [](RunConfig& c, std::string_view v) { c.model.encoder_widths = to_list<std::size_t>(v, to_size); },
            [](const RunConfig& c) { return join_sizes(c.model.encoder_widths); }},
      Field{"model.decoder_widths",
            [](RunConfig& c, std::string_view v) { c.model.decoder_widths = to_list<std::size_t>(v, to_size); },
            [](const RunConfig& c) { return join_sizes(c.model.decoder_widths); }},
      CGAE_DOUBLE("model.learning_rate", model.learning_rate),
      CGAE_DOUBLE("model.sigma_dec", model.sigma_dec),
      CGAE_SIZE("train.epochs", epochs),
      CGAE_SIZE("train.batch_size", model.batch_size),
      Field{"train.split", [](RunConfig& c, std::string_view v) { c.split = to_optional_time(v); },
            [](const RunConfig& c) { return fmt_time(c.split); }},
      CGAE_DOUBLE("train.split_fraction", split_fraction),
      CGAE_SIZE("forecast.rho", rho),
      Field{"forecast.coverages",
            [](RunConfig& c, std::string_view v) { c.coverages = to_list<double>(v, to_double); },
            [](const RunConfig& c) { return join_doubles(c.coverages); }},
      Field{"forecast.horizons",
            [](RunConfig& c, std::string_view v) { c.horizons = to_list<std::size_t>(v, to_size); },
            [](const RunConfig& c) { return join_sizes(c.horizons); }},
      CGAE_BOOL("forecast.add_output_noise", add_output_noise),
      CGAE_SIZE("forecast.member_days", member_days),
      CGAE_SIZE("forecast.entropy_bins", entropy_bins),
      Field{"forecast.dump_at", [](RunConfig& c, std::string_view v) { c.dump_at = to_optional_time(v); },
            [](const RunConfig& c) { return fmt_time(c.dump_at); }},
      CGAE_BOOL("evaluate.daylight_only", daylight_only),
  };
  return table;
}

#undef CGAE_SIZE
#undef CGAE_DOUBLE
#undef CGAE_BOOL
#undef CGAE_STRING

const Field* find_field(std::string_view name) {
  for (const Field& f : fields())
    if (name == f.name) return &f;
  return nullptr;
}

bool known_section(std::string_view s) {
  for (const Field& f : fields()) {
    const std::string_view n = f.name;
    const auto dot = n.find('.');
    if (dot != std::string_view::npos && n.substr(0, dot) == s) return true;
  }
  return false;
}

}  // namespace

ModelConfig pipeline_model_defaults() {
  ModelConfig m;
  m.sigma_dec = 0.05;
  m.learning_rate = 7.5e-5;
  return m;
}

void RunConfig::validate() const {
  std::vector<std::string> errs;
  auto check = [&](bool ok, const std::string& msg) {
    if (!ok) errs.push_back(msg);
  };
  check(!work_dir.empty(), "paths.work_dir: must not be empty");
  check(!data.empty(), "paths.data: must not be empty");
  try {
    synth.validate();
  } catch (const ConfigError& e) {
    errs.push_back(e.what());
  }
  check(graph_mode == "correlation" || graph_mode == "distance",
        "graph.mode: must be 'correlation' or 'distance', got '" + graph_mode + "'");
  check(graph_threshold >= 0.0 && graph_threshold <= 1.0, "graph.threshold: must lie in [0, 1]");
  check(kernel_scale_km > 0.0, "graph.kernel_scale_km: must be > 0");
  check(max_lag >= 1, "lags.max_lag: must be >= 1");
  check(tau >= 0.0, "lags.tau: must be >= 0");
  check(bins >= 2, "lags.bins: must be >= 2");
  {
    // The data-dependent fields get placeholders so only user settings are checked.
    ModelConfig m = model;
    m.nodes = 1;
    m.features = 1;
    try {
      m.validate();
    } catch (const ConfigError& e) {
      std::string what = e.what();
      // Batch size lives under [train] in the file.
      if (what.rfind("model.batch_size", 0) == 0) what.replace(0, 5, "train");
      errs.push_back(what);
    }
  }
  check(split_fraction > 0.0 && split_fraction < 1.0, "train.split_fraction: must lie in (0, 1)");
  check(rho >= 2, "forecast.rho: must be >= 2");
  check(!coverages.empty(), "forecast.coverages: need at least one level");
  for (double c : coverages) check(c > 0.0 && c < 100.0, "forecast.coverages: each level must lie in (0, 100) percent");
  for (std::size_t i = 1; i < coverages.size(); ++i)
    check(coverages[i] > coverages[i - 1], "forecast.coverages: levels must be strictly increasing");
  check(!horizons.empty(), "forecast.horizons: need at least one horizon");
  for (std::size_t h : horizons) check(h >= 1 && h <= kStepsPerDay, "forecast.horizons: each must lie in 1..48");
  for (std::size_t i = 1; i < horizons.size(); ++i)
    check(horizons[i] > horizons[i - 1], "forecast.horizons: must be strictly increasing");
  check(member_days >= 1, "forecast.member_days: must be >= 1");
  check(entropy_bins >= 1, "forecast.entropy_bins: must be >= 1");
  if (!errs.empty()) {
    std::string msg = "invalid configuration:";
    for (const std::string& e : errs) msg += "\n  " + e;
    throw ConfigError(msg);
  }
}

void RunConfig::set(std::string_view dotted_key, std::string_view value) {
  const Field* f = find_field(dotted_key);
  if (!f) throw ConfigError("unknown configuration key '" + std::string(dotted_key) + "'");
  try {
    f->set(*this, text::trim(value));
  } catch (const FieldError& e) {
    throw ConfigError(std::string(dotted_key) + ": " + e.message);
  }
}

std::string RunConfig::path_of(const std::string& file) const {
  return (std::filesystem::path(work_dir) / file).string();
}

std::string RunConfig::data_path() const {
  const std::filesystem::path p(data);
  return p.is_absolute() ? data : path_of(data);
}

std::vector<double> RunConfig::coverage_fractions() const {
  std::vector<double> out;
  for (double c : coverages) out.push_back(c / 100.0);
  return out;
}

RunConfig parse_config(std::string_view contents, std::string_view source) {
  RunConfig c;
  std::vector<std::string> errs;
  std::map<std::string, std::size_t> seen;  // field -> line
  std::string section;
  std::istringstream is{std::string(contents)};
  std::string raw;
  std::size_t ln = 0;
  while (std::getline(is, raw)) {
    ++ln;
    const std::string at = std::string(source) + ":" + std::to_string(ln) + ": ";
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = text::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        errs.push_back(at + "malformed section header '" + std::string(line) + "'");
        continue;
      }
      section = std::string(text::trim(line.substr(1, line.size() - 2)));
      if (!known_section(section)) errs.push_back(at + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      errs.push_back(at + "expected 'key = value', got '" + std::string(line) + "'");
      continue;
    }
    const std::string key(text::trim(line.substr(0, eq)));
    const std::string_view value = text::trim(line.substr(eq + 1));
    const std::string name = section.empty() ? key : section + "." + key;
    const Field* f = find_field(name);
    if (!f) {
      if (known_section(section) || section.empty())
        errs.push_back(at + "unknown key '" + key + "'" + (section.empty() ? "" : " in [" + section + "]"));
      continue;
    }
    if (!seen.emplace(name, ln).second) {
      errs.push_back(at + name + " is set more than once");
      continue;
    }
    try {
      f->set(c, value);
    } catch (const FieldError& e) {
      errs.push_back(at + name + ": " + e.message);
    }
  }
  if (!errs.empty()) {
    std::string msg = "invalid configuration:";
    for (const std::string& e : errs) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  try {
    c.validate();
  } catch (const ConfigError& e) {
    // Point each complaint about a field set in the file at its line.
    std::istringstream lines{std::string(e.what())};
    std::string msg, line;
    while (std::getline(lines, line)) {
      const std::string_view body = text::trim(line);
      const auto colon = body.find(':');
      if (colon != std::string_view::npos) {
        const auto it = seen.find(std::string(body.substr(0, colon)));
        if (it != seen.end()) line = "  " + std::string(source) + ":" + std::to_string(it->second) + ": " + std::string(body);
      }
      msg += (msg.empty() ? "" : "\n") + line;
    }
    throw ConfigError(msg);
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::string contents;
  try {
    contents = text::read_file(path);
  } catch (const Error& e) {
    throw ConfigError(std::string("cannot read configuration: ") + e.what());
  }
  return parse_config(contents, path);
}

std::string format_config(const RunConfig& config) {
  std::ostringstream os;
  std::string section;
  for (const Field& f : fields()) {
    const std::string_view n = f.name;
    const auto dot = n.find('.');
    const std::string s = dot == std::string_view::npos ? "" : std::string(n.substr(0, dot));
    const std::string key(dot == std::string_view::npos ? n : n.substr(dot + 1));
    if (s != section) {
      os << "\n[" << s << "]\n";
      section = s;
    }
    os << key << " = " << f.get(config) << '\n';
  }
  return os.str();
}

}  // namespace cgae
