#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cgae/graph.hpp"

namespace cgae {

inline constexpr std::int64_t kStepSeconds = 1800;
inline constexpr std::size_t kStepsPerDay = 48;

// One site's GHI series on a uniform 30-minute grid. Missing steps hold NaN.
struct SiteSeries {
  std::string site_id;
  double latitude = 0.0;
  double longitude = 0.0;
  std::vector<std::int64_t> timestamps;  // seconds since epoch, UTC
  std::vector<double> values;            // W/m^2

  std::size_t size() const { return values.size(); }
  std::size_t missing() const;
};

struct IngestReport {
  std::size_t rows_read = 0;
  std::size_t rows_rejected = 0;
  std::size_t gaps_filled = 0;
  std::vector<std::string> warnings;
};

struct IngestResult {
  std::vector<SiteSeries> sites;  // sorted by site id
  IngestReport report;
};

// CSV with header "site_id,latitude,longitude,timestamp,ghi". An empty ghi
// field is a missing value. Negative GHI rejects the row with a warning;
// duplicate (site, timestamp) pairs and timestamps off the 30-minute grid are
// errors.
IngestResult ingest_csv(const std::string& path);
IngestResult parse_csv(std::string_view contents, std::string_view source = "<memory>");

// Writes the same schema; missing values become empty fields.
void export_csv(std::span<const SiteSeries> sites, const std::string& path);
std::string format_csv(std::span<const SiteSeries> sites);

// All sites on one shared grid, from the earliest to the latest timestamp.
struct Panel {
  std::vector<std::string> node_ids;
  std::vector<GeoPoint> locations;
  std::int64_t start = 0;
  std::vector<std::vector<double>> values;  // node x step, NaN for missing

  std::size_t nodes() const { return values.size(); }
  std::size_t steps() const { return values.empty() ? 0 : values.front().size(); }
  std::int64_t time_at(std::size_t step) const { return start + static_cast<std::int64_t>(step) * kStepSeconds; }
  // First step at or after `t`.
  std::size_t index_at_or_after(std::int64_t t) const;
};

Panel align_panel(std::span<const SiteSeries> sites);

struct SynthConfig {
  std::size_t nodes = 5;
  std::size_t days = 60;
  double noise = 1.0;  // 0 gives a cloudless, exactly periodic signal
  std::uint64_t seed = 1;
  std::int64_t start = 1451606400;  // 2016-01-01T00:00:00Z
  double peak_ghi = 1000.0;
  double sunrise_hour = 6.0;
  double sunset_hour = 18.0;
  double cloud_persistence = 0.95;  // AR(1) coefficient per step
  double cloud_depth = 0.7;         // largest fractional attenuation
  double correlation_km = 100.0;    // spatial decay of cloud innovations
  double measurement_noise = 0.03;  // std as a fraction of clear sky
  double box_degrees = 2.0;         // side of the box sites are drawn in
  GeoPoint center{43.0, -86.0};
  std::vector<GeoPoint> locations;  // overrides the random placement when set

  void validate() const;
};

struct SynthResult {
  std::vector<SiteSeries> sites;
  std::string description;  // key = value lines describing the generator
};

// value = C(t) * (1 - noise * depth * logistic(g_i(t))) + noise * m * C(t) * e
// clamped at 0, where C is a half-sine clear-sky curve between sunrise and
// sunset, g is a stationary AR(1) cloud state with unit variance whose
// innovations are correlated as exp(-distance / correlation_km), and e is
// independent standard normal noise.
SynthResult synth_generate(const SynthConfig& config);

}  // namespace cgae
