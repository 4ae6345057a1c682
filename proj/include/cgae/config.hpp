#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cgae/dataio.hpp"
#include "cgae/model.hpp"

namespace cgae {

ModelConfig pipeline_model_defaults();

// Pipeline settings. The text format is documented in docs/config.md: flat
// `key = value` lines grouped under [section] headers, `#` comments, and
// top-level keys before the first header.
struct RunConfig {
  std::uint64_t seed = 1;

  // [paths]
  std::string work_dir = ".";
  std::string data = "data.csv";  // relative paths resolve against work_dir

  // [synth]
  SynthConfig synth;

  // [graph]
  std::string graph_mode = "correlation";  // correlation | distance
  double graph_threshold = 0.97;
  double kernel_scale_km = 100.0;

  // [lags]
  std::size_t max_lag = 300;
  double tau = 0.45;
  std::size_t bins = 16;

  // [model] (nodes, features and scale come from the data). The pipeline
  // defaults use a tighter decoder likelihood than the library default, with
  // the learning rate scaled to match.
  ModelConfig model = pipeline_model_defaults();

  // [train]
  std::size_t epochs = 100;
  std::optional<std::int64_t> split;  // first test timestamp
  double split_fraction = 0.6;        // used when split is unset

  // [forecast]
  std::size_t rho = 10000;
  std::vector<double> coverages = {10, 20, 30, 40, 50, 60, 70, 80, 90};  // percent
  std::vector<std::size_t> horizons = {1};
  bool add_output_noise = true;
  std::size_t member_days = 20;
  std::size_t entropy_bins = 32;
  std::optional<std::int64_t> dump_at;  // target time of the ensemble dump

  // [evaluate]
  bool daylight_only = true;

  // Throws ConfigError listing every invalid field.
  void validate() const;

  // Sets one field from its "section.key" name (top-level keys have no
  // section), as if it had appeared in the file.
  void set(std::string_view dotted_key, std::string_view value);

  std::string path_of(const std::string& file) const;  // work_dir / file
  std::string data_path() const;
  std::vector<double> coverage_fractions() const;
};

// Parses the text format; unknown sections or keys, duplicates and malformed
// values are all reported together in one ConfigError. The result is
// validated.
RunConfig parse_config(std::string_view text, std::string_view source = "<config>");
RunConfig load_config(const std::string& path);
// Canonical text form; parse_config(format_config(c)) reproduces c.
std::string format_config(const RunConfig& config);

}  // namespace cgae
