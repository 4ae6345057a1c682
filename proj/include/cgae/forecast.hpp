#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cgae/model.hpp"
#include "cgae/rng.hpp"
#include "cgae/tensor.hpp"

namespace cgae {

inline constexpr std::size_t kDefaultEnsembleSize = 10000;

struct ForecastEnsemble {
  Tensor samples;  // members x nodes, physical units
  std::size_t horizon = 1;
  std::int64_t target_time = 0;  // seconds since epoch

  std::size_t members() const { return samples.rows(); }
  std::size_t nodes() const { return samples.cols(); }
  std::vector<double> node_samples(std::size_t node) const;
};

struct QuantileForecast {
  std::vector<double> levels;  // ascending, each in (0, 1)
  Tensor values;               // nodes x levels
};

// R(G) is computed once from `pi` (physical units); each member decodes a
// fresh z ~ N(0, I). With `add_output_noise` the member also receives
// sigma_dec * scale * eps. Output is rescaled to physical units and negative
// values are clamped to 0.
ForecastEnsemble generate_ensemble(const CgaeModel& model, const Tensor& pi, std::size_t rho, Rng& rng,
                                   bool add_output_noise = false);

// Linear interpolation between order statistics at zero-based rank
// level * (members - 1).
QuantileForecast empirical_quantiles(const ForecastEnsemble& ens, std::span<const double> levels);
double empirical_quantile(std::span<const double> sorted, double level);

// Members are the observations at step `target_index - d * steps_per_day`
// for d = 1..member_days. Missing observations are skipped; fewer than one
// usable member, or a window reaching before the start of the history, is an
// error.
ForecastEnsemble persistence_ensemble(std::span<const std::vector<double>> history, std::size_t target_index,
                                      std::size_t horizon, std::size_t member_days,
                                      std::size_t steps_per_day = 48);

// CSV "node_id,sample_index,value".
void write_ensemble_csv(const ForecastEnsemble& ens, std::span<const std::string> node_ids, const std::string& path);
// CSV "node_id,level,value".
void write_quantiles_csv(const QuantileForecast& q, std::span<const std::string> node_ids, const std::string& path);

}  // namespace cgae
