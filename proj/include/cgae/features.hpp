#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cgae/tensor.hpp"

namespace cgae {

struct MutualInformation {
  double nats = 0.0;
  // Set when either input is constant: the histogram is degenerate and the
  // estimate is reported as 0.
  bool degenerate = false;
};

// Plug-in estimate from an equal-width 2-D histogram with `bins` bins per
// axis spanning each variable's observed [min, max].
MutualInformation mutual_information(std::span<const double> x, std::span<const double> y,
                                     std::size_t bins = 16);

// Entropy (nats) of the equal-width histogram of x. Matches
// mutual_information(x, x, bins).
double histogram_entropy(std::span<const double> x, std::size_t bins = 16);

struct LagScore {
  std::size_t lag = 0;
  double mi = 0.0;
};

// MI between the series and its lag-shifted copy for lag = 1..max_lag, over
// the overlapping range. Missing values (NaN) drop the pair.
std::vector<LagScore> lag_profile(std::span<const double> series, std::size_t max_lag,
                                  std::size_t bins = 16);
// Pooled over several series: pairs never straddle two series.
std::vector<LagScore> lag_profile(std::span<const std::vector<double>> pooled, std::size_t max_lag,
                                  std::size_t bins = 16);

// Lags sorted by decreasing MI. Scores equal to within 1e-12 nats rank the
// shorter lag first.
std::vector<LagScore> rank_lags(std::vector<LagScore> profile);

struct LagSet {
  std::vector<std::size_t> lags;  // strictly increasing, each >= 1
  double tau = 0.0;
  std::size_t max_lag = 0;

  std::size_t largest() const { return lags.empty() ? 0 : lags.back(); }
};

// Keeps every lag whose MI is >= tau. Throws when nothing survives.
LagSet select_lags(std::span<const double> series, std::size_t max_lag, double tau,
                   std::size_t bins = 16);
LagSet select_lags(std::span<const std::vector<double>> pooled, std::size_t max_lag, double tau,
                   std::size_t bins = 16);

// One-line CSV of integers.
void write_lag_set(const LagSet& lags, const std::string& path);
LagSet read_lag_set(const std::string& path);

// A windowed training or test example.
//
// With forecast origin o (the last observed step), feature f of node i is the
// value at o + 1 - lags[f], so lag 1 is the latest observation and, at
// horizon 1, lag l sits exactly l steps before the target. The target of node
// i is the value at o + k.
struct Example {
  Tensor pi;      // n x F
  Tensor target;  // n
  std::size_t origin = 0;
};

struct Dataset {
  std::vector<Example> train;
  std::vector<Example> test;
  std::size_t horizon = 1;
  std::vector<std::size_t> lags;
};

// `series[i][t]` is node i at step t on a shared grid; NaN marks a gap.
// Examples whose target step is < split_index go to `train`, the rest to
// `test`. Windows touching a gap are dropped.
Dataset build_examples(std::span<const std::vector<double>> series, const LagSet& lags,
                       std::size_t horizon, std::size_t split_index);

}  // namespace cgae
