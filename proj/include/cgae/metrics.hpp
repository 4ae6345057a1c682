#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cgae/forecast.hpp"

namespace cgae {

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

// (covered / N - (1 - 2 alpha)) * 100, with inclusive coverage
// lower <= v <= upper.
double reliability_bias(std::span<const double> observations, std::span<const Interval> intervals, double alpha);

// Mean |upper - lower| over the intervals.
double piaw(std::span<const Interval> intervals);

// CRPS of the empirical CDF of `samples` against observation v, in energy
// form: mean |X - v| - mean |X - X'| / 2.
double crps_empirical(std::span<const double> samples, double v);

struct EntropyResult {
  double nats = 0.0;
  bool degenerate = false;  // constant samples
};

// Shannon entropy of the equal-width histogram of the samples over their
// [min, max].
EntropyResult pdf_entropy(std::span<const double> samples, std::size_t bins = 32);

// Entropy of explicit bin counts.
double counts_entropy(std::span<const std::size_t> counts);

// Central interval [q_alpha, q_{1-alpha}] for nominal coverage c (a fraction
// in (0, 1)); alpha = (1 - c) / 2.
double alpha_for_coverage(double coverage);

// What the report needs from one (instance, node) forecast. Building it from
// an ensemble discards the samples.
struct ScoredForecast {
  std::string node_id;
  std::size_t horizon = 1;
  double observation = 0.0;
  double crps = 0.0;
  double entropy = 0.0;
  std::vector<Interval> intervals;  // one per coverage level
};

ScoredForecast score_forecast(std::span<const double> samples, double observation,
                              std::span<const double> coverages, std::size_t entropy_bins = 32);

struct CoverageRow {
  double coverage = 0.0;  // nominal, fraction
  double reliability_bias = 0.0;  // percent, averaged over nodes
  double observed_coverage = 0.0; // fraction, averaged over nodes
  double piaw = 0.0;
  double piaw_normalized = 0.0;   // divided by the largest observation
};

struct HorizonReport {
  std::size_t horizon = 1;
  std::size_t instances = 0;
  std::vector<CoverageRow> coverage;
  double mean_crps = 0.0;
  double mean_entropy = 0.0;
  std::vector<double> entropy_edges;  // bins + 1 edges
  std::vector<std::size_t> entropy_counts;
};

struct EvaluationReport {
  std::vector<HorizonReport> horizons;
};

inline constexpr std::size_t kEntropyHistogramBins = 20;

// Aggregates scored forecasts per horizon: reliability and PIAW per coverage
// level (computed per node, then averaged over nodes), mean CRPS and the
// histogram of per-forecast entropies.
EvaluationReport aggregate(std::span<const ScoredForecast> scored, std::span<const double> coverages);

// Scores every node of every ensemble against the aligned observation rows
// (observations[j] has one value per node) and aggregates.
EvaluationReport evaluate(std::span<const ForecastEnsemble> forecasts, std::span<const std::vector<double>> observations,
                          std::span<const std::string> node_ids, std::span<const double> coverages,
                          std::size_t entropy_bins = 32);

struct LabeledReport {
  std::string label;  // forecaster name, e.g. "cgae" or "pen"
  EvaluationReport report;
};

// One CSV per metric family and horizon, named report_<metric>_<horizon>.csv:
//   reliability: model,coverage,reliability_bias,observed_coverage
//   piaw:        model,coverage,piaw,piaw_normalized
//   crps:        model,instances,mean_crps,mean_entropy
//   entropy:     model,bin_lower,bin_upper,count
// Returns the paths written.
std::vector<std::string> write_report_tables(std::span<const LabeledReport> reports, const std::string& dir);
std::string report_summary(std::span<const LabeledReport> reports);

}  // namespace cgae
