#include "cgae/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <sstream>
#include <tuple>

#include "cgae/errors.hpp"
#include "cgae/features.hpp"
#include "cgae/text.hpp"

namespace cgae {

double reliability_bias(std::span<const double> observations, std::span<const Interval> intervals, double alpha) {
  if (observations.empty()) throw UsageError("reliability_bias: no observations");
  if (observations.size() != intervals.size()) throw UsageError("reliability_bias: observations and intervals differ in length");
  if (!(alpha > 0.0 && alpha < 0.5)) throw UsageError("reliability_bias: alpha must lie in (0, 0.5)");
  std::size_t covered = 0;
  for (std::size_t i = 0; i < observations.size(); ++i) {
    if (intervals[i].lower > intervals[i].upper) throw UsageError("reliability_bias: interval with lower > upper");
    if (intervals[i].lower <= observations[i] && observations[i] <= intervals[i].upper) ++covered;
  }
  // Working in percent keeps exact-decimal cases exact.
  const double n = static_cast<double>(observations.size());
  const double nominal_percent = 100.0 - 200.0 * alpha;
  return (100.0 * static_cast<double>(covered) - nominal_percent * n) / n;
}

double piaw(std::span<const Interval> intervals) {
  if (intervals.empty()) throw UsageError("piaw: no intervals");
  double s = 0.0;
  for (const Interval& iv : intervals) s += std::fabs(iv.upper - iv.lower);
  return s / static_cast<double>(intervals.size());
}

namespace {

double crps_sorted(std::span<const double> xs, double v) {
  const std::size_t m = xs.size();
  const double rho = static_cast<double>(m);
  double abs_dev = 0.0;
  double spread = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    abs_dev += std::fabs(xs[i] - v);
    spread += (2.0 * static_cast<double>(i) - rho + 1.0) * xs[i];
  }
  // sum_{s,s'} |x_s - x_s'| = 2 sum_i (2i - rho + 1) x_(i) over sorted x.
  const double score = abs_dev / rho - spread / (rho * rho);
  return score > 0.0 ? score : 0.0;
}

}  // namespace

double crps_empirical(std::span<const double> samples, double v) {
  if (samples.empty()) throw UsageError("crps_empirical: no samples");
  std::vector<double> xs(samples.begin(), samples.end());
  std::sort(xs.begin(), xs.end());
  return crps_sorted(xs, v);
}

EntropyResult pdf_entropy(std::span<const double> samples, std::size_t bins) {
  if (bins == 0) throw UsageError("pdf_entropy: bins must be positive");
  if (samples.size() < bins) {
    throw UsageError("pdf_entropy: need at least " + std::to_string(bins) + " samples, got " +
                     std::to_string(samples.size()));
  }
  const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
  if (!(*mx > *mn)) return {0.0, true};
  return {histogram_entropy(samples, bins), false};
}

double counts_entropy(std::span<const std::size_t> counts) {
  std::size_t total = 0;
  for (std::size_t c : counts) total += c;
  if (total == 0) return 0.0;
  const double n = static_cast<double>(total);
  std::vector<double> terms;
  for (std::size_t c : counts)
    if (c) terms.push_back(static_cast<double>(c) / n * std::log(n / static_cast<double>(c)));
  std::sort(terms.begin(), terms.end());
  double s = 0.0;
  for (double t : terms) s += t;
  return s;
}

double alpha_for_coverage(double coverage) {
  if (!(coverage > 0.0 && coverage < 1.0)) throw UsageError("coverage must lie in (0, 1)");
  return (1.0 - coverage) / 2.0;
}

ScoredForecast score_forecast(std::span<const double> samples, double observation, std::span<const double> coverages,
                              std::size_t entropy_bins) {
  if (samples.empty()) throw UsageError("score_forecast: empty ensemble");
  std::vector<double> xs(samples.begin(), samples.end());
  std::sort(xs.begin(), xs.end());
  ScoredForecast out;
  out.observation = observation;
  out.crps = crps_sorted(xs, observation);
  // Ensembles smaller than the bin count (persistence baselines) use one bin
  // per member.
  out.entropy = pdf_entropy(xs, std::min(entropy_bins, xs.size())).nats;
  for (double c : coverages) {
    const double a = alpha_for_coverage(c);
    Interval iv;
    if (xs.size() == 1) {
      iv = {xs[0], xs[0]};
    } else {
      iv.lower = empirical_quantile(xs, a);
      iv.upper = std::max(iv.lower, empirical_quantile(xs, 1.0 - a));
    }
    out.intervals.push_back(iv);
  }
  return out;
}

namespace {

auto sort_key(const ScoredForecast& s) {
  return std::tie(s.horizon, s.node_id, s.observation, s.crps, s.entropy);
}

bool scored_less(const ScoredForecast& a, const ScoredForecast& b) {
  if (sort_key(a) != sort_key(b)) return sort_key(a) < sort_key(b);
  for (std::size_t k = 0; k < std::min(a.intervals.size(), b.intervals.size()); ++k) {
    if (a.intervals[k].lower != b.intervals[k].lower) return a.intervals[k].lower < b.intervals[k].lower;
    if (a.intervals[k].upper != b.intervals[k].upper) return a.intervals[k].upper < b.intervals[k].upper;
  }
  return a.intervals.size() < b.intervals.size();
}

HorizonReport aggregate_horizon(std::span<const ScoredForecast> group, std::span<const double> coverages) {
  HorizonReport r;
  r.horizon = group.front().horizon;
  r.instances = group.size();

  std::map<std::string, std::vector<const ScoredForecast*>> by_node;
  double max_obs = 0.0;
  double crps_sum = 0.0, entropy_sum = 0.0;
  double e_min = group.front().entropy, e_max = group.front().entropy;
  for (const ScoredForecast& s : group) {
    by_node[s.node_id].push_back(&s);
    max_obs = std::max(max_obs, s.observation);
    crps_sum += s.crps;
    entropy_sum += s.entropy;
    e_min = std::min(e_min, s.entropy);
    e_max = std::max(e_max, s.entropy);
    if (s.intervals.size() != coverages.size()) throw UsageError("evaluate: interval count does not match coverage levels");
  }
  r.mean_crps = crps_sum / static_cast<double>(group.size());
  r.mean_entropy = entropy_sum / static_cast<double>(group.size());

  for (std::size_t k = 0; k < coverages.size(); ++k) {
    CoverageRow row;
    row.coverage = coverages[k];
    const double a = alpha_for_coverage(coverages[k]);
    for (const auto& [node, items] : by_node) {
      std::vector<double> obs;
      std::vector<Interval> ivs;
      for (const ScoredForecast* s : items) {
        obs.push_back(s->observation);
        ivs.push_back(s->intervals[k]);
      }
      const double bias = reliability_bias(obs, ivs, a);
      row.reliability_bias += bias;
      row.observed_coverage += (bias / 100.0) + coverages[k];
      row.piaw += piaw(ivs);
    }
    const double nodes = static_cast<double>(by_node.size());
    row.reliability_bias /= nodes;
    row.observed_coverage /= nodes;
    row.piaw /= nodes;
    row.piaw_normalized = max_obs > 0.0 ? row.piaw / max_obs : 0.0;
    r.coverage.push_back(row);
  }

  const std::size_t bins = kEntropyHistogramBins;
  r.entropy_counts.assign(bins, 0);
  const double width = (e_max - e_min) / static_cast<double>(bins);
  for (std::size_t b = 0; b <= bins; ++b) r.entropy_edges.push_back(e_min + width * static_cast<double>(b));
  r.entropy_edges.back() = e_max;
  for (const ScoredForecast& s : group) {
    std::size_t b = 0;
    if (width > 0.0) b = std::min(bins - 1, static_cast<std::size_t>((s.entropy - e_min) / width));
    ++r.entropy_counts[b];
  }
  return r;
}

}  // namespace

EvaluationReport aggregate(std::span<const ScoredForecast> scored, std::span<const double> coverages) {
  if (scored.empty()) throw UsageError("evaluate: no forecasts");
  for (double c : coverages) alpha_for_coverage(c);
  // A canonical order makes every floating-point sum independent of the
  // order in which instances arrive.
  std::vector<ScoredForecast> sorted(scored.begin(), scored.end());
  std::sort(sorted.begin(), sorted.end(), scored_less);

  EvaluationReport report;
  std::size_t start = 0;
  while (start < sorted.size()) {
    std::size_t stop = start;
    while (stop < sorted.size() && sorted[stop].horizon == sorted[start].horizon) ++stop;
    report.horizons.push_back(aggregate_horizon(std::span(sorted).subspan(start, stop - start), coverages));
    start = stop;
  }
  return report;
}

EvaluationReport evaluate(std::span<const ForecastEnsemble> forecasts, std::span<const std::vector<double>> observations,
                          std::span<const std::string> node_ids, std::span<const double> coverages,
                          std::size_t entropy_bins) {
  if (forecasts.size() != observations.size()) {
    throw UsageError("evaluate: " + std::to_string(forecasts.size()) + " forecasts but " +
                     std::to_string(observations.size()) + " observation rows");
  }
  std::vector<ScoredForecast> scored;
  for (std::size_t j = 0; j < forecasts.size(); ++j) {
    const ForecastEnsemble& ens = forecasts[j];
    if (observations[j].size() != ens.nodes() || node_ids.size() != ens.nodes()) {
      throw UsageError("evaluate: instance " + std::to_string(j) + " has misaligned node counts");
    }
    for (std::size_t i = 0; i < ens.nodes(); ++i) {
      ScoredForecast s = score_forecast(ens.node_samples(i), observations[j][i], coverages, entropy_bins);
      s.node_id = node_ids[i];
      s.horizon = ens.horizon;
      scored.push_back(std::move(s));
    }
  }
  return aggregate(scored, coverages);
}

std::vector<std::string> write_report_tables(std::span<const LabeledReport> reports, const std::string& dir) {
  namespace fs = std::filesystem;
  std::map<std::size_t, std::map<std::string, std::ostringstream>> tables;
  auto table = [&](std::size_t h, const std::string& metric) -> std::ostringstream& {
    auto& os = tables[h][metric];
    if (os.tellp() == 0) {
      if (metric == "reliability") os << "model,coverage,reliability_bias,observed_coverage\n";
      if (metric == "piaw") os << "model,coverage,piaw,piaw_normalized\n";
      if (metric == "crps") os << "model,instances,mean_crps,mean_entropy\n";
      if (metric == "entropy") os << "model,bin_lower,bin_upper,count\n";
    }
    return os;
  };
  using text::format_double;
  for (const LabeledReport& lr : reports) {
    for (const HorizonReport& h : lr.report.horizons) {
      for (const CoverageRow& row : h.coverage) {
        table(h.horizon, "reliability") << lr.label << ',' << format_double(row.coverage) << ','
                                        << format_double(row.reliability_bias) << ','
                                        << format_double(row.observed_coverage) << '\n';
        table(h.horizon, "piaw") << lr.label << ',' << format_double(row.coverage) << ',' << format_double(row.piaw)
                                 << ',' << format_double(row.piaw_normalized) << '\n';
      }
      table(h.horizon, "crps") << lr.label << ',' << h.instances << ',' << format_double(h.mean_crps) << ','
                               << format_double(h.mean_entropy) << '\n';
      for (std::size_t b = 0; b < h.entropy_counts.size(); ++b)
        table(h.horizon, "entropy") << lr.label << ',' << format_double(h.entropy_edges[b]) << ','
                                    << format_double(h.entropy_edges[b + 1]) << ',' << h.entropy_counts[b] << '\n';
    }
  }
  std::vector<std::string> written;
  for (auto& [h, metrics] : tables) {
    for (auto& [metric, os] : metrics) {
      const std::string path = (fs::path(dir) / ("report_" + metric + "_" + std::to_string(h) + ".csv")).string();
      text::write_file(path, os.str());
      written.push_back(path);
    }
  }
  return written;
}

std::string report_summary(std::span<const LabeledReport> reports) {
  std::ostringstream os;
  for (const LabeledReport& lr : reports) {
    for (const HorizonReport& h : lr.report.horizons) {
      double abs_bias = 0.0;
      for (const CoverageRow& row : h.coverage) abs_bias += std::fabs(row.reliability_bias);
      if (!h.coverage.empty()) abs_bias /= static_cast<double>(h.coverage.size());
      os << lr.label << " horizon=" << h.horizon << " instances=" << h.instances
         << " mean_crps=" << text::format_double(h.mean_crps)
         << " mean_abs_reliability_bias=" << text::format_double(abs_bias)
         << " mean_entropy=" << text::format_double(h.mean_entropy);
      for (const CoverageRow& row : h.coverage) {
        if (std::fabs(row.coverage - 0.9) < 1e-12) {
          os << " coverage90=" << text::format_double(row.observed_coverage)
             << " piaw90=" << text::format_double(row.piaw);
        }
      }
      os << '\n';
    }
  }
  return os.str();
}

}  // namespace cgae
