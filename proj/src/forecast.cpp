#include "cgae/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cgae/errors.hpp"
#include "cgae/text.hpp"

namespace cgae {

std::vector<double> ForecastEnsemble::node_samples(std::size_t node) const {
  std::vector<double> out(members());
  for (std::size_t s = 0; s < members(); ++s) out[s] = samples(s, node);
  return out;
}

ForecastEnsemble generate_ensemble(const CgaeModel& model, const Tensor& pi, std::size_t rho, Rng& rng,
                                   bool add_output_noise) {
  if (rho < 2) throw UsageError("generate_ensemble: rho must be >= 2 (got " + std::to_string(rho) + ")");
  const ModelConfig& c = model.config;
  const Tensor rg = gfenn_forward(model, scale(pi, 1.0 / c.scale));

  const std::size_t d = c.latent_dim;
  const std::size_t n = c.nodes;
  Tensor z({rho, d});
  Tensor eps;
  if (add_output_noise) eps = Tensor({rho, n});
  for (std::size_t s = 0; s < rho; ++s) {
    for (std::size_t j = 0; j < d; ++j) z(s, j) = rng.normal();
    if (add_output_noise)
      for (std::size_t i = 0; i < n; ++i) eps(s, i) = rng.normal();
  }

  Tensor out = decode_batch(model, rg, z);
  for (std::size_t s = 0; s < rho; ++s) {
    for (std::size_t i = 0; i < n; ++i) {
      double v = out(s, i);
      if (add_output_noise) v += c.sigma_dec * eps(s, i);
      v *= c.scale;
      out(s, i) = v > 0.0 ? v : 0.0;
    }
  }
  ForecastEnsemble ens;
  ens.samples = std::move(out);
  return ens;
}

double empirical_quantile(std::span<const double> sorted, double level) {
  if (sorted.empty()) throw UsageError("empirical_quantile: no samples");
  if (!(level > 0.0 && level < 1.0)) throw UsageError("empirical_quantile: level must lie in (0, 1)");
  const double h = level * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

QuantileForecast empirical_quantiles(const ForecastEnsemble& ens, std::span<const double> levels) {
  for (std::size_t k = 0; k < levels.size(); ++k) {
    if (!(levels[k] > 0.0 && levels[k] < 1.0)) throw UsageError("quantile levels must lie in (0, 1)");
    if (k && !(levels[k] >= levels[k - 1])) throw UsageError("quantile levels must be sorted");
  }
  QuantileForecast q;
  q.levels.assign(levels.begin(), levels.end());
  q.values = Tensor({ens.nodes(), std::max<std::size_t>(1, levels.size())});
  if (levels.empty()) {
    q.values = Tensor();
    return q;
  }
  for (std::size_t i = 0; i < ens.nodes(); ++i) {
    std::vector<double> xs = ens.node_samples(i);
    std::sort(xs.begin(), xs.end());
    for (std::size_t k = 0; k < levels.size(); ++k) {
      double v = empirical_quantile(xs, levels[k]);
      if (k && v < q.values(i, k - 1)) v = q.values(i, k - 1);
      q.values(i, k) = v;
    }
  }
  return q;
}

ForecastEnsemble persistence_ensemble(std::span<const std::vector<double>> history, std::size_t target_index,
                                      std::size_t horizon, std::size_t member_days, std::size_t steps_per_day) {
  if (member_days < 1) throw UsageError("persistence_ensemble: member_days must be >= 1");
  if (history.empty()) throw UsageError("persistence_ensemble: no node series");
  if (horizon > steps_per_day) {
    throw UsageError("persistence_ensemble: horizon exceeds one day, so yesterday's value is not yet observed");
  }
  const std::size_t span = member_days * steps_per_day;
  if (target_index < span) {
    throw DataError("persistence_ensemble: need " + std::to_string(span) + " steps (" + std::to_string(member_days) +
                    " days) of history before the target, have " + std::to_string(target_index));
  }
  const std::size_t n = history.size();
  for (const auto& s : history)
    if (s.size() <= target_index - steps_per_day) throw DataError("persistence_ensemble: history does not reach the target");

  // Keep only days observed at every node so members stay aligned across nodes.
  std::vector<std::size_t> days;
  for (std::size_t dday = 1; dday <= member_days; ++dday) {
    const std::size_t idx = target_index - dday * steps_per_day;
    bool ok = true;
    for (std::size_t i = 0; i < n; ++i) ok = ok && !std::isnan(history[i][idx]);
    if (ok) days.push_back(idx);
  }
  if (days.empty()) throw DataError("persistence_ensemble: every member day is missing");

  ForecastEnsemble ens;
  ens.horizon = horizon;
  ens.samples = Tensor({days.size(), n});
  for (std::size_t s = 0; s < days.size(); ++s)
    for (std::size_t i = 0; i < n; ++i) ens.samples(s, i) = history[i][days[s]];
  return ens;
}

void write_ensemble_csv(const ForecastEnsemble& ens, std::span<const std::string> node_ids, const std::string& path) {
  if (node_ids.size() != ens.nodes()) throw DimensionError("write_ensemble_csv: node id count mismatch");
  std::ostringstream os;
  os << "node_id,sample_index,value\n";
  for (std::size_t i = 0; i < ens.nodes(); ++i)
    for (std::size_t s = 0; s < ens.members(); ++s)
      os << node_ids[i] << ',' << s << ',' << text::format_double(ens.samples(s, i)) << '\n';
  text::write_file(path, os.str());
}

void write_quantiles_csv(const QuantileForecast& q, std::span<const std::string> node_ids, const std::string& path) {
  std::ostringstream os;
  os << "node_id,level,value\n";
  if (!q.levels.empty()) {
    if (node_ids.size() != q.values.rows()) throw DimensionError("write_quantiles_csv: node id count mismatch");
    for (std::size_t i = 0; i < q.values.rows(); ++i)
      for (std::size_t k = 0; k < q.levels.size(); ++k)
        os << node_ids[i] << ',' << text::format_double(q.levels[k]) << ',' << text::format_double(q.values(i, k))
           << '\n';
  }
  text::write_file(path, os.str());
}

}  // namespace cgae
