#include "cgae/features.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cgae/errors.hpp"
#include "cgae/text.hpp"

namespace cgae {

namespace {

struct Binner {
  double lo = 0.0;
  double width = 0.0;
  std::size_t bins = 0;

  Binner(std::span<const double> v, std::size_t b) : bins(b) {
    const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    lo = *mn;
    width = *mx - *mn;
  }
  bool degenerate() const { return !(width > 0.0); }
  std::size_t operator()(double v) const {
    const double u = (v - lo) / width * static_cast<double>(bins);
    if (!(u > 0.0)) return 0;
    return std::min(bins - 1, static_cast<std::size_t>(u));
  }
};

// Sums in ascending order so the result does not depend on the order in
// which cells were visited.
double ordered_sum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  double s = 0.0;
  for (double t : terms) s += t;
  return s;
}

void check_finite(std::span<const double> v, const char* name) {
  for (double x : v)
    if (!std::isfinite(x)) throw DomainError(std::string("mutual_information: non-finite value in ") + name);
}

}  // namespace

MutualInformation mutual_information(std::span<const double> x, std::span<const double> y, std::size_t bins) {
  if (bins == 0) throw UsageError("mutual_information: bins must be positive");
  if (x.size() != y.size()) {
    throw DimensionError("mutual_information: lengths " + std::to_string(x.size()) + " and " +
                         std::to_string(y.size()) + " differ");
  }
  if (x.size() < 2 * bins) {
    throw UsageError("mutual_information: need at least " + std::to_string(2 * bins) + " samples, got " +
                     std::to_string(x.size()));
  }
  check_finite(x, "x");
  check_finite(y, "y");
  const Binner bx(x, bins), by(y, bins);
  if (bx.degenerate() || by.degenerate()) return {0.0, true};

  std::vector<std::size_t> joint(bins * bins, 0), cx(bins, 0), cy(bins, 0);
  for (std::size_t t = 0; t < x.size(); ++t) {
    const std::size_t a = bx(x[t]), b = by(y[t]);
    ++joint[a * bins + b];
    ++cx[a];
    ++cy[b];
  }
  const double n = static_cast<double>(x.size());
  std::vector<double> terms;
  for (std::size_t a = 0; a < bins; ++a) {
    for (std::size_t b = 0; b < bins; ++b) {
      const std::size_t c = joint[a * bins + b];
      if (c == 0) continue;
      const double cab = static_cast<double>(c);
      const double marg = static_cast<double>(cx[a]) * static_cast<double>(cy[b]);
      terms.push_back(cab / n * std::log(cab * n / marg));
    }
  }
  const double mi = ordered_sum(terms);
  return {mi < 0.0 ? 0.0 : mi, false};
}

double histogram_entropy(std::span<const double> x, std::size_t bins) {
  if (x.empty() || bins == 0) throw UsageError("histogram_entropy: empty input");
  const Binner bx(x, bins);
  if (bx.degenerate()) return 0.0;
  std::vector<std::size_t> counts(bins, 0);
  for (double v : x) ++counts[bx(v)];
  const double n = static_cast<double>(x.size());
  std::vector<double> terms;
  for (std::size_t c : counts)
    if (c) terms.push_back(static_cast<double>(c) / n * std::log(n / static_cast<double>(c)));
  return ordered_sum(terms);
}

namespace {

std::vector<LagScore> pooled_profile(const std::vector<std::span<const double>>& parts, std::size_t max_lag,
                                     std::size_t bins) {
  std::size_t longest = 0;
  for (const auto& p : parts) longest = std::max(longest, p.size());
  if (longest <= max_lag + 1) {
    throw UsageError("lag_profile: series of length " + std::to_string(longest) +
                     " is too short for max_lag " + std::to_string(max_lag));
  }
  std::vector<LagScore> out;
  out.reserve(max_lag);
  std::vector<double> now, past;
  for (std::size_t lag = 1; lag <= max_lag; ++lag) {
    now.clear();
    past.clear();
    for (const auto& series : parts) {
      for (std::size_t t = lag; t < series.size(); ++t) {
        if (std::isnan(series[t]) || std::isnan(series[t - lag])) continue;
        now.push_back(series[t]);
        past.push_back(series[t - lag]);
      }
    }
    out.push_back({lag, mutual_information(now, past, bins).nats});
  }
  return out;
}

LagSet threshold_profile(const std::vector<LagScore>& profile, std::size_t max_lag, double tau) {
  LagSet out;
  out.tau = tau;
  out.max_lag = max_lag;
  double best = 0.0;
  for (const LagScore& s : profile) {
    best = std::max(best, s.mi);
    if (s.mi >= tau) out.lags.push_back(s.lag);
  }
  if (out.lags.empty()) {
    std::ostringstream os;
    os << "select_lags: no lag reaches tau = " << tau << " (largest MI is " << best
       << " nats); choose a lower tau";
    throw UsageError(os.str());
  }
  return out;
}

void check_lag_args(std::size_t max_lag, double tau) {
  if (max_lag == 0) throw UsageError("select_lags: max_lag must be >= 1");
  if (!(tau >= 0.0)) throw UsageError("select_lags: tau must be >= 0");
}

}  // namespace

std::vector<LagScore> lag_profile(std::span<const double> series, std::size_t max_lag, std::size_t bins) {
  return pooled_profile({series}, max_lag, bins);
}

std::vector<LagScore> lag_profile(std::span<const std::vector<double>> pooled, std::size_t max_lag,
                                  std::size_t bins) {
  std::vector<std::span<const double>> parts(pooled.begin(), pooled.end());
  return pooled_profile(parts, max_lag, bins);
}

std::vector<LagScore> rank_lags(std::vector<LagScore> profile) {
  auto key = [](double mi) { return std::llround(mi * 1e12); };
  std::stable_sort(profile.begin(), profile.end(), [&](const LagScore& a, const LagScore& b) {
    const auto ka = key(a.mi), kb = key(b.mi);
    if (ka != kb) return ka > kb;
    return a.lag < b.lag;
  });
  return profile;
}

LagSet select_lags(std::span<const double> series, std::size_t max_lag, double tau, std::size_t bins) {
  check_lag_args(max_lag, tau);
  return threshold_profile(lag_profile(series, max_lag, bins), max_lag, tau);
}

LagSet select_lags(std::span<const std::vector<double>> pooled, std::size_t max_lag, double tau,
                   std::size_t bins) {
  check_lag_args(max_lag, tau);
  return threshold_profile(lag_profile(pooled, max_lag, bins), max_lag, tau);
}

void write_lag_set(const LagSet& lags, const std::string& path) {
  std::string line;
  for (std::size_t i = 0; i < lags.lags.size(); ++i) {
    if (i) line += ',';
    line += std::to_string(lags.lags[i]);
  }
  text::write_file(path, line + '\n');
}

LagSet read_lag_set(const std::string& path) {
  const auto lines = text::read_lines(path);
  LagSet out;
  for (const auto& line : lines) {
    const auto body = text::trim(line);
    if (body.empty() || body.front() == '#') continue;
    for (const auto& field : text::split(body, ',')) {
      const long long lag = text::parse_int(field, "lag");
      if (lag < 1) throw DataError(path + ": lags must be positive");
      if (!out.lags.empty() && static_cast<std::size_t>(lag) <= out.lags.back()) {
        throw DataError(path + ": lags must be strictly increasing");
      }
      out.lags.push_back(static_cast<std::size_t>(lag));
    }
    break;
  }
  if (out.lags.empty()) throw DataError(path + ": empty lag set");
  out.max_lag = out.lags.back();
  return out;
}

Dataset build_examples(std::span<const std::vector<double>> series, const LagSet& lags, std::size_t horizon,
                       std::size_t split_index) {
  if (horizon < 1) throw UsageError("build_examples: horizon must be >= 1");
  if (series.empty()) throw UsageError("build_examples: no node series");
  if (lags.lags.empty()) throw UsageError("build_examples: empty lag set");
  const std::size_t n = series.size();
  const std::size_t len = series[0].size();
  for (const auto& s : series)
    if (s.size() != len) throw DimensionError("build_examples: node series are not aligned");
  const std::size_t max_lag = lags.largest();
  const std::size_t f = lags.lags.size();
  if (len < max_lag + horizon) {
    throw DataError("build_examples: series of length " + std::to_string(len) + " is too short; need at least " +
                    std::to_string(max_lag + horizon) + " steps for max lag " + std::to_string(max_lag) +
                    " and horizon " + std::to_string(horizon));
  }

  Dataset out;
  out.horizon = horizon;
  out.lags = lags.lags;
  for (std::size_t origin = max_lag - 1; origin + horizon < len; ++origin) {
    Example ex;
    ex.origin = origin;
    ex.pi = Tensor({n, f});
    ex.target = Tensor({n});
    bool complete = true;
    for (std::size_t i = 0; i < n && complete; ++i) {
      for (std::size_t c = 0; c < f; ++c) {
        const double v = series[i][origin + 1 - lags.lags[c]];
        if (std::isnan(v)) {
          complete = false;
          break;
        }
        ex.pi(i, c) = v;
      }
      const double y = series[i][origin + horizon];
      if (std::isnan(y)) complete = false;
      ex.target[i] = y;
    }
    if (!complete) continue;
    (origin + horizon < split_index ? out.train : out.test).push_back(std::move(ex));
  }
  return out;
}

}  // namespace cgae
