#pragma once

// Reference computations used by the tests. Each one takes a different
// computational route from the library code it checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cgae/graph.hpp"
#include "cgae/tensor.hpp"

namespace oracle {

using cgae::Tensor;

// Random symmetric nonnegative adjacency with roughly `density` of the pairs
// connected. Every node gets at least one edge when `connected` is set.
inline cgae::Graph random_graph(std::mt19937_64& gen, std::size_t n, double density, bool connected = true) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Tensor a({n, n}, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (u(gen) < density) a(i, j) = a(j, i) = 0.1 + 2.0 * u(gen);
  if (connected) {
    for (std::size_t i = 0; i < n; ++i) {
      bool any = false;
      for (std::size_t j = 0; j < n; ++j) any = any || a(i, j) > 0.0;
      if (!any && n > 1) {
        const std::size_t j = (i + 1) % n;
        a(i, j) = a(j, i) = 0.5 + u(gen);
      }
    }
  }
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back("n" + std::to_string(i));
  return cgae::Graph(a, ids);
}

inline Tensor random_matrix(std::mt19937_64& gen, std::size_t r, std::size_t c, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t({r, c});
  for (double& v : t.storage()) v = u(gen);
  return t;
}

// L = I - D^-1/2 A D^-1/2 written out entry by entry.
inline Tensor laplacian(const cgae::Graph& g) {
  const std::size_t n = g.node_count();
  std::vector<double> d(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) d[i] += g.weight(i, j);
  Tensor l({n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      l(i, j) = (i == j ? 1.0 : 0.0) - g.weight(i, j) / std::sqrt(d[i] * d[j]);
  return l;
}

// Two-sided Jacobi rotations with the classical largest-element pivot; a
// different sweep order from the library's cyclic solver.
inline void eigen_symmetric(Tensor a, std::vector<double>& values, Tensor& vectors) {
  const std::size_t n = a.rows();
  vectors = Tensor::identity(n);
  for (int iter = 0; iter < 10000; ++iter) {
    std::size_t p = 0, q = 1;
    double big = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (std::fabs(a(i, j)) > big) {
          big = std::fabs(a(i, j));
          p = i;
          q = j;
        }
    if (n < 2 || big < 1e-15) break;
    const double theta = 0.5 * std::atan2(2.0 * a(p, q), a(q, q) - a(p, p));
    const double c = std::cos(theta), s = std::sin(theta);
    for (std::size_t k = 0; k < n; ++k) {
      const double akp = a(k, p), akq = a(k, q);
      a(k, p) = c * akp - s * akq;
      a(k, q) = s * akp + c * akq;
    }
    for (std::size_t k = 0; k < n; ++k) {
      const double apk = a(p, k), aqk = a(q, k);
      a(p, k) = c * apk - s * aqk;
      a(q, k) = s * apk + c * aqk;
    }
    for (std::size_t k = 0; k < n; ++k) {
      const double vkp = vectors(k, p), vkq = vectors(k, q);
      vectors(k, p) = c * vkp - s * vkq;
      vectors(k, q) = s * vkp + c * vkq;
    }
  }
  values.resize(n);
  for (std::size_t i = 0; i < n; ++i) values[i] = a(i, i);
}

// Scalar Chebyshev polynomial by the trigonometric / hyperbolic closed form.
inline double chebyshev_t(std::size_t j, double x) {
  if (std::fabs(x) <= 1.0) return std::cos(static_cast<double>(j) * std::acos(x));
  const double s = (x > 0.0 || j % 2 == 0) ? 1.0 : -1.0;
  return s * std::cosh(static_cast<double>(j) * std::acosh(std::fabs(x)));
}

// U diag(sum_j omega_j T_j(2 lambda / gamma - 1)) U^T signal.
inline Tensor chebyshev_spectral(const cgae::Graph& g, const Tensor& signal, std::span<const double> omega,
                                 double gamma_max) {
  std::vector<double> lam;
  Tensor u;
  eigen_symmetric(laplacian(g), lam, u);
  const std::size_t n = g.node_count();
  Tensor h({n, n}, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double x = 2.0 * lam[k] / gamma_max - 1.0;
    double gk = 0.0;
    for (std::size_t j = 0; j < omega.size(); ++j) gk += omega[j] * chebyshev_t(j, x);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) h(r, c) += u(r, k) * gk * u(c, k);
  }
  return cgae::matmul(h, signal);
}

inline double largest_laplacian_eigenvalue(const cgae::Graph& g) {
  std::vector<double> lam;
  Tensor u;
  eigen_symmetric(laplacian(g), lam, u);
  return *std::max_element(lam.begin(), lam.end());
}

// Trapezoidal integration of (F(x) - H(x - v))^2 over
// [min - 5 range, max + 5 range] on a uniform grid of 1e-9 spacing (at least
// 1e5 points) for the empirical step CDF F. Each jump of the integrand costs
// at most one spacing of error. The integrand is constant between the
// samples and v, so the grid sum is accumulated one constant run at a time:
// a run contributes its value times the number of grid points inside it.
inline double crps_trapezoid(std::vector<double> xs, double v) {
  std::sort(xs.begin(), xs.end());
  const double lo0 = std::min(xs.front(), v), hi0 = std::max(xs.back(), v);
  double range = hi0 - lo0;
  if (range == 0.0) range = 1.0;
  const double lo = lo0 - 5.0 * range, hi = hi0 + 5.0 * range;
  const double n = std::max(1e5, std::ceil((hi - lo) / 1e-9));
  const double h = (hi - lo) / n;
  // Grid points x_k = lo + k h, k = 0..n, strictly left of b.
  auto points_before = [&](double b) { return std::clamp(std::ceil((b - lo) / h), 0.0, n + 1.0); };
  const double m = static_cast<double>(xs.size());
  auto integrand = [&](double x) {
    const double f = static_cast<double>(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin()) / m;
    const double step = x >= v ? 1.0 : 0.0;
    return (f - step) * (f - step);
  };
  std::vector<double> breaks = xs;
  breaks.push_back(v);
  breaks.push_back(hi + h);
  std::sort(breaks.begin(), breaks.end());
  double sum = 0.0;
  double from = lo;
  for (double b : breaks) {
    if (b <= from) continue;
    sum += integrand(from) * (points_before(b) - points_before(from));
    from = b;
  }
  sum -= 0.5 * integrand(lo) + 0.5 * integrand(hi);
  return sum * h;
}

// Monte-Carlo estimate of KL(N(mu, diag e^lv) || N(0, I)) as the mean of
// log q(z) - log p(z) over z ~ q. Draws come in antithetic pairs.
inline double kl_monte_carlo(std::span<const double> mu, std::span<const double> logvar, std::size_t draws,
                             std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t d = mu.size();
  std::vector<double> eps(d);
  double total = 0.0;
  auto term = [&](double sign) {
    double r = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double sd = std::exp(0.5 * logvar[i]);
      const double z = mu[i] + sd * sign * eps[i];
      const double log_q = -0.5 * std::log(2.0 * M_PI) - 0.5 * logvar[i] - 0.5 * eps[i] * eps[i];
      const double log_p = -0.5 * std::log(2.0 * M_PI) - 0.5 * z * z;
      r += log_q - log_p;
    }
    return r;
  };
  for (std::size_t k = 0; k < draws / 2; ++k) {
    for (double& e : eps) e = normal(gen);
    total += term(1.0) + term(-1.0);
  }
  return total / static_cast<double>(2 * (draws / 2));
}

// Central difference of f at the given entry.
inline double central_difference(const std::function<double()>& f, double& entry, double step) {
  const double saved = entry;
  entry = saved + step;
  const double up = f();
  entry = saved - step;
  const double down = f();
  entry = saved;
  return (up - down) / (2.0 * step);
}

inline double relative_error(double a, double b) {
  const double scale = std::max({std::fabs(a), std::fabs(b), 1e-8});
  return std::fabs(a - b) / scale;
}

}  // namespace oracle
