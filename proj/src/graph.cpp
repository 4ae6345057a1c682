#include "cgae/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "cgae/errors.hpp"
#include "cgae/text.hpp"

namespace cgae {

Graph::Graph(Tensor adjacency, std::vector<std::string> node_ids)
    : adjacency_(std::move(adjacency)), node_ids_(std::move(node_ids)) {
  const std::size_t n = node_ids_.size();
  if (adjacency_.rank() != 2 || adjacency_.rows() != n || adjacency_.cols() != n) {
    throw DimensionError("adjacency of shape " + shape_string(adjacency_.shape()) + " for " +
                         std::to_string(n) + " nodes");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (adjacency_(i, i) != 0.0) throw DataError("adjacency diagonal must be zero at node " + node_ids_[i]);
    for (std::size_t j = 0; j < n; ++j) {
      const double w = adjacency_(i, j);
      if (!std::isfinite(w) || w < 0.0) {
        throw DataError("edge weight between " + node_ids_[i] + " and " + node_ids_[j] +
                        " must be finite and nonnegative");
      }
      if (w != adjacency_(j, i)) {
        throw DataError("adjacency is not symmetric between " + node_ids_[i] + " and " + node_ids_[j]);
      }
    }
  }
}

Graph Graph::edgeless(std::vector<std::string> node_ids) {
  const std::size_t n = node_ids.size();
  return Graph(Tensor({n, n}), std::move(node_ids));
}

std::vector<double> Graph::degrees() const {
  const std::size_t n = node_count();
  std::vector<double> deg(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) deg[i] += adjacency_(i, j);
  return deg;
}

std::size_t Graph::edge_count() const {
  std::size_t count = 0;
  for (std::size_t i = 0; i < node_count(); ++i)
    for (std::size_t j = i + 1; j < node_count(); ++j)
      if (adjacency_(i, j) != 0.0) ++count;
  return count;
}

SymmetricEigen jacobi_eigen(const Tensor& symmetric, double tolerance, std::size_t max_sweeps) {
  if (symmetric.rank() != 2 || symmetric.rows() != symmetric.cols()) {
    throw DimensionError("jacobi_eigen: expected a square matrix, got " + shape_string(symmetric.shape()));
  }
  const std::size_t n = symmetric.rows();
  Tensor a = symmetric;
  Tensor v = Tensor::identity(n);
  const double scale = std::max(1.0, frobenius_norm(a));

  auto off_diagonal = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  std::size_t sweep = 0;
  for (; sweep < max_sweeps && off_diagonal() >= tolerance * scale; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
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
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (off_diagonal() >= tolerance * scale) {
    throw DomainError("jacobi_eigen: no convergence after " + std::to_string(max_sweeps) + " sweeps");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });

  SymmetricEigen out;
  out.sweeps = sweep;
  out.eigenvalues.resize(n);
  out.eigenvectors = Tensor({n, n});
  for (std::size_t k = 0; k < n; ++k) {
    out.eigenvalues[k] = a(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, k) = v(i, order[k]);
  }
  return out;
}

Tensor normalized_adjacency(const Graph& g) {
  const std::size_t n = g.node_count();
  const std::vector<double> deg = g.degrees();
  for (std::size_t i = 0; i < n; ++i) {
    if (!(deg[i] > 0.0)) {
      throw DomainError("node " + g.node_ids()[i] +
                        " has zero degree; the normalized Laplacian is undefined (use the "
                        "renormalized propagation matrix instead)");
    }
  }
  Tensor out({n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) = g.weight(i, j) / std::sqrt(deg[i] * deg[j]);
  return out;
}

Laplacian normalized_laplacian(const Graph& g) {
  const std::size_t n = g.node_count();
  Tensor l = scale(normalized_adjacency(g), -1.0);
  for (std::size_t i = 0; i < n; ++i) l(i, i) += 1.0;
  // Exact symmetry keeps the eigensolver honest.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) l(j, i) = l(i, j);
  SymmetricEigen eig = jacobi_eigen(l);
  Laplacian out;
  out.matrix = std::move(l);
  out.spectrum.gamma_max = eig.eigenvalues.empty() ? 0.0 : eig.eigenvalues.back();
  out.spectrum.eigenvalues = std::move(eig.eigenvalues);
  out.spectrum.eigenvectors = std::move(eig.eigenvectors);
  return out;
}

Tensor chebyshev_filter(const Laplacian& laplacian, const Tensor& signal, std::span<const double> omega,
                        std::optional<double> gamma_max) {
  if (omega.empty()) throw UsageError("chebyshev_filter: at least one coefficient is required");
  const Tensor& l = laplacian.matrix;
  const std::size_t n = l.rows();
  if (signal.rank() != 2 || signal.rows() != n) {
    throw DimensionError("chebyshev_filter: signal " + shape_string(signal.shape()) + " for " +
                         std::to_string(n) + " nodes");
  }
  const double gamma = gamma_max.value_or(laplacian.spectrum.gamma_max);
  if (!(gamma > 0.0)) throw DomainError("chebyshev_filter: gamma_max must be positive");

  // X = (2 / gamma) L - I
  Tensor x = scale(l, 2.0 / gamma);
  for (std::size_t i = 0; i < n; ++i) x(i, i) -= 1.0;

  Tensor prev = signal;              // P_0(X) s
  Tensor out = scale(prev, omega[0]);
  if (omega.size() == 1) return out;
  Tensor curr = matmul(x, signal);   // P_1(X) s
  out = add(out, scale(curr, omega[1]));
  for (std::size_t j = 2; j < omega.size(); ++j) {
    Tensor next = sub(scale(matmul(x, curr), 2.0), prev);
    out = add(out, scale(next, omega[j]));
    prev = std::move(curr);
    curr = std::move(next);
  }
  return out;
}

Tensor chebyshev_filter(const Graph& g, const Tensor& signal, std::span<const double> omega,
                        std::optional<double> gamma_max) {
  return chebyshev_filter(normalized_laplacian(g), signal, omega, gamma_max);
}

Tensor first_order_filter(const Graph& g, const Tensor& signal, double delta) {
  Tensor op = normalized_adjacency(g);
  for (std::size_t i = 0; i < g.node_count(); ++i) op(i, i) += 1.0;
  return scale(matmul(op, signal), delta);
}

Tensor renormalized_propagation(const Graph& g) {
  const std::size_t n = g.node_count();
  std::vector<double> deg = g.degrees();
  for (double& d : deg) d += 1.0;
  Tensor m({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double a = g.weight(i, j) + (i == j ? 1.0 : 0.0);
      m(i, j) = a / std::sqrt(deg[i] * deg[j]);
    }
  }
  return m;
}

Graph build_graph_from_correlation(std::span<const std::vector<double>> series,
                                   std::vector<std::string> node_ids, double threshold) {
  const std::size_t n = series.size();
  if (n < 2) throw UsageError("correlation graph needs at least 2 nodes");
  if (node_ids.size() != n) throw DimensionError("node id count does not match series count");
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw UsageError("correlation threshold must lie in [0, 1]");
  const std::size_t len = series[0].size();
  for (std::size_t i = 0; i < n; ++i) {
    if (series[i].size() != len) throw DimensionError("series for node " + node_ids[i] + " is not aligned");
  }
  if (len < 3) throw UsageError("correlation graph needs series of length >= 3");

  Tensor adj({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double sx = 0, sy = 0;
      std::size_t count = 0;
      for (std::size_t t = 0; t < len; ++t) {
        const double x = series[i][t], y = series[j][t];
        if (std::isnan(x) || std::isnan(y)) continue;
        sx += x;
        sy += y;
        ++count;
      }
      if (count < 3) throw DataError("nodes " + node_ids[i] + " and " + node_ids[j] + " share fewer than 3 observations");
      const double mx = sx / static_cast<double>(count), my = sy / static_cast<double>(count);
      double sxx = 0, syy = 0, sxy = 0;
      for (std::size_t t = 0; t < len; ++t) {
        const double x = series[i][t], y = series[j][t];
        if (std::isnan(x) || std::isnan(y)) continue;
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
      }
      if (!(sxx > 0.0)) throw DomainError("series for node " + node_ids[i] + " has zero variance");
      if (!(syy > 0.0)) throw DomainError("series for node " + node_ids[j] + " has zero variance");
      const double r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
      const double w = std::fabs(r) >= threshold ? std::fabs(r) : 0.0;
      adj(i, j) = w;
      adj(j, i) = w;
    }
  }
  return Graph(std::move(adj), std::move(node_ids));
}

double great_circle_km(GeoPoint a, GeoPoint b) {
  constexpr double earth_radius_km = 6371.0088;
  const double to_rad = std::numbers::pi / 180.0;
  const double dlat = (b.latitude - a.latitude) * to_rad;
  const double dlon = (b.longitude - a.longitude) * to_rad;
  const double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(a.latitude * to_rad) * std::cos(b.latitude * to_rad) * std::sin(dlon / 2) *
                       std::sin(dlon / 2);
  return 2.0 * earth_radius_km * std::asin(std::min(1.0, std::sqrt(h)));
}

Graph build_graph_from_distance(std::span<const GeoPoint> points, std::vector<std::string> node_ids,
                                double scale_km, double threshold) {
  const std::size_t n = points.size();
  if (node_ids.size() != n) throw DimensionError("node id count does not match coordinate count");
  if (!(scale_km > 0.0)) throw UsageError("distance kernel scale must be positive");
  Tensor adj({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = great_circle_km(points[i], points[j]);
      double w = std::exp(-(d * d) / (scale_km * scale_km));
      if (w < threshold) w = 0.0;
      adj(i, j) = w;
      adj(j, i) = w;
    }
  }
  return Graph(std::move(adj), std::move(node_ids));
}

void write_edge_list(const Graph& g, const std::string& path) {
  std::ostringstream os;
  os << "# graph n=" << g.node_count() << '\n';
  os << "# nodes ";
  for (std::size_t i = 0; i < g.node_count(); ++i) os << (i ? "," : "") << g.node_ids()[i];
  os << '\n';
  for (std::size_t i = 0; i < g.node_count(); ++i)
    for (std::size_t j = i + 1; j < g.node_count(); ++j)
      if (g.weight(i, j) != 0.0)
        os << g.node_ids()[i] << ',' << g.node_ids()[j] << ',' << text::format_double(g.weight(i, j)) << '\n';
  text::write_file(path, os.str());
}

Graph read_edge_list(const std::string& path) {
  const auto lines = text::read_lines(path);
  if (lines.empty() || !text::starts_with(lines[0], "# graph n=")) {
    throw DataError(path + ": missing '# graph n=<count>' header");
  }
  const auto n = static_cast<std::size_t>(text::parse_int(std::string_view(lines[0]).substr(10), "node count"));
  std::vector<std::string> ids;
  std::size_t first_edge = 1;
  if (lines.size() > 1 && text::starts_with(lines[1], "# nodes ")) {
    ids = text::split(std::string_view(lines[1]).substr(8), ',');
    first_edge = 2;
  } else {
    for (std::size_t i = 0; i < n; ++i) ids.push_back(std::to_string(i));
  }
  if (ids.size() != n) throw DataError(path + ": header declares " + std::to_string(n) + " nodes but lists " + std::to_string(ids.size()));
  auto index_of = [&](const std::string& id) {
    auto it = std::find(ids.begin(), ids.end(), id);
    if (it == ids.end()) throw DataError(path + ": unknown node '" + id + "'");
    return static_cast<std::size_t>(it - ids.begin());
  };
  Tensor adj({n, n});
  for (std::size_t k = first_edge; k < lines.size(); ++k) {
    const auto line = text::trim(lines[k]);
    if (line.empty() || line.front() == '#') continue;
    const auto fields = text::split(line, ',');
    if (fields.size() != 3) throw DataError(path + ": expected node_a,node_b,weight on line " + std::to_string(k + 1));
    const std::size_t a = index_of(std::string(text::trim(fields[0])));
    const std::size_t b = index_of(std::string(text::trim(fields[1])));
    const double w = text::parse_double(fields[2], "edge weight");
    adj(a, b) = w;
    adj(b, a) = w;
  }
  return Graph(std::move(adj), std::move(ids));
}

}  // namespace cgae
