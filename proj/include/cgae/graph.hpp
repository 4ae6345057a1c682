#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cgae/tensor.hpp"

namespace cgae {

// Undirected weighted graph over measurement sites. The adjacency is a dense
// n x n symmetric matrix with zero diagonal and nonnegative weights.
class Graph {
 public:
  Graph() = default;
  // Validates symmetry, zero diagonal and nonnegativity.
  Graph(Tensor adjacency, std::vector<std::string> node_ids);

  static Graph edgeless(std::vector<std::string> node_ids);

  std::size_t node_count() const { return node_ids_.size(); }
  const Tensor& adjacency() const { return adjacency_; }
  const std::vector<std::string>& node_ids() const { return node_ids_; }
  double weight(std::size_t i, std::size_t j) const { return adjacency_(i, j); }
  std::vector<double> degrees() const;
  std::size_t edge_count() const;

 private:
  Tensor adjacency_;
  std::vector<std::string> node_ids_;
};

struct SymmetricEigen {
  std::vector<double> eigenvalues;  // ascending
  Tensor eigenvectors;              // column k pairs with eigenvalues[k]
  std::size_t sweeps = 0;
};

// Cyclic Jacobi rotations; stops once the off-diagonal Frobenius norm drops
// below `tolerance`.
SymmetricEigen jacobi_eigen(const Tensor& symmetric, double tolerance = 1e-12,
                            std::size_t max_sweeps = 100);

struct SpectralDecomposition {
  std::vector<double> eigenvalues;  // ascending
  Tensor eigenvectors;              // orthonormal columns
  double gamma_max = 0.0;
};

struct Laplacian {
  Tensor matrix;  // I - D^-1/2 A D^-1/2
  SpectralDecomposition spectrum;
};

Laplacian normalized_laplacian(const Graph& g);

// D^-1/2 A D^-1/2 (the normalized adjacency). Requires positive degrees.
Tensor normalized_adjacency(const Graph& g);

// sum_j omega_j P_j((2 / gamma_max) L - I) signal, using the Chebyshev
// recurrence on the signal. gamma_max defaults to the largest Laplacian
// eigenvalue; pass 2.0 to reproduce the first-order simplification.
Tensor chebyshev_filter(const Laplacian& laplacian, const Tensor& signal,
                        std::span<const double> omega,
                        std::optional<double> gamma_max = std::nullopt);
Tensor chebyshev_filter(const Graph& g, const Tensor& signal, std::span<const double> omega,
                        std::optional<double> gamma_max = std::nullopt);

// delta * (I + D^-1/2 A D^-1/2) signal.
Tensor first_order_filter(const Graph& g, const Tensor& signal, double delta);

// M = D~^-1/2 (A + I) D~^-1/2 with D~_ii = sum_j (A + I)_ij.
Tensor renormalized_propagation(const Graph& g);

// Edge weight |r| between every pair whose Pearson correlation satisfies
// |r| >= threshold. `series` holds one aligned sequence per node; missing
// entries (NaN) are skipped pairwise.
Graph build_graph_from_correlation(std::span<const std::vector<double>> series,
                                   std::vector<std::string> node_ids, double threshold);

struct GeoPoint {
  double latitude = 0.0;
  double longitude = 0.0;
};

double great_circle_km(GeoPoint a, GeoPoint b);

// Gaussian distance kernel exp(-d^2 / s^2) with d in km; weights below
// `threshold` are dropped.
Graph build_graph_from_distance(std::span<const GeoPoint> points, std::vector<std::string> node_ids,
                                double scale_km, double threshold);

// Edge-list text format:
//   # graph n=<count>
//   # nodes <id>,<id>,...
//   <node_a>,<node_b>,<weight>
// one line per undirected edge (a listed before b in node order).
void write_edge_list(const Graph& g, const std::string& path);
Graph read_edge_list(const std::string& path);

}  // namespace cgae
