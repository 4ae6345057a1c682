#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "cgae/errors.hpp"
#include "cgae/forecast.hpp"
#include "cgae/graph.hpp"
#include "cgae/text.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "temp_dir.hpp"

using namespace cgae;

namespace {

CgaeModel make_model(std::size_t n, std::size_t f, std::uint64_t seed, double scale = 1.0) {
  ModelConfig c;
  c.nodes = n;
  c.features = f;
  c.latent_dim = 3;
  c.gfenn_layers = 2;
  c.encoder_layers = 2;
  c.decoder_layers = 2;
  c.gfenn_width = 3;
  c.sigma_dec = 0.05;
  c.scale = scale;
  std::mt19937_64 gen(seed);
  const Graph g = oracle::random_graph(gen, n, 0.5);
  Rng rng(seed);
  return CgaeModel::initialize(c, renormalized_propagation(g), g.node_ids(), rng);
}

ForecastEnsemble ensemble_of(std::vector<double> values) {
  ForecastEnsemble e;
  const std::size_t n = values.size();
  e.samples = Tensor({n, 1}, std::move(values));
  return e;
}

}  // namespace

TEST_CASE("generate_ensemble: constant decoder gives a constant ensemble") {
  CgaeModel m = make_model(3, 2, 1, 800.0);
  m.output.weight = zeros_like(m.output.weight);
  m.output.bias = Tensor::matrix({{0.25, 0.5, 0.75}});
  Rng rng(2);
  const ForecastEnsemble e = generate_ensemble(m, Tensor({3, 2}, 100.0), 500, rng);
  CHECK(e.members() == 500);
  CHECK(e.nodes() == 3);
  for (std::size_t s = 0; s < 500; ++s) {
    CHECK(e.samples(s, 0) == 200.0);
    CHECK(e.samples(s, 1) == 400.0);
    CHECK(e.samples(s, 2) == 600.0);
  }
}

TEST_CASE("generate_ensemble: default size, determinism, nonnegativity") {
  const CgaeModel m = make_model(4, 3, 3, 1000.0);
  std::mt19937_64 gen(3);
  const Tensor pi = oracle::random_matrix(gen, 4, 3, 0.0, 900.0);
  Rng a(7), b(7);
  const ForecastEnsemble e1 = generate_ensemble(m, pi, kDefaultEnsembleSize, a, true);
  const ForecastEnsemble e2 = generate_ensemble(m, pi, kDefaultEnsembleSize, b, true);
  CHECK(kDefaultEnsembleSize == 10000);
  CHECK(e1.members() == 10000);
  CHECK(e1.samples == e2.samples);
  CHECK(e1.samples.all_finite());
  for (double v : e1.samples.data()) CHECK(v >= 0.0);
}

TEST_CASE("generate_ensemble: rho < 2 is a usage error") {
  const CgaeModel m = make_model(2, 1, 4);
  Rng rng(1);
  CHECK_THROWS_AS((void)generate_ensemble(m, Tensor({2, 1}, 0.5), 1, rng), UsageError);
  CHECK_THROWS_AS((void)generate_ensemble(m, Tensor({2, 1}, 0.5), 0, rng), UsageError);
}

TEST_CASE("generate_ensemble: output noise variance is (sigma_dec * scale)^2") {
  CgaeModel m = make_model(3, 2, 5, 500.0);
  m.output.weight = zeros_like(m.output.weight);
  m.output.bias = Tensor({1, 3}, 0.6);
  Rng rng(6);
  const std::size_t rho = 10000;
  const ForecastEnsemble e = generate_ensemble(m, Tensor({3, 2}, 10.0), rho, rng, true);
  const double sd = 0.05 * 500.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto xs = e.node_samples(i);
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / rho;
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    const double var = ss / (rho - 1);
    CHECK(std::fabs(var - sd * sd) < 3.0 * sd * sd * std::sqrt(2.0 / (rho - 1)));
    CHECK(std::fabs(mean - 300.0) < 3.0 * sd / std::sqrt(static_cast<double>(rho)));
  }
}

TEST_CASE("generate_ensemble: equivariant to consistent node relabeling") {
  const std::size_t n = 4, f = 2;
  const CgaeModel m = make_model(n, f, 8, 700.0);
  const std::vector<std::size_t> perm{2, 0, 3, 1};  // new node i is old node perm[i]
  const std::size_t h = m.gfenn.back().cols();

  CgaeModel p = m;
  for (std::size_t i = 0; i < n; ++i) {
    p.node_ids[i] = m.node_ids[perm[i]];
    for (std::size_t j = 0; j < n; ++j) p.propagation(i, j) = m.propagation(perm[i], perm[j]);
  }
  // Rows of the first encoder and decoder layers that read R(G) (n blocks of
  // h) and, for the encoder, the target (n rows after them).
  auto permute_rows = [&](Tensor& w, const Tensor& src, bool with_target) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < h; ++k)
        for (std::size_t c = 0; c < w.cols(); ++c) w(i * h + k, c) = src(perm[i] * h + k, c);
      if (with_target)
        for (std::size_t c = 0; c < w.cols(); ++c) w(n * h + i, c) = src(n * h + perm[i], c);
    }
  };
  permute_rows(p.encoder[0].weight, m.encoder[0].weight, true);
  permute_rows(p.decoder[0].weight, m.decoder[0].weight, false);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < p.output.weight.rows(); ++r) p.output.weight(r, i) = m.output.weight(r, perm[i]);
    p.output.bias(0, i) = m.output.bias(0, perm[i]);
  }

  std::mt19937_64 gen(9);
  const Tensor pi = oracle::random_matrix(gen, n, f, 0.0, 700.0);
  Tensor ppi({n, f});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < f; ++c) ppi(i, c) = pi(perm[i], c);

  // Output noise is drawn in node order, so only the latent path is compared.
  Rng a(10), b(10);
  const ForecastEnsemble e = generate_ensemble(m, pi, 200, a);
  const ForecastEnsemble pe = generate_ensemble(p, ppi, 200, b);
  for (std::size_t s = 0; s < 200; ++s)
    for (std::size_t i = 0; i < n; ++i)
      CHECK(pe.samples(s, i) == doctest::Approx(e.samples(s, perm[i])).epsilon(1e-12).scale(1.0));
}

TEST_CASE("empirical quantiles: interpolation rule and examples") {
  std::vector<double> hundred(100);
  std::iota(hundred.begin(), hundred.end(), 1.0);
  CHECK(empirical_quantile(hundred, 0.5) == 50.5);
  CHECK(empirical_quantile(hundred, 0.1) == doctest::Approx(10.9));

  const std::vector<double> levels{0.05, 0.1, 0.5, 0.9, 0.95};
  const QuantileForecast c = empirical_quantiles(ensemble_of(std::vector<double>(50, 4.25)), levels);
  for (std::size_t k = 0; k < levels.size(); ++k) CHECK(c.values(0, k) == 4.25);
}

TEST_CASE("empirical quantiles are monotone in the level") {
  std::mt19937_64 gen(11);
  std::lognormal_distribution<double> d(0.0, 1.5);
  std::vector<double> levels;
  for (int k = 1; k < 100; ++k) levels.push_back(k / 100.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> xs(2 + trial * 7);
    for (double& x : xs) x = d(gen);
    const QuantileForecast q = empirical_quantiles(ensemble_of(xs), levels);
    for (std::size_t k = 1; k < levels.size(); ++k) CHECK(q.values(0, k) >= q.values(0, k - 1));
    CHECK(q.values(0, 9) <= q.values(0, 89));
  }
}

TEST_CASE("empirical quantiles: levels outside (0, 1) or unsorted are rejected") {
  const ForecastEnsemble e = ensemble_of({1, 2, 3});
  const std::vector<double> bad{0.0, 0.5}, unsorted{0.9, 0.1};
  CHECK_THROWS_AS((void)empirical_quantiles(e, bad), UsageError);
  CHECK_THROWS_AS((void)empirical_quantiles(e, unsorted), UsageError);
}

TEST_CASE("persistence ensemble: one day is classic persistence") {
  std::vector<double> s(200);
  for (std::size_t t = 0; t < s.size(); ++t) s[t] = static_cast<double>(t);
  const std::vector<std::vector<double>> h{s};
  const ForecastEnsemble e = persistence_ensemble(h, 150, 1, 1, 48);
  REQUIRE(e.members() == 1);
  CHECK(e.samples(0, 0) == 102.0);
}

TEST_CASE("persistence ensemble: constant history gives zero-width intervals") {
  const std::vector<std::vector<double>> h{std::vector<double>(48 * 25, 321.0), std::vector<double>(48 * 25, 5.0)};
  const ForecastEnsemble e = persistence_ensemble(h, 48 * 22, 1, 20, 48);
  CHECK(e.members() == 20);
  const std::vector<double> levels{0.05, 0.95};
  const QuantileForecast q = empirical_quantiles(e, levels);
  CHECK(q.values(0, 0) == 321.0);
  CHECK(q.values(0, 1) == 321.0);
  CHECK(q.values(1, 0) == q.values(1, 1));
}

TEST_CASE("persistence ensemble: diurnal sinusoid, 20 members") {
  const std::size_t days = 30, spd = 48;
  auto truth = [](std::size_t t) {
    const double hour = static_cast<double>(t % 48) / 2.0;
    return hour > 6.0 && hour < 18.0 ? 1000.0 * std::sin(M_PI * (hour - 6.0) / 12.0) : 0.0;
  };
  std::vector<double> s(days * spd);
  for (std::size_t t = 0; t < s.size(); ++t) s[t] = truth(t);
  const std::vector<std::vector<double>> h{s};
  for (std::size_t target = 21 * spd; target < days * spd; target += 7) {
    const ForecastEnsemble e = persistence_ensemble(h, target, 3, 20, spd);
    const auto xs = e.node_samples(0);
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    CHECK(std::fabs(mean - truth(target)) <= 0.01 * std::max(truth(target), 1e-300));
  }
}

TEST_CASE("persistence ensemble: members come from the same clock time") {
  std::mt19937_64 gen(12);
  std::vector<double> s(48 * 10);
  for (double& v : s) v = std::uniform_real_distribution<double>(0, 1)(gen);
  const std::vector<std::vector<double>> h{s};
  const ForecastEnsemble e = persistence_ensemble(h, 48 * 8 + 17, 2, 5, 48);
  for (std::size_t d = 1; d <= 5; ++d) CHECK(e.samples(d - 1, 0) == s[48 * 8 + 17 - d * 48]);
}

TEST_CASE("persistence ensemble: missing days are dropped; short history is an error") {
  std::vector<double> s(48 * 6, 1.0);
  s[48 * 5 - 48] = std::nan("");
  const std::vector<std::vector<double>> h{s};
  CHECK(persistence_ensemble(h, 48 * 5, 1, 3, 48).members() == 2);
  try {
    (void)persistence_ensemble(h, 48 * 2, 1, 3, 48);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("144") != std::string::npos);
  }
}

TEST_CASE("ensemble and quantile dumps") {
  TempDir dir;
  ForecastEnsemble e;
  e.samples = Tensor::matrix({{1.5, 2.0}, {0.25, 3.0}});
  const std::vector<std::string> ids{"a", "b"};
  write_ensemble_csv(e, ids, dir.file("e.csv"));
  CHECK(text::read_file(dir.file("e.csv")) == "node_id,sample_index,value\na,0,1.5\na,1,0.25\nb,0,2\nb,1,3\n");
  const std::vector<double> levels{0.5};
  write_quantiles_csv(empirical_quantiles(e, levels), ids, dir.file("q.csv"));
  CHECK(text::read_file(dir.file("q.csv")) == "node_id,level,value\na,0.5,0.875\nb,0.5,2.5\n");
}
