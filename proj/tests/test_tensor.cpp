#include <cmath>
#include <random>

#include "cgae/errors.hpp"
#include "cgae/rng.hpp"
#include "cgae/tensor.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace cgae;

TEST_CASE("matmul: identity, hand product, annihilator") {
  const Tensor x = Tensor::matrix({{1.5, -2.0}, {0.25, 7.0}});
  CHECK(matmul(Tensor::identity(2), x) == x);

  const Tensor p = matmul(Tensor::matrix({{1, 2}, {3, 4}}), Tensor::matrix({{5}, {6}}));
  CHECK(p.shape() == Tensor::Shape{2, 1});
  CHECK(p(0, 0) == 17.0);
  CHECK(p(1, 0) == 39.0);

  std::mt19937_64 gen(3);
  const Tensor z = matmul(Tensor({2, 3}, 0.0), oracle::random_matrix(gen, 3, 4));
  CHECK(z == Tensor({2, 4}, 0.0));
}

TEST_CASE("matmul: shape mismatch names both shapes") {
  try {
    (void)matmul(Tensor({2, 3}), Tensor({2, 3}));
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("2x3") != std::string::npos);
  }
}

TEST_CASE("matmul is associative on random 4x4 chains") {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor a = oracle::random_matrix(gen, 4, 4), b = oracle::random_matrix(gen, 4, 4),
                 c = oracle::random_matrix(gen, 4, 4);
    const Tensor left = matmul(matmul(a, b), c), right = matmul(a, matmul(b, c));
    CHECK(frobenius_norm(sub(left, right)) / frobenius_norm(left) < 1e-10);
  }
}

TEST_CASE("elementwise examples") {
  const Tensor x = Tensor::vector({1.0, -2.5, 3.25});
  CHECK(mul(x, ones_like(x)) == x);
  const Tensor e = exp(Tensor::vector({0.0, 1.0}));
  CHECK(e[0] == 1.0);
  CHECK(e[1] == doctest::Approx(2.718281828459045).epsilon(1e-15));
  CHECK(add(Tensor::vector({1, 2}), Tensor::vector({3, 4})) == Tensor::vector({4, 6}));
  CHECK(sub(Tensor::vector({1, 2}), Tensor::vector({3, 5})) == Tensor::vector({-2, -3}));
  CHECK(square(Tensor::vector({-3, 2})) == Tensor::vector({9, 4}));
  CHECK(log(Tensor::vector({1.0}))[0] == 0.0);
}

TEST_CASE("scalar broadcast only") {
  const Tensor x = Tensor::vector({1, 2, 3});
  CHECK(mul(Tensor::scalar(2.0), x) == Tensor::vector({2, 4, 6}));
  CHECK(add(x, Tensor::scalar(1.0)) == Tensor::vector({2, 3, 4}));
  CHECK_THROWS_AS((void)add(x, Tensor::vector({1, 2})), DimensionError);
  CHECK_THROWS_AS((void)mul(Tensor({2, 3}), Tensor({3, 2})), DimensionError);
}

TEST_CASE("log of non-positive entry is a domain error") {
  CHECK_THROWS_AS((void)log(Tensor::vector({1.0, 0.0})), DomainError);
  CHECK_THROWS_AS((void)log(Tensor::vector({-1.0})), DomainError);
}

TEST_CASE("relu definition") {
  CHECK(relu(Tensor::vector({-1, 0, 2})) == Tensor::vector({0, 0, 2}));
  CHECK(relu(Tensor::vector({-1, -5, -0.1})) == Tensor({3}, 0.0));
}

TEST_CASE("shape invariants") {
  const Tensor t({3, 4}, 1.0);
  CHECK(t.size() == shape_size(t.shape()));
  CHECK(t.reshaped({12}).shape() == Tensor::Shape{12});
  CHECK_THROWS_AS((void)t.reshaped({5}), DimensionError);
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
  CHECK(transpose(Tensor::matrix({{1, 2, 3}})) == Tensor::matrix({{1}, {2}, {3}}));
  CHECK(add_row(Tensor::matrix({{1, 2}, {3, 4}}), Tensor::matrix({{10, 20}})) ==
        Tensor::matrix({{11, 22}, {13, 24}}));
}

TEST_CASE("finite inputs give finite outputs") {
  std::mt19937_64 gen(5);
  const Tensor a = oracle::random_matrix(gen, 5, 5), b = oracle::random_matrix(gen, 5, 5);
  CHECK(matmul(a, b).all_finite());
  CHECK(exp(a).all_finite());
  CHECK(mul(a, b).all_finite());
  CHECK(log(exp(a)).all_finite());
}

TEST_CASE("rng: same seed reproduces, substreams differ") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) {
    CHECK(a.uniform() == b.uniform());
    CHECK(a.normal() == b.normal());
  }
  Rng s0 = Rng::substream(42, 0), s1 = Rng::substream(42, 1);
  CHECK(s0.next_u64() != s1.next_u64());
  Rng u(7);
  for (int i = 0; i < 1000; ++i) {
    const double x = u.uniform();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
    CHECK(u.below(5) < 5);
  }
}

TEST_CASE("rng: normals have unit variance") {
  Rng r(9);
  const int n = 200000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    s += x;
    s2 += x * x;
  }
  const double mean = s / n, var = s2 / n - mean * mean;
  CHECK(std::fabs(mean) < 0.01);
  CHECK(std::fabs(var - 1.0) < 0.02);
}
