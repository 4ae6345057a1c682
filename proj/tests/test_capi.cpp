#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "cgae/cgae.h"
#include "doctest.h"
#include "temp_dir.hpp"

namespace {

bool error_mentions(const char* needle) { return std::string(cgae_last_error()).find(needle) != std::string::npos; }

cgae_config* small_config(const TempDir& dir) {
  cgae_config* c = nullptr;
  REQUIRE(cgae_config_default(&c) == CGAE_OK);
  const std::string wd = dir.path().string();
  const char* settings[][2] = {{"paths.work_dir", wd.c_str()}, {"synth.nodes", "3"}, {"synth.days", "10"},
                               {"lags.max_lag", "60"},         {"lags.tau", "0.3"},   {"train.epochs", "1"},
                               {"forecast.rho", "200"},        {"forecast.member_days", "2"}};
  for (const auto& kv : settings) REQUIRE(cgae_config_set(c, kv[0], kv[1]) == CGAE_OK);
  return c;
}

}  // namespace

TEST_CASE("capi: status names and version") {
  CHECK(std::string(cgae_status_name(CGAE_OK)) == "ok");
  CHECK(std::string(cgae_status_name(CGAE_ERR_CONFIG)).size() > 0);
  CHECK(std::string(cgae_status_name(static_cast<cgae_status>(99))) == "unknown status");
  CHECK(std::strlen(cgae_version()) > 0);
}

TEST_CASE("capi: NULL arguments are reported, free accepts NULL") {
  double out = 0.0;
  CHECK(cgae_config_default(nullptr) == CGAE_ERR_NULL);
  CHECK(cgae_crps(nullptr, 3, 0.0, &out) == CGAE_ERR_NULL);
  CHECK(std::strlen(cgae_last_error()) > 0);
  const double xs[] = {1.0};
  CHECK(cgae_crps(xs, 1, 0.0, nullptr) == CGAE_ERR_NULL);
  CHECK(cgae_run_synth(nullptr) == CGAE_ERR_NULL);
  CHECK(cgae_graph_load(nullptr, nullptr) == CGAE_ERR_NULL);
  cgae_config_free(nullptr);
  cgae_graph_free(nullptr);
  cgae_model_free(nullptr);
}

TEST_CASE("capi: metrics") {
  std::vector<double> obs(100, 0.0), lo(100, -1.0), hi(100, 1.0);
  for (std::size_t i = 85; i < 100; ++i) obs[i] = 5.0;
  double out = 0.0;
  REQUIRE(cgae_reliability_bias(obs.data(), lo.data(), hi.data(), 100, 0.05, &out) == CGAE_OK);
  CHECK(out == -5.0);
  CHECK(cgae_reliability_bias(obs.data(), lo.data(), hi.data(), 100, 0.7, &out) == CGAE_ERR_USAGE);
  CHECK(error_mentions("alpha"));

  const double l2[] = {0.0, 0.0}, u2[] = {1.0, 3.0};
  REQUIRE(cgae_piaw(l2, u2, 2, &out) == CGAE_OK);
  CHECK(out == 2.0);

  const double two[] = {0.0, 1.0};
  REQUIRE(cgae_crps(two, 2, 0.0, &out) == CGAE_OK);
  CHECK(out == doctest::Approx(0.25));
  CHECK(cgae_crps(two, 0, 0.0, &out) == CGAE_ERR_USAGE);

  std::vector<double> flat(64, 2.0);
  int degenerate = 0;
  REQUIRE(cgae_pdf_entropy(flat.data(), flat.size(), 32, &out, &degenerate) == CGAE_OK);
  CHECK(out == 0.0);
  CHECK(degenerate == 1);
  std::vector<double> spread;
  for (int b = 0; b < 4; ++b)
    for (int k = 0; k < 8; ++k) spread.push_back(b + 0.5);
  REQUIRE(cgae_pdf_entropy(spread.data(), spread.size(), 4, &out, nullptr) == CGAE_OK);
  CHECK(out == doctest::Approx(std::log(4.0)));
}

TEST_CASE("capi: graphs") {
  const double k2[] = {0.0, 1.0, 1.0, 0.0};
  cgae_graph* g = nullptr;
  REQUIRE(cgae_graph_from_adjacency(k2, 2, &g) == CGAE_OK);
  std::size_t n = 0;
  REQUIRE(cgae_graph_node_count(g, &n) == CGAE_OK);
  CHECK(n == 2);
  double m[4];
  REQUIRE(cgae_graph_propagation(g, m) == CGAE_OK);
  for (double v : m) CHECK(v == doctest::Approx(0.5));

  const double signal[] = {1.0, 3.0};
  const double omega0[] = {2.0};
  double out[2];
  REQUIRE(cgae_graph_chebyshev(g, signal, 1, omega0, 1, 0.0, out) == CGAE_OK);
  CHECK(out[0] == 2.0);
  CHECK(out[1] == 6.0);
  // Laplacian of K2 has spectrum {0, 2}; with gamma_max = 2 the scaled
  // operator is L - I = [[0, -1], [-1, 0]].
  const double omega1[] = {0.0, 1.0};
  REQUIRE(cgae_graph_chebyshev(g, signal, 1, omega1, 2, 2.0, out) == CGAE_OK);
  CHECK(out[0] == doctest::Approx(-3.0));
  CHECK(out[1] == doctest::Approx(-1.0));
  cgae_graph_free(g);

  const double asym[] = {0.0, 1.0, 0.5, 0.0};
  CHECK(cgae_graph_from_adjacency(asym, 2, &g) == CGAE_ERR_DATA);
  CHECK(cgae_graph_load("/nonexistent/graph.csv", &g) == CGAE_ERR_IO);
}

TEST_CASE("capi: configuration") {
  cgae_config* c = nullptr;
  REQUIRE(cgae_config_default(&c) == CGAE_OK);
  CHECK(cgae_config_set(c, "train.nonsense", "1") == CGAE_ERR_CONFIG);
  CHECK(error_mentions("train.nonsense"));
  CHECK(cgae_config_set(c, "graph.threshold", "2") == CGAE_OK);
  CHECK(cgae_config_validate(c) == CGAE_ERR_CONFIG);
  CHECK(error_mentions("graph.threshold"));
  REQUIRE(cgae_config_set(c, "graph.threshold", "0.9") == CGAE_OK);
  CHECK(cgae_config_validate(c) == CGAE_OK);

  std::size_t needed = 0;
  REQUIRE(cgae_config_format(c, nullptr, 0, &needed) == CGAE_OK);
  CHECK(needed > 1);
  std::vector<char> buf(needed);
  REQUIRE(cgae_config_format(c, buf.data(), buf.size(), &needed) == CGAE_OK);
  CHECK(std::strlen(buf.data()) + 1 == needed);
  CHECK(std::string(buf.data()).find("threshold = 0.9") != std::string::npos);
  char tiny[8];
  REQUIRE(cgae_config_format(c, tiny, sizeof tiny, &needed) == CGAE_OK);
  CHECK(std::strlen(tiny) == 7);
  cgae_config_free(c);

  TempDir dir;
  CHECK(cgae_config_load(dir.file("missing.conf").c_str(), &c) == CGAE_ERR_CONFIG);
}

TEST_CASE("capi: stages, checkpoints and sampling") {
  TempDir dir;
  cgae_config* c = small_config(dir);
  CHECK(cgae_run_train(c, 0) == CGAE_ERR_IO);
  CHECK(error_mentions("data.csv"));
  REQUIRE(cgae_run_synth(c) == CGAE_OK);
  CHECK(std::string(cgae_last_summary()).rfind("stage=synth", 0) == 0);
  REQUIRE(cgae_run_select_lags(c) == CGAE_OK);
  REQUIRE(cgae_run_build_graph(c) == CGAE_OK);
  CHECK(cgae_run_train(c, 49) == CGAE_ERR_USAGE);
  REQUIRE(cgae_run_train(c, 0) == CGAE_OK);
  REQUIRE(cgae_run_forecast(c, 1) == CGAE_OK);
  REQUIRE(cgae_run_evaluate(c) == CGAE_OK);
  CHECK(std::string(cgae_last_summary()).rfind("stage=evaluate", 0) == 0);
  for (std::size_t i = 0; i < cgae_last_warning_count(); ++i) CHECK(cgae_last_warning(i) != nullptr);
  CHECK(std::string(cgae_last_warning(cgae_last_warning_count())).empty());

  cgae_model* m = nullptr;
  REQUIRE(cgae_model_load(dir.file("model_k1.ckpt").c_str(), &m) == CGAE_OK);
  std::size_t nodes = 0, features = 0, latent = 0, params = 0;
  REQUIRE(cgae_model_info(m, &nodes, &features, &latent, &params) == CGAE_OK);
  CHECK(nodes == 3);
  CHECK(features >= 1);
  CHECK(latent >= 1);
  CHECK(params > 0);

  std::vector<double> pi(nodes * features, 100.0);
  std::vector<double> a(50 * nodes), b(50 * nodes), other(50 * nodes);
  REQUIRE(cgae_model_sample(m, pi.data(), 50, 7, 1, a.data()) == CGAE_OK);
  REQUIRE(cgae_model_sample(m, pi.data(), 50, 7, 1, b.data()) == CGAE_OK);
  REQUIRE(cgae_model_sample(m, pi.data(), 50, 8, 1, other.data()) == CGAE_OK);
  CHECK(a == b);
  CHECK(a != other);
  for (double v : a) CHECK(std::isfinite(v));
  CHECK(cgae_model_sample(m, pi.data(), 1, 7, 1, a.data()) == CGAE_ERR_USAGE);

  REQUIRE(cgae_model_save(m, dir.file("copy.ckpt").c_str()) == CGAE_OK);
  cgae_model* copy = nullptr;
  REQUIRE(cgae_model_load(dir.file("copy.ckpt").c_str(), &copy) == CGAE_OK);
  REQUIRE(cgae_model_sample(copy, pi.data(), 50, 7, 1, b.data()) == CGAE_OK);
  CHECK(a == b);
  cgae_model_free(copy);
  cgae_model_free(m);

  CHECK(cgae_model_load(dir.file("graph.csv").c_str(), &m) == CGAE_ERR_DATA);
  cgae_config_free(c);
}
