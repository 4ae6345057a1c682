#include <filesystem>
#include <functional>
#include <string>

#include "cgae/errors.hpp"
#include "cgae/graph.hpp"
#include "cgae/model.hpp"
#include "cgae/pipeline.hpp"
#include "cgae/text.hpp"
#include "doctest.h"
#include "temp_dir.hpp"

using namespace cgae;

namespace {

RunConfig small_config(const TempDir& dir) {
  RunConfig c;
  c.work_dir = dir.path().string();
  c.synth.nodes = 3;
  c.synth.days = 10;
  c.max_lag = 60;
  c.tau = 0.3;
  c.epochs = 1;
  c.rho = 200;
  c.member_days = 2;
  c.horizons = {1, 2};
  return c;
}

void run_all(const RunConfig& c) {
  run_synth(c);
  run_select_lags(c);
  run_build_graph(c);
  run_train(c);
  run_forecast(c);
  run_evaluate(c);
}

std::string missing_file_message(const std::function<void()>& stage) {
  try {
    stage();
  } catch (const IoError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("pipeline: small end-to-end run writes every artifact") {
  TempDir dir;
  const RunConfig c = small_config(dir);
  const StageResult synth = run_synth(c);
  CHECK(synth.summary.rfind("stage=synth", 0) == 0);
  CHECK(std::filesystem::exists(dir.file("data.csv")));
  CHECK(std::filesystem::exists(dir.file("synth_truth.txt")));

  const StageResult lags = run_select_lags(c);
  CHECK(lags.summary.rfind("stage=select-lags", 0) == 0);
  CHECK(std::filesystem::exists(dir.file("lags.csv")));

  const StageResult graph = run_build_graph(c);
  CHECK(graph.summary.rfind("stage=build-graph", 0) == 0);
  CHECK(read_edge_list(dir.file("graph.csv")).node_count() == 3);

  const StageResult train = run_train(c);
  CHECK(train.summary.rfind("stage=train", 0) == 0);
  for (const char* f : {"model_k1.ckpt", "model_k2.ckpt", "train_trace_k1.csv"})
    CHECK(std::filesystem::exists(dir.file(f)));

  const StageResult fc = run_forecast(c);
  CHECK(fc.summary.rfind("stage=forecast", 0) == 0);
  for (const char* f : {"forecast_k1.csv", "ensemble_k1.csv", "quantiles_k1.csv", "forecast_k2.csv"})
    CHECK(std::filesystem::exists(dir.file(f)));

  const StageResult ev = run_evaluate(c);
  CHECK(ev.summary.rfind("stage=evaluate", 0) == 0);
  CHECK(std::filesystem::exists(dir.file("report_summary.txt")));
  for (const char* f : {"report_reliability_1.csv", "report_piaw_1.csv", "report_crps_1.csv", "report_entropy_2.csv"})
    CHECK(std::filesystem::exists(dir.file(f)));
  const std::string crps = text::read_file(dir.file("report_crps_1.csv"));
  CHECK(crps.find("\ncgae,") != std::string::npos);
  CHECK(crps.find("\npen,") != std::string::npos);
  // Summaries are single lines.
  for (const auto* r : {&synth, &lags, &graph, &train, &fc, &ev}) CHECK(r->summary.find('\n') == std::string::npos);
}

TEST_CASE("pipeline: zero epochs saves the initialization") {
  TempDir dir;
  RunConfig c = small_config(dir);
  c.epochs = 0;
  c.horizons = {1};
  run_synth(c);
  run_select_lags(c);
  run_build_graph(c);
  run_train(c);
  const CgaeModel saved = load_checkpoint(dir.file("model_k1.ckpt"));
  const Graph g = read_edge_list(dir.file("graph.csv"));
  CHECK(saved.propagation == renormalized_propagation(g));
  Rng init = Rng::substream(c.seed, 2);
  const CgaeModel fresh = CgaeModel::initialize(saved.config, saved.propagation, saved.node_ids, init);
  CHECK(fresh == saved);

  c.epochs = 1;
  run_train(c);
  CHECK_FALSE(load_checkpoint(dir.file("model_k1.ckpt")) == saved);
}

TEST_CASE("pipeline: missing upstream artifacts name the file and its producer") {
  TempDir dir;
  const RunConfig c = small_config(dir);
  std::string msg = missing_file_message([&] { run_select_lags(c); });
  CHECK(msg.find(dir.file("data.csv")) != std::string::npos);
  CHECK(msg.find("'synth'") != std::string::npos);

  run_synth(c);
  msg = missing_file_message([&] { run_train(c); });
  CHECK(msg.find(dir.file("lags.csv")) != std::string::npos);
  CHECK(msg.find("'select-lags'") != std::string::npos);

  run_select_lags(c);
  msg = missing_file_message([&] { run_train(c); });
  CHECK(msg.find(dir.file("graph.csv")) != std::string::npos);

  run_build_graph(c);
  msg = missing_file_message([&] { run_forecast(c); });
  CHECK(msg.find(dir.file("model_k1.ckpt")) != std::string::npos);
  CHECK(msg.find("'train'") != std::string::npos);

  msg = missing_file_message([&] { run_evaluate(c); });
  CHECK(msg.find(dir.file("forecast_k1.csv")) != std::string::npos);
}

TEST_CASE("pipeline: an out-of-range horizon override is a usage error") {
  TempDir dir;
  const RunConfig c = small_config(dir);
  run_synth(c);
  run_select_lags(c);
  run_build_graph(c);
  CHECK_THROWS_AS(run_train(c, 0), UsageError);
  CHECK_THROWS_AS(run_train(c, 49), UsageError);
}

TEST_CASE("pipeline: identical config and seed give identical bytes") {
  TempDir a, b;
  run_all(small_config(a));
  run_all(small_config(b));
  std::size_t compared = 0;
  for (const auto& entry : std::filesystem::directory_iterator(a.path())) {
    const std::string name = entry.path().filename().string();
    REQUIRE(std::filesystem::exists(b.file(name)));
    std::string x = text::read_file(entry.path().string()), y = text::read_file(b.file(name));
    // Files that mention their own work directory differ only in that path.
    if (name == "report_summary.txt" || name == "synth_truth.txt") {
      for (std::string* s : {&x, &y}) {
        for (const auto& dir : {a.path().string(), b.path().string()}) {
          for (auto pos = s->find(dir); pos != std::string::npos; pos = s->find(dir)) s->replace(pos, dir.size(), "@");
        }
      }
    }
    CHECK_MESSAGE(x == y, name);
    ++compared;
  }
  CHECK(compared >= 15);
}
