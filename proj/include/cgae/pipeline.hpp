#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "cgae/config.hpp"

// The command-line stages. Each reads its inputs from and writes its outputs
// to the configured work directory:
//
//   synth        data.csv, synth_truth.txt
//   select-lags  lags.csv
//   build-graph  graph.csv
//   train        model_k<k>.ckpt for every configured horizon
//   forecast     forecast_k<k>.csv (scored test instances for cgae and pen),
//                ensemble_k<k>.csv, quantiles_k<k>.csv (one instance)
//   evaluate     report_<metric>_<k>.csv, report_summary.txt
namespace cgae {

struct StageResult {
  std::string summary;  // one line of key=value pairs
  std::vector<std::string> artifacts;
  std::vector<std::string> warnings;
};

StageResult run_synth(const RunConfig& config);
StageResult run_select_lags(const RunConfig& config);
StageResult run_build_graph(const RunConfig& config);
// Trains the given horizon, or every configured horizon.
StageResult run_train(const RunConfig& config, std::optional<std::size_t> horizon = std::nullopt);
StageResult run_forecast(const RunConfig& config, std::optional<std::size_t> horizon = std::nullopt);
StageResult run_evaluate(const RunConfig& config);

std::string checkpoint_name(std::size_t horizon);
std::string forecast_name(std::size_t horizon);

}  // namespace cgae
