// Command-line front end. Uses only the C interface of libcgae_c.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cgae/cgae.h"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  std::size_t horizon = 0;
  std::string work_dir;
  std::vector<std::string> overrides;
};

int report_failure(cgae_status s, const char* what) {
  std::cerr << "cgae: " << what << " failed (" << cgae_status_name(s) << "): " << cgae_last_error() << '\n';
  return (s == CGAE_ERR_CONFIG || s == CGAE_ERR_USAGE) ? kExitUsage : kExitFailure;
}

// Loads the config file (or defaults) and applies the command-line overrides.
cgae_config* make_config(const Options& o, int& exit_code) {
  cgae_config* c = nullptr;
  cgae_status s = o.config_path.empty() ? cgae_config_default(&c) : cgae_config_load(o.config_path.c_str(), &c);
  if (s != CGAE_OK) {
    exit_code = report_failure(s, "loading the configuration");
    return nullptr;
  }
  auto set = [&](const std::string& key, const std::string& value) {
    if (s != CGAE_OK) return;
    s = cgae_config_set(c, key.c_str(), value.c_str());
  };
  for (const std::string& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::cerr << "cgae: --set expects key=value, got '" << kv << "'\n";
      cgae_config_free(c);
      exit_code = kExitUsage;
      return nullptr;
    }
    set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!o.work_dir.empty()) set("paths.work_dir", o.work_dir);
  if (o.seed) set("seed", std::to_string(*o.seed));
  if (o.epochs) set("train.epochs", std::to_string(*o.epochs));
  if (s == CGAE_OK) s = cgae_config_validate(c);
  if (s != CGAE_OK) {
    exit_code = report_failure(s, "configuration");
    cgae_config_free(c);
    return nullptr;
  }
  return c;
}

int run_stage(const std::string& name, const Options& o) {
  int code = 0;
  cgae_config* c = make_config(o, code);
  if (!c) return code;
  cgae_status s = CGAE_OK;
  if (name == "synth") s = cgae_run_synth(c);
  else if (name == "select-lags") s = cgae_run_select_lags(c);
  else if (name == "build-graph") s = cgae_run_build_graph(c);
  else if (name == "train") s = cgae_run_train(c, o.horizon);
  else if (name == "forecast") s = cgae_run_forecast(c, o.horizon);
  else if (name == "evaluate") s = cgae_run_evaluate(c);
  cgae_config_free(c);
  if (s != CGAE_OK) return report_failure(s, name.c_str());
  for (std::size_t i = 0; i < cgae_last_warning_count(); ++i) std::cerr << "warning: " << cgae_last_warning(i) << '\n';
  std::cout << cgae_last_summary() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probabilistic spatio-temporal GHI forecasting with a convolutional graph auto-encoder", "cgae"};
  app.set_version_flag("--version", std::string(cgae_version()));
  app.require_subcommand(1);
  app.fallthrough();

  Options o;
  app.add_option("--config", o.config_path, "Configuration file (key = value with [sections])");
  app.add_option("--seed", o.seed, "Override the configured seed");
  app.add_option("--work-dir", o.work_dir, "Override paths.work_dir");
  app.add_option("--set", o.overrides, "Override any setting, e.g. --set forecast.rho=2000")->take_all();

  struct Sub {
    const char* name;
    const char* help;
  };
  const std::vector<Sub> subs = {
      {"synth", "Generate synthetic GHI data (data.csv, synth_truth.txt)"},
      {"select-lags", "Select input lags by mutual information (lags.csv)"},
      {"build-graph", "Build the site graph (graph.csv)"},
      {"train", "Train one model per horizon (model_k<k>.ckpt)"},
      {"forecast", "Generate and score test ensembles (forecast_k<k>.csv, ensemble/quantile dumps)"},
      {"evaluate", "Aggregate scores into report_<metric>_<k>.csv tables"},
  };
  std::string chosen;
  for (const Sub& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    if (std::string(s.name) == "train") {
      sub->add_option("--epochs", o.epochs, "Override train.epochs");
      sub->add_option("--horizon", o.horizon, "Train only this horizon")->check(CLI::Range(1, 48));
    }
    if (std::string(s.name) == "forecast") {
      sub->add_option("--horizon", o.horizon, "Forecast only this horizon")->check(CLI::Range(1, 48));
    }
    sub->callback([&chosen, name = std::string(s.name)] { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    const auto extras = app.remaining();
    if (chosen.empty() && !extras.empty() && extras.front().rfind("-", 0) != 0)
      std::cerr << "cgae: unknown subcommand '" << extras.front() << "'\n\n" << app.help();
    else
      std::cerr << "cgae: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }
  return run_stage(chosen, o);
}
