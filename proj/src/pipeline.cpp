#include "cgae/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <sstream>

#include "cgae/errors.hpp"
#include "cgae/features.hpp"
#include "cgae/forecast.hpp"
#include "cgae/graph.hpp"
#include "cgae/metrics.hpp"
#include "cgae/model.hpp"
#include "cgae/text.hpp"

namespace cgae {

namespace fs = std::filesystem;

namespace {

constexpr const char* kLagsFile = "lags.csv";
constexpr const char* kGraphFile = "graph.csv";
constexpr const char* kTruthFile = "synth_truth.txt";
constexpr std::uint64_t kForecastStream = 1000;

void require(const std::string& path, const std::string& producer) {
  if (!fs::exists(path))
    throw IoError("missing required file " + path + " (produced by the '" + producer + "' stage)");
}

void ensure_work_dir(const RunConfig& c) {
  std::error_code ec;
  fs::create_directories(c.work_dir, ec);
  if (ec) throw IoError("cannot create work directory " + c.work_dir + ": " + ec.message());
}

struct Loaded {
  Panel panel;
  std::size_t split = 0;
  std::vector<std::string> warnings;
};

Loaded load_panel(const RunConfig& c) {
  const std::string path = c.data_path();
  require(path, "synth");
  IngestResult in = ingest_csv(path);
  if (in.sites.empty()) throw DataError(path + ": no data rows");
  Loaded out;
  out.panel = align_panel(in.sites);
  out.warnings = std::move(in.report.warnings);
  const std::size_t steps = out.panel.steps();
  if (c.split) {
    out.split = out.panel.index_at_or_after(*c.split);
  } else {
    out.split = static_cast<std::size_t>(std::floor(c.split_fraction * static_cast<double>(steps)));
  }
  if (out.split == 0 || out.split >= steps) {
    throw DataError("the train/test split leaves an empty side (split step " + std::to_string(out.split) + " of " +
                    std::to_string(steps) + ")");
  }
  return out;
}

std::vector<std::vector<double>> training_part(const Loaded& d) {
  std::vector<std::vector<double>> out;
  for (const auto& row : d.panel.values) out.emplace_back(row.begin(), row.begin() + static_cast<long>(d.split));
  return out;
}

LagSet load_lags(const RunConfig& c) {
  const std::string path = c.path_of(kLagsFile);
  require(path, "select-lags");
  return read_lag_set(path);
}

Graph load_graph(const RunConfig& c, const Panel& panel) {
  const std::string path = c.path_of(kGraphFile);
  require(path, "build-graph");
  Graph g = read_edge_list(path);
  if (g.node_ids() != panel.node_ids)
    throw DataError(path + ": graph nodes do not match the sites in " + c.data_path() + " (rerun build-graph)");
  return g;
}

std::vector<std::size_t> horizons_for(const RunConfig& c, std::optional<std::size_t> h) {
  if (!h) return c.horizons;
  if (*h < 1 || *h > kStepsPerDay) throw UsageError("horizon must lie in 1..48, got " + std::to_string(*h));
  return {*h};
}

double training_max(const Loaded& d) {
  double m = 0.0;
  for (const auto& row : d.panel.values)
    for (std::size_t t = 0; t < d.split; ++t)
      if (!std::isnan(row[t])) m = std::max(m, row[t]);
  if (!(m > 0.0)) throw DataError("training data has no positive GHI to scale by");
  return m;
}

std::string percent_label(double c) { return text::format_double(c); }

std::string forecast_header(const RunConfig& c) {
  std::string h = "timestamp,node_id,model,observation,crps,entropy";
  for (double cov : c.coverages) h += ",lower_" + percent_label(cov) + ",upper_" + percent_label(cov);
  return h;
}

void write_scored(std::ostringstream& os, std::int64_t t, const std::string& model, const ScoredForecast& s) {
  using text::format_double;
  os << text::format_timestamp(t) << ',' << s.node_id << ',' << model << ',' << format_double(s.observation) << ','
     << format_double(s.crps) << ',' << format_double(s.entropy);
  for (const Interval& iv : s.intervals) os << ',' << format_double(iv.lower) << ',' << format_double(iv.upper);
  os << '\n';
}

std::string join(const std::vector<std::size_t>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + std::to_string(xs[i]);
  return s;
}

}  // namespace

std::string checkpoint_name(std::size_t horizon) { return "model_k" + std::to_string(horizon) + ".ckpt"; }
std::string forecast_name(std::size_t horizon) { return "forecast_k" + std::to_string(horizon) + ".csv"; }

StageResult run_synth(const RunConfig& config) {
  ensure_work_dir(config);
  SynthConfig sc = config.synth;
  sc.seed = config.seed;
  const SynthResult r = synth_generate(sc);
  const std::string data = config.data_path();
  const std::string truth = config.path_of(kTruthFile);
  export_csv(r.sites, data);
  text::write_file(truth, r.description);
  StageResult out;
  out.artifacts = {data, truth};
  std::ostringstream os;
  os << "stage=synth nodes=" << sc.nodes << " days=" << sc.days << " steps=" << r.sites.front().size()
     << " seed=" << sc.seed << " data=" << data << " truth=" << truth;
  out.summary = os.str();
  return out;
}

StageResult run_select_lags(const RunConfig& config) {
  ensure_work_dir(config);
  const Loaded d = load_panel(config);
  const auto pooled = training_part(d);
  const LagSet lags = select_lags(pooled, config.max_lag, config.tau, config.bins);
  const std::string path = config.path_of(kLagsFile);
  write_lag_set(lags, path);
  StageResult out;
  out.artifacts = {path};
  out.warnings = d.warnings;
  std::ostringstream os;
  os << "stage=select-lags count=" << lags.lags.size() << " smallest=" << lags.lags.front()
     << " largest=" << lags.largest() << " tau=" << text::format_double(config.tau) << " max_lag=" << config.max_lag
     << " lags=" << path;
  out.summary = os.str();
  return out;
}

StageResult run_build_graph(const RunConfig& config) {
  ensure_work_dir(config);
  const Loaded d = load_panel(config);
  Graph g;
  if (config.graph_mode == "distance") {
    g = build_graph_from_distance(d.panel.locations, d.panel.node_ids, config.kernel_scale_km, config.graph_threshold);
  } else {
    g = build_graph_from_correlation(training_part(d), d.panel.node_ids, config.graph_threshold);
  }
  const std::string path = config.path_of(kGraphFile);
  write_edge_list(g, path);
  StageResult out;
  out.artifacts = {path};
  out.warnings = d.warnings;
  std::ostringstream os;
  os << "stage=build-graph mode=" << config.graph_mode << " nodes=" << g.node_count() << " edges=" << g.edge_count()
     << " graph=" << path;
  out.summary = os.str();
  return out;
}

StageResult run_train(const RunConfig& config, std::optional<std::size_t> horizon) {
  ensure_work_dir(config);
  const Loaded d = load_panel(config);
  const LagSet lags = load_lags(config);
  const Graph g = load_graph(config, d.panel);
  const Tensor propagation = renormalized_propagation(g);
  const double scale = training_max(d);

  StageResult out;
  out.warnings = d.warnings;
  std::ostringstream os;
  const auto hs = horizons_for(config, horizon);
  os << "stage=train horizons=" << join(hs) << " epochs=" << config.epochs;
  for (std::size_t k : hs) {
    const Dataset ds = build_examples(d.panel.values, lags, k, d.split);
    if (ds.train.empty()) throw DataError("no complete training windows for horizon " + std::to_string(k));
    ModelConfig mc = config.model;
    mc.nodes = d.panel.nodes();
    mc.features = lags.lags.size();
    mc.scale = scale;
    mc.seed = config.seed;
    Rng init_rng = Rng::substream(config.seed, 2 * k);
    Rng train_rng = Rng::substream(config.seed, 2 * k + 1);
    CgaeModel model = CgaeModel::initialize(mc, propagation, d.panel.node_ids, init_rng);
    const TrainTrace trace = train(model, ds.train, config.epochs, train_rng);

    const std::string ckpt = config.path_of(checkpoint_name(k));
    save_checkpoint(model, ckpt);
    const std::string trace_path = config.path_of("train_trace_k" + std::to_string(k) + ".csv");
    std::ostringstream tr;
    tr << "epoch,loss,kl,recon\n";
    for (std::size_t e = 0; e < trace.epochs.size(); ++e) {
      tr << e + 1 << ',' << text::format_double(trace.epochs[e].loss) << ',' << text::format_double(trace.epochs[e].kl)
         << ',' << text::format_double(trace.epochs[e].recon) << '\n';
    }
    text::write_file(trace_path, tr.str());
    out.artifacts.push_back(ckpt);
    out.artifacts.push_back(trace_path);

    const std::string s = "_k" + std::to_string(k);
    os << " examples" << s << '=' << ds.train.size() << " parameters" << s << '=' << model.parameter_count();
    if (!trace.epochs.empty()) {
      os << " loss" << s << '=' << text::format_double(trace.epochs.back().loss) << " kl" << s << '='
         << text::format_double(trace.epochs.back().kl);
    }
    os << " checkpoint" << s << '=' << ckpt;
  }
  out.summary = os.str();
  return out;
}

StageResult run_forecast(const RunConfig& config, std::optional<std::size_t> horizon) {
  ensure_work_dir(config);
  const Loaded d = load_panel(config);
  const LagSet lags = load_lags(config);
  const auto coverages = config.coverage_fractions();

  std::vector<double> levels;
  for (double c : coverages) {
    levels.push_back(alpha_for_coverage(c));
    levels.push_back(1.0 - alpha_for_coverage(c));
  }
  levels.push_back(0.5);
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  StageResult out;
  out.warnings = d.warnings;
  std::ostringstream summary;
  const auto hs = horizons_for(config, horizon);
  summary << "stage=forecast horizons=" << join(hs) << " rho=" << config.rho;

  for (std::size_t k : hs) {
    const std::string ckpt = config.path_of(checkpoint_name(k));
    require(ckpt, "train");
    const CgaeModel model = load_checkpoint(ckpt);
    if (model.node_ids != d.panel.node_ids) throw DataError(ckpt + ": model nodes do not match the data sites");
    if (model.config.features != lags.lags.size()) throw DataError(ckpt + ": model was trained on a different lag set");

    const Dataset ds = build_examples(d.panel.values, lags, k, d.split);
    std::ostringstream rows;
    rows << forecast_header(config) << '\n';
    std::size_t instances = 0, scored = 0, skipped = 0;
    std::optional<ForecastEnsemble> dump;
    const std::uint64_t stream = mix_seed(config.seed, kForecastStream + k);

    for (const Example& ex : ds.test) {
      const std::size_t target = ex.origin + k;
      const std::int64_t t = d.panel.time_at(target);
      ForecastEnsemble pen;
      try {
        pen = persistence_ensemble(d.panel.values, target, k, config.member_days, kStepsPerDay);
      } catch (const DataError&) {
        ++skipped;
        continue;
      }
      std::vector<std::size_t> keep;
      for (std::size_t i = 0; i < d.panel.nodes(); ++i) {
        bool day = !config.daylight_only;
        for (std::size_t s = 0; s < pen.members() && !day; ++s) day = pen.samples(s, i) > 0.0;
        if (day) keep.push_back(i);
      }
      if (keep.empty()) continue;

      Rng rng = Rng::substream(stream, ex.origin);
      ForecastEnsemble ens = generate_ensemble(model, ex.pi, config.rho, rng, config.add_output_noise);
      ens.horizon = k;
      ens.target_time = t;
      for (std::size_t i : keep) {
        const double obs = ex.target[i];
        ScoredForecast a = score_forecast(ens.node_samples(i), obs, coverages, config.entropy_bins);
        a.node_id = d.panel.node_ids[i];
        a.horizon = k;
        ScoredForecast b = score_forecast(pen.node_samples(i), obs, coverages, config.entropy_bins);
        b.node_id = a.node_id;
        b.horizon = k;
        write_scored(rows, t, "cgae", a);
        write_scored(rows, t, "pen", b);
        ++scored;
      }
      ++instances;
      if (!config.dump_at || *config.dump_at == t) dump = std::move(ens);
    }
    if (instances == 0) throw DataError("no test instances to forecast at horizon " + std::to_string(k));
    if (!dump) throw UsageError("forecast.dump_at " + text::format_timestamp(*config.dump_at) + " is not a forecast instance");

    const std::string kk = std::to_string(k);
    const std::string forecasts = config.path_of(forecast_name(k));
    const std::string ensemble = config.path_of("ensemble_k" + kk + ".csv");
    const std::string quantiles = config.path_of("quantiles_k" + kk + ".csv");
    text::write_file(forecasts, rows.str());
    write_ensemble_csv(*dump, d.panel.node_ids, ensemble);
    write_quantiles_csv(empirical_quantiles(*dump, levels), d.panel.node_ids, quantiles);
    out.artifacts.insert(out.artifacts.end(), {forecasts, ensemble, quantiles});

    const std::string s = "_k" + kk;
    summary << " instances" << s << '=' << instances << " scored" << s << '=' << scored << " skipped" << s << '='
            << skipped << " dump_time" << s << '=' << text::format_timestamp(dump->target_time) << " forecasts" << s
            << '=' << forecasts;
  }
  out.summary = summary.str();
  return out;
}

StageResult run_evaluate(const RunConfig& config) {
  ensure_work_dir(config);
  const auto coverages = config.coverage_fractions();
  const std::string expected_header = forecast_header(config);
  std::map<std::string, std::vector<ScoredForecast>> by_model;

  for (std::size_t k : config.horizons) {
    const std::string path = config.path_of(forecast_name(k));
    require(path, "forecast");
    const auto lines = text::read_lines(path);
    if (lines.empty() || lines.front() != expected_header)
      throw DataError(path + ": header does not match the configured coverage levels (rerun forecast)");
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
      if (text::trim(lines[ln]).empty()) continue;
      const auto f = text::split(lines[ln], ',');
      const std::string at = path + ":" + std::to_string(ln + 1);
      if (f.size() != 6 + 2 * coverages.size()) throw DataError(at + ": wrong field count");
      ScoredForecast s;
      s.node_id = f[1];
      s.horizon = k;
      s.observation = text::parse_double(f[3], at + " observation");
      s.crps = text::parse_double(f[4], at + " crps");
      s.entropy = text::parse_double(f[5], at + " entropy");
      for (std::size_t c = 0; c < coverages.size(); ++c) {
        s.intervals.push_back({text::parse_double(f[6 + 2 * c], at + " lower"),
                               text::parse_double(f[7 + 2 * c], at + " upper")});
      }
      by_model[f[2]].push_back(std::move(s));
    }
  }
  if (by_model.empty()) throw DataError("forecast files hold no scored instances");

  std::vector<LabeledReport> reports;
  for (const auto& [label, scored] : by_model) reports.push_back({label, aggregate(scored, coverages)});
  StageResult out;
  out.artifacts = write_report_tables(reports, config.work_dir);
  const std::string summary_path = config.path_of("report_summary.txt");
  text::write_file(summary_path, report_summary(reports));
  out.artifacts.push_back(summary_path);

  std::ostringstream os;
  os << "stage=evaluate horizons=" << join(config.horizons);
  for (const LabeledReport& r : reports) {
    for (const HorizonReport& h : r.report.horizons) {
      const std::string s = "_" + r.label + "_k" + std::to_string(h.horizon);
      os << " instances" << s << '=' << h.instances << " crps" << s << '=' << text::format_double(h.mean_crps);
      for (const CoverageRow& row : h.coverage) {
        if (std::fabs(row.coverage - 0.9) < 1e-12)
          os << " coverage90" << s << '=' << text::format_double(row.observed_coverage);
      }
    }
  }
  os << " summary=" << summary_path;
  out.summary = os.str();
  return out;
}

}  // namespace cgae
