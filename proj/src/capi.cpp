#include "cgae/cgae.h"

#include <algorithm>
#include <cstring>
#include <exception>
#include <new>
#include <optional>
#include <string>
#include <vector>

#include "cgae/config.hpp"
#include "cgae/errors.hpp"
#include "cgae/forecast.hpp"
#include "cgae/graph.hpp"
#include "cgae/metrics.hpp"
#include "cgae/model.hpp"
#include "cgae/pipeline.hpp"

struct cgae_config {
  cgae::RunConfig value;
};

struct cgae_graph {
  cgae::Graph value;
};

struct cgae_model {
  cgae::CgaeModel value;
};

namespace {

thread_local std::string last_error;
thread_local std::string last_summary;
thread_local std::vector<std::string> last_warnings;

cgae_status fail(cgae_status s, const char* msg) {
  last_error = msg;
  return s;
}

struct NullArgument {
  const char* name;
};

template <class T>
void need(const T* p, const char* name) {
  if (!p) throw NullArgument{name};
}

// Runs `body`, translating exceptions into status codes.
template <class F>
cgae_status call(F&& body) {
  try {
    last_error.clear();
    body();
    return CGAE_OK;
  } catch (const NullArgument& n) {
    return fail(CGAE_ERR_NULL, (std::string(n.name) + " must not be NULL").c_str());
  } catch (const cgae::DimensionError& e) {
    return fail(CGAE_ERR_DIMENSION, e.what());
  } catch (const cgae::DomainError& e) {
    return fail(CGAE_ERR_DOMAIN, e.what());
  } catch (const cgae::UsageError& e) {
    return fail(CGAE_ERR_USAGE, e.what());
  } catch (const cgae::DataError& e) {
    return fail(CGAE_ERR_DATA, e.what());
  } catch (const cgae::ConfigError& e) {
    return fail(CGAE_ERR_CONFIG, e.what());
  } catch (const cgae::IoError& e) {
    return fail(CGAE_ERR_IO, e.what());
  } catch (const cgae::TrainingError& e) {
    return fail(CGAE_ERR_TRAINING, e.what());
  } catch (const std::bad_alloc&) {
    return fail(CGAE_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(CGAE_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(CGAE_ERR_INTERNAL, "unknown error");
  }
}

template <class F>
cgae_status stage(F&& body) {
  return call([&] {
    last_summary.clear();
    last_warnings.clear();
    cgae::StageResult r = body();
    last_summary = std::move(r.summary);
    last_warnings = std::move(r.warnings);
  });
}

std::optional<std::size_t> horizon_arg(std::size_t h) {
  if (h == 0) return std::nullopt;
  return h;
}

}  // namespace

extern "C" {

const char* cgae_version(void) { return "1.0.0"; }

const char* cgae_status_name(cgae_status status) {
  switch (status) {
    case CGAE_OK: return "ok";
    case CGAE_ERR_DIMENSION: return "dimension error";
    case CGAE_ERR_DOMAIN: return "domain error";
    case CGAE_ERR_USAGE: return "usage error";
    case CGAE_ERR_DATA: return "data error";
    case CGAE_ERR_CONFIG: return "config error";
    case CGAE_ERR_IO: return "io error";
    case CGAE_ERR_TRAINING: return "training error";
    case CGAE_ERR_NULL: return "null argument";
    case CGAE_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* cgae_last_error(void) { return last_error.c_str(); }

cgae_status cgae_config_default(cgae_config** out) {
  return call([&] {
    need(out, "out");
    *out = new cgae_config{};
  });
}

cgae_status cgae_config_load(const char* path, cgae_config** out) {
  return call([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    auto* c = new cgae_config{cgae::load_config(path)};
    *out = c;
  });
}

cgae_status cgae_config_set(cgae_config* config, const char* key, const char* value) {
  return call([&] {
    need(config, "config");
    need(key, "key");
    need(value, "value");
    config->value.set(key, value);
  });
}

cgae_status cgae_config_validate(const cgae_config* config) {
  return call([&] {
    need(config, "config");
    config->value.validate();
  });
}

cgae_status cgae_config_format(const cgae_config* config, char* buffer, size_t capacity, size_t* needed) {
  return call([&] {
    need(config, "config");
    const std::string s = cgae::format_config(config->value);
    if (needed) *needed = s.size() + 1;
    if (capacity > 0) {
      need(buffer, "buffer");
      const std::size_t n = std::min(capacity - 1, s.size());
      std::memcpy(buffer, s.data(), n);
      buffer[n] = '\0';
    }
  });
}

void cgae_config_free(cgae_config* config) { delete config; }

cgae_status cgae_run_synth(const cgae_config* config) {
  return stage([&] {
    need(config, "config");
    return cgae::run_synth(config->value);
  });
}

cgae_status cgae_run_select_lags(const cgae_config* config) {
  return stage([&] {
    need(config, "config");
    return cgae::run_select_lags(config->value);
  });
}

cgae_status cgae_run_build_graph(const cgae_config* config) {
  return stage([&] {
    need(config, "config");
    return cgae::run_build_graph(config->value);
  });
}

cgae_status cgae_run_train(const cgae_config* config, size_t horizon) {
  return stage([&] {
    need(config, "config");
    return cgae::run_train(config->value, horizon_arg(horizon));
  });
}

cgae_status cgae_run_forecast(const cgae_config* config, size_t horizon) {
  return stage([&] {
    need(config, "config");
    return cgae::run_forecast(config->value, horizon_arg(horizon));
  });
}

cgae_status cgae_run_evaluate(const cgae_config* config) {
  return stage([&] {
    need(config, "config");
    return cgae::run_evaluate(config->value);
  });
}

const char* cgae_last_summary(void) { return last_summary.c_str(); }

size_t cgae_last_warning_count(void) { return last_warnings.size(); }

const char* cgae_last_warning(size_t index) {
  return index < last_warnings.size() ? last_warnings[index].c_str() : "";
}

cgae_status cgae_reliability_bias(const double* observations, const double* lower, const double* upper, size_t count,
                                  double alpha, double* out) {
  return call([&] {
    need(out, "out");
    if (count) {
      need(observations, "observations");
      need(lower, "lower");
      need(upper, "upper");
    }
    std::vector<cgae::Interval> iv(count);
    for (std::size_t i = 0; i < count; ++i) iv[i] = {lower[i], upper[i]};
    *out = cgae::reliability_bias({observations, count}, iv, alpha);
  });
}

cgae_status cgae_piaw(const double* lower, const double* upper, size_t count, double* out) {
  return call([&] {
    need(out, "out");
    if (count) {
      need(lower, "lower");
      need(upper, "upper");
    }
    std::vector<cgae::Interval> iv(count);
    for (std::size_t i = 0; i < count; ++i) iv[i] = {lower[i], upper[i]};
    *out = cgae::piaw(iv);
  });
}

cgae_status cgae_crps(const double* samples, size_t count, double observation, double* out) {
  return call([&] {
    need(out, "out");
    if (count) need(samples, "samples");
    *out = cgae::crps_empirical({samples, count}, observation);
  });
}

cgae_status cgae_pdf_entropy(const double* samples, size_t count, size_t bins, double* out, int* degenerate) {
  return call([&] {
    need(out, "out");
    if (count) need(samples, "samples");
    const cgae::EntropyResult r = cgae::pdf_entropy({samples, count}, bins);
    *out = r.nats;
    if (degenerate) *degenerate = r.degenerate ? 1 : 0;
  });
}

cgae_status cgae_graph_load(const char* path, cgae_graph** out) {
  return call([&] {
    need(path, "path");
    need(out, "out");
    *out = new cgae_graph{cgae::read_edge_list(path)};
  });
}

cgae_status cgae_graph_from_adjacency(const double* adjacency, size_t n, cgae_graph** out) {
  return call([&] {
    need(adjacency, "adjacency");
    need(out, "out");
    if (n == 0) throw cgae::UsageError("graph needs at least one node");
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back(std::to_string(i));
    cgae::Tensor a({n, n}, std::vector<double>(adjacency, adjacency + n * n));
    *out = new cgae_graph{cgae::Graph(std::move(a), std::move(ids))};
  });
}

cgae_status cgae_graph_node_count(const cgae_graph* graph, size_t* out) {
  return call([&] {
    need(graph, "graph");
    need(out, "out");
    *out = graph->value.node_count();
  });
}

cgae_status cgae_graph_propagation(const cgae_graph* graph, double* out) {
  return call([&] {
    need(graph, "graph");
    need(out, "out");
    const cgae::Tensor m = cgae::renormalized_propagation(graph->value);
    std::copy(m.data().begin(), m.data().end(), out);
  });
}

cgae_status cgae_graph_chebyshev(const cgae_graph* graph, const double* signal, size_t cols, const double* omega,
                                 size_t terms, double gamma_max, double* out) {
  return call([&] {
    need(graph, "graph");
    need(signal, "signal");
    need(out, "out");
    if (terms) need(omega, "omega");
    const std::size_t n = graph->value.node_count();
    if (cols == 0) throw cgae::UsageError("signal must have at least one column");
    cgae::Tensor x({n, cols}, std::vector<double>(signal, signal + n * cols));
    std::optional<double> g;
    if (gamma_max > 0.0) g = gamma_max;
    const cgae::Tensor y = cgae::chebyshev_filter(graph->value, x, {omega, terms}, g);
    std::copy(y.data().begin(), y.data().end(), out);
  });
}

void cgae_graph_free(cgae_graph* graph) { delete graph; }

cgae_status cgae_model_load(const char* path, cgae_model** out) {
  return call([&] {
    need(path, "path");
    need(out, "out");
    *out = new cgae_model{cgae::load_checkpoint(path)};
  });
}

cgae_status cgae_model_save(const cgae_model* model, const char* path) {
  return call([&] {
    need(model, "model");
    need(path, "path");
    cgae::save_checkpoint(model->value, path);
  });
}

cgae_status cgae_model_info(const cgae_model* model, size_t* nodes, size_t* features, size_t* latent_dim,
                            size_t* parameters) {
  return call([&] {
    need(model, "model");
    const cgae::ModelConfig& c = model->value.config;
    if (nodes) *nodes = c.nodes;
    if (features) *features = c.features;
    if (latent_dim) *latent_dim = c.latent_dim;
    if (parameters) *parameters = model->value.parameter_count();
  });
}

cgae_status cgae_model_sample(const cgae_model* model, const double* pi, size_t rho, uint64_t seed,
                              int add_output_noise, double* out) {
  return call([&] {
    need(model, "model");
    need(pi, "pi");
    need(out, "out");
    const cgae::ModelConfig& c = model->value.config;
    cgae::Tensor x({c.nodes, c.features}, std::vector<double>(pi, pi + c.nodes * c.features));
    cgae::Rng rng(seed);
    const cgae::ForecastEnsemble ens = cgae::generate_ensemble(model->value, x, rho, rng, add_output_noise != 0);
    std::copy(ens.samples.data().begin(), ens.samples.data().end(), out);
  });
}

void cgae_model_free(cgae_model* model) { delete model; }

}  // extern "C"
