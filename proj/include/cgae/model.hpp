#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cgae/autodiff.hpp"
#include "cgae/features.hpp"
#include "cgae/rng.hpp"
#include "cgae/tensor.hpp"

namespace cgae {

struct ModelConfig {
  std::size_t nodes = 0;     // n
  std::size_t features = 0;  // F, the number of selected lags
  std::size_t latent_dim = 4;
  std::size_t gfenn_layers = 2;
  std::size_t encoder_layers = 3;  // hidden ReLU layers before the two heads
  std::size_t decoder_layers = 4;  // hidden ReLU layers before the output
  std::size_t gfenn_width = 8;
  // Hidden widths; left empty they are interpolated geometrically between the
  // stack's input and output sizes.
  std::vector<std::size_t> encoder_widths;
  std::vector<std::size_t> decoder_widths;
  double learning_rate = 5e-4;
  // Standard deviation of the Gaussian decoder likelihood. The training loss
  // is kl + recon / (2 sigma_dec^2).
  double sigma_dec = 0.7071067811865476;
  // Physical units per model unit (inputs and targets are divided by it).
  double scale = 1.0;
  std::size_t batch_size = 1;
  std::uint64_t seed = 0;

  // Throws ConfigError naming the offending field.
  void validate() const;
  // Copy with empty width lists filled in.
  ModelConfig resolved() const;
};

std::vector<std::size_t> geometric_widths(std::size_t in, std::size_t out, std::size_t layers);

struct DenseLayer {
  Tensor weight;  // in x out
  Tensor bias;    // 1 x out
};

struct CgaeModel {
  ModelConfig config;  // always resolved
  std::vector<std::string> node_ids;
  Tensor propagation;  // n x n renormalized adjacency M
  std::vector<Tensor> gfenn;
  std::vector<DenseLayer> encoder;
  DenseLayer mu_head;
  DenseLayer logvar_head;
  std::vector<DenseLayer> decoder;
  DenseLayer output;

  // Glorot-uniform weights from `rng`, zero biases.
  static CgaeModel initialize(const ModelConfig& config, Tensor propagation, std::vector<std::string> node_ids,
                              Rng& rng);

  std::size_t gfenn_out() const { return config.nodes * gfenn.back().cols(); }
  // Parameters in a fixed order; names look like "encoder.1.weight".
  std::vector<ParamRef> parameters();
  std::vector<std::pair<std::string, const Tensor*>> parameters() const;
  std::size_t parameter_count() const;

  friend bool operator==(const CgaeModel& a, const CgaeModel& b);
};

// Parameters and the propagation matrix placed on a tape.
struct BoundModel {
  Var propagation;
  std::vector<Var> gfenn;
  std::vector<std::pair<Var, Var>> encoder;
  std::pair<Var, Var> mu_head;
  std::pair<Var, Var> logvar_head;
  std::vector<std::pair<Var, Var>> decoder;
  std::pair<Var, Var> output;
  std::vector<Var> params;  // same order as CgaeModel::parameters()
};

BoundModel bind(Tape& tape, const CgaeModel& model, bool trainable);

inline constexpr double kLogvarMin = -30.0;
inline constexpr double kLogvarMax = 30.0;

// Taped building blocks.
Var gfenn_forward(const BoundModel& m, Var pi);
std::pair<Var, Var> encode(const BoundModel& m, Var rg, Var target);
Var reparameterize(Var mu, Var logvar, const Tensor& alpha);
Var decode(const BoundModel& m, Var rg, Var z);
Var kl_loss(Var mu, Var logvar);
Var recon_loss(Var target, Var v_hat);

// Untaped counterparts, all in model units.
Tensor gfenn_forward(const CgaeModel& model, const Tensor& pi);  // n x H
struct Posterior {
  Tensor mu;      // d
  Tensor logvar;  // d, clamped to [kLogvarMin, kLogvarMax]
};
Posterior encode(const CgaeModel& model, const Tensor& rg, const Tensor& target);
struct LatentSample {
  Tensor z;
  Tensor alpha;
};
LatentSample reparameterize(const Tensor& mu, const Tensor& logvar, Rng& rng);
Tensor decode(const CgaeModel& model, const Tensor& rg, const Tensor& z);  // n
// Decodes every row of `z` (rows x d) against one representation; rows x n.
Tensor decode_batch(const CgaeModel& model, const Tensor& rg, const Tensor& z);
double kl_loss(const Tensor& mu, const Tensor& logvar);
double recon_loss(const Tensor& target, const Tensor& v_hat);

struct LossParts {
  double total = 0.0;
  double kl = 0.0;
  double recon = 0.0;
};

// Loss kl + recon / (2 sigma_dec^2) for one example in model units, with the
// latent noise `alpha` fixed. When `grads` is non-null it receives one
// gradient per parameter. `relu_margin`, if given, receives the smallest
// |pre-activation| of any relu on the tape.
LossParts example_loss(const CgaeModel& model, const Tensor& pi, const Tensor& target,
                       std::span<const double> alpha, std::vector<Tensor>* grads = nullptr,
                       double* relu_margin = nullptr);

struct EpochStats {
  double loss = 0.0;
  double kl = 0.0;
  double recon = 0.0;
};

// Per-epoch means. Examples are in physical units and divided by
// config.scale before use.
struct TrainTrace {
  std::vector<EpochStats> epochs;
};

TrainTrace train(CgaeModel& model, std::span<const Example> examples, std::size_t epochs, Rng& rng);

// Text checkpoint: config, node ids and every tensor with its shape. Values
// use the shortest round-trip representation, so save/load is bit-exact.
void save_checkpoint(const CgaeModel& model, const std::string& path);
CgaeModel load_checkpoint(const std::string& path);

}  // namespace cgae
