#include "cgae/model.hpp"

#include <cmath>
#include <sstream>

#include "cgae/errors.hpp"
#include "cgae/text.hpp"

namespace cgae {

void ModelConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ConfigError("model." + field + ": " + why);
  };
  if (nodes < 1) fail("nodes", "must be >= 1");
  if (features < 1) fail("features", "must be >= 1");
  if (latent_dim < 1) fail("latent_dim", "must be >= 1");
  if (gfenn_layers < 1) fail("gfenn_layers", "must be >= 1");
  if (encoder_layers < 1) fail("encoder_layers", "must be >= 1");
  if (decoder_layers < 1) fail("decoder_layers", "must be >= 1");
  if (gfenn_width < 1) fail("gfenn_width", "must be >= 1");
  if (!encoder_widths.empty() && encoder_widths.size() != encoder_layers)
    fail("encoder_widths", "needs one entry per encoder layer");
  if (!decoder_widths.empty() && decoder_widths.size() != decoder_layers)
    fail("decoder_widths", "needs one entry per decoder layer");
  for (std::size_t w : encoder_widths)
    if (w < 1) fail("encoder_widths", "entries must be >= 1");
  for (std::size_t w : decoder_widths)
    if (w < 1) fail("decoder_widths", "entries must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) fail("learning_rate", "must be > 0");
  if (!(sigma_dec > 0.0) || !std::isfinite(sigma_dec)) fail("sigma_dec", "must be > 0");
  if (!(scale > 0.0) || !std::isfinite(scale)) fail("scale", "must be > 0");
  if (batch_size < 1) fail("batch_size", "must be >= 1");
}

std::vector<std::size_t> geometric_widths(std::size_t in, std::size_t out, std::size_t layers) {
  std::vector<std::size_t> widths;
  const double ratio = static_cast<double>(out) / static_cast<double>(in);
  for (std::size_t l = 1; l <= layers; ++l) {
    const double w = static_cast<double>(in) * std::pow(ratio, static_cast<double>(l) / static_cast<double>(layers + 1));
    widths.push_back(std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(w))));
  }
  return widths;
}

ModelConfig ModelConfig::resolved() const {
  validate();
  ModelConfig out = *this;
  const std::size_t rep = nodes * gfenn_width;
  if (out.encoder_widths.empty()) out.encoder_widths = geometric_widths(rep + nodes, latent_dim, encoder_layers);
  if (out.decoder_widths.empty()) out.decoder_widths = geometric_widths(rep + latent_dim, nodes, decoder_layers);
  return out;
}

namespace {

Tensor glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor w({fan_in, fan_out});
  for (double& v : w.data()) v = (2.0 * rng.uniform() - 1.0) * limit;
  return w;
}

DenseLayer dense(std::size_t in, std::size_t out, Rng& rng) {
  return {glorot(in, out, rng), Tensor({1, out})};
}

}  // namespace

CgaeModel CgaeModel::initialize(const ModelConfig& config, Tensor propagation, std::vector<std::string> node_ids,
                                Rng& rng) {
  CgaeModel m;
  m.config = config.resolved();
  const ModelConfig& c = m.config;
  if (propagation.rank() != 2 || propagation.rows() != c.nodes || propagation.cols() != c.nodes) {
    throw DimensionError("propagation matrix " + shape_string(propagation.shape()) + " for " +
                         std::to_string(c.nodes) + " nodes");
  }
  if (node_ids.empty()) {
    for (std::size_t i = 0; i < c.nodes; ++i) node_ids.push_back(std::to_string(i));
  }
  if (node_ids.size() != c.nodes) throw DimensionError("node id count does not match model.nodes");
  m.node_ids = std::move(node_ids);
  m.propagation = std::move(propagation);

  std::size_t in = c.features;
  for (std::size_t k = 0; k < c.gfenn_layers; ++k) {
    m.gfenn.push_back(glorot(in, c.gfenn_width, rng));
    in = c.gfenn_width;
  }
  const std::size_t rep = c.nodes * c.gfenn_width;

  in = rep + c.nodes;
  for (std::size_t w : c.encoder_widths) {
    m.encoder.push_back(dense(in, w, rng));
    in = w;
  }
  m.mu_head = dense(in, c.latent_dim, rng);
  m.logvar_head = dense(in, c.latent_dim, rng);

  in = rep + c.latent_dim;
  for (std::size_t w : c.decoder_widths) {
    m.decoder.push_back(dense(in, w, rng));
    in = w;
  }
  m.output = dense(in, c.nodes, rng);
  return m;
}

std::vector<ParamRef> CgaeModel::parameters() {
  std::vector<ParamRef> out;
  for (std::size_t k = 0; k < gfenn.size(); ++k) out.push_back({"gfenn." + std::to_string(k) + ".weight", &gfenn[k]});
  auto add_dense = [&](const std::string& prefix, DenseLayer& l) {
    out.push_back({prefix + ".weight", &l.weight});
    out.push_back({prefix + ".bias", &l.bias});
  };
  for (std::size_t k = 0; k < encoder.size(); ++k) add_dense("encoder." + std::to_string(k), encoder[k]);
  add_dense("encoder.mu", mu_head);
  add_dense("encoder.logvar", logvar_head);
  for (std::size_t k = 0; k < decoder.size(); ++k) add_dense("decoder." + std::to_string(k), decoder[k]);
  add_dense("decoder.output", output);
  return out;
}

std::vector<std::pair<std::string, const Tensor*>> CgaeModel::parameters() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  for (const ParamRef& p : const_cast<CgaeModel*>(this)->parameters()) out.emplace_back(p.name, p.value);
  return out;
}

std::size_t CgaeModel::parameter_count() const {
  std::size_t total = 0;
  for (const auto& [name, t] : parameters()) total += t->size();
  return total;
}

bool operator==(const CgaeModel& a, const CgaeModel& b) {
  if (a.node_ids != b.node_ids || !(a.propagation == b.propagation)) return false;
  const auto& ca = a.config;
  const auto& cb = b.config;
  if (ca.nodes != cb.nodes || ca.features != cb.features || ca.latent_dim != cb.latent_dim ||
      ca.gfenn_layers != cb.gfenn_layers || ca.encoder_layers != cb.encoder_layers ||
      ca.decoder_layers != cb.decoder_layers || ca.gfenn_width != cb.gfenn_width ||
      ca.encoder_widths != cb.encoder_widths || ca.decoder_widths != cb.decoder_widths ||
      ca.learning_rate != cb.learning_rate || ca.sigma_dec != cb.sigma_dec || ca.scale != cb.scale ||
      ca.batch_size != cb.batch_size || ca.seed != cb.seed)
    return false;
  const auto pa = a.parameters();
  const auto pb = b.parameters();
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i)
    if (pa[i].first != pb[i].first || !(*pa[i].second == *pb[i].second)) return false;
  return true;
}

BoundModel bind(Tape& tape, const CgaeModel& model, bool trainable) {
  BoundModel b;
  auto put = [&](const Tensor& t) {
    Var v = trainable ? tape.leaf(t) : tape.constant(t);
    b.params.push_back(v);
    return v;
  };
  auto put_dense = [&](const DenseLayer& l) {
    Var w = put(l.weight);
    Var bias = put(l.bias);
    return std::make_pair(w, bias);
  };
  b.propagation = tape.constant(model.propagation);
  for (const Tensor& w : model.gfenn) b.gfenn.push_back(put(w));
  for (const DenseLayer& l : model.encoder) b.encoder.push_back(put_dense(l));
  b.mu_head = put_dense(model.mu_head);
  b.logvar_head = put_dense(model.logvar_head);
  for (const DenseLayer& l : model.decoder) b.decoder.push_back(put_dense(l));
  b.output = put_dense(model.output);
  return b;
}

namespace {

Var affine(Var x, const std::pair<Var, Var>& layer) { return add(matmul(x, layer.first), layer.second); }

}  // namespace

Var gfenn_forward(const BoundModel& m, Var pi) {
  Var o = pi;
  for (Var w : m.gfenn) o = relu(matmul(matmul(m.propagation, o), w));
  return o;
}

std::pair<Var, Var> encode(const BoundModel& m, Var rg, Var target) {
  const Var parts[] = {rg, target};
  Var h = concat_row(parts);
  for (const auto& layer : m.encoder) h = relu(affine(h, layer));
  Var mu = affine(h, m.mu_head);
  Var logvar = clamp(affine(h, m.logvar_head), kLogvarMin, kLogvarMax);
  return {mu, logvar};
}

Var reparameterize(Var mu, Var logvar, const Tensor& alpha) {
  Var noise = mu.tape->constant(alpha.reshaped(mu.value().shape()));
  return add(mu, mul(noise, exp(scale(logvar, 0.5))));
}

Var decode(const BoundModel& m, Var rg, Var z) {
  const Var parts[] = {rg, z};
  Var h = concat_row(parts);
  for (const auto& layer : m.decoder) h = relu(affine(h, layer));
  return affine(h, m.output);
}

Var kl_loss(Var mu, Var logvar) {
  Var terms = add(sub(exp(logvar), logvar), square(mu));
  return scale(add_scalar(sum(terms), -static_cast<double>(mu.value().size())), 0.5);
}

Var recon_loss(Var target, Var v_hat) {
  Var t = target;
  if (t.value().shape() != v_hat.value().shape()) t = reshape(target, v_hat.value().shape());
  return sum(square(sub(t, v_hat)));
}

Tensor gfenn_forward(const CgaeModel& model, const Tensor& pi) {
  if (pi.rank() != 2 || pi.rows() != model.config.nodes || pi.cols() != model.config.features) {
    throw DimensionError("gfenn_forward: pi has shape " + shape_string(pi.shape()) + ", expected [" +
                         std::to_string(model.config.nodes) + "x" + std::to_string(model.config.features) + "]");
  }
  Tensor o = pi;
  for (const Tensor& w : model.gfenn) o = relu(matmul(matmul(model.propagation, o), w));
  return o;
}

Posterior encode(const CgaeModel& model, const Tensor& rg, const Tensor& target) {
  if (target.size() != model.config.nodes) throw DimensionError("encode: target length does not match nodes");
  Tape tape;
  const BoundModel b = bind(tape, model, false);
  auto [mu, logvar] = encode(b, tape.constant(rg), tape.constant(target));
  const std::size_t d = model.config.latent_dim;
  return {mu.value().reshaped({d}), logvar.value().reshaped({d})};
}

LatentSample reparameterize(const Tensor& mu, const Tensor& logvar, Rng& rng) {
  if (mu.shape() != logvar.shape()) throw DimensionError("reparameterize: mu and logvar shapes differ");
  LatentSample s;
  s.alpha = Tensor(mu.shape());
  s.z = Tensor(mu.shape());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    s.alpha[i] = rng.normal();
    const double lv = std::clamp(logvar[i], kLogvarMin, kLogvarMax);
    s.z[i] = mu[i] + s.alpha[i] * std::exp(0.5 * lv);
  }
  return s;
}

Tensor decode(const CgaeModel& model, const Tensor& rg, const Tensor& z) {
  if (z.size() != model.config.latent_dim) throw DimensionError("decode: z length does not match latent_dim");
  Tape tape;
  const BoundModel b = bind(tape, model, false);
  Var out = decode(b, tape.constant(rg), tape.constant(z));
  return out.value().reshaped({model.config.nodes});
}

Tensor decode_batch(const CgaeModel& model, const Tensor& rg, const Tensor& z) {
  const std::size_t d = model.config.latent_dim;
  if (z.rank() != 2 || z.cols() != d) throw DimensionError("decode_batch: z must be rows x latent_dim");
  const std::size_t rep = rg.size();
  const DenseLayer& first = model.decoder.front();
  if (first.weight.rows() != rep + d) throw DimensionError("decode_batch: representation size mismatch");
  const std::size_t width = first.weight.cols();

  // Split the first layer into its representation rows and latent rows; the
  // representation part is shared by every sample.
  Tensor w_rep({rep, width}), w_lat({d, width});
  for (std::size_t r = 0; r < rep; ++r)
    for (std::size_t c = 0; c < width; ++c) w_rep(r, c) = first.weight(r, c);
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t c = 0; c < width; ++c) w_lat(r, c) = first.weight(rep + r, c);
  const Tensor shared = add(matmul(rg.reshaped({1, rep}), w_rep), first.bias);

  Tensor h = relu(add_row(matmul(z, w_lat), shared));
  for (std::size_t k = 1; k < model.decoder.size(); ++k)
    h = relu(add_row(matmul(h, model.decoder[k].weight), model.decoder[k].bias));
  return add_row(matmul(h, model.output.weight), model.output.bias);
}

double kl_loss(const Tensor& mu, const Tensor& logvar) {
  if (mu.size() != logvar.size()) throw DimensionError("kl_loss: mu and logvar lengths differ");
  double s = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) s += -logvar[i] - 1.0 + std::exp(logvar[i]) + mu[i] * mu[i];
  return 0.5 * s;
}

double recon_loss(const Tensor& target, const Tensor& v_hat) {
  if (target.size() != v_hat.size()) throw DimensionError("recon_loss: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) s += (target[i] - v_hat[i]) * (target[i] - v_hat[i]);
  return s;
}

LossParts example_loss(const CgaeModel& model, const Tensor& pi, const Tensor& target,
                       std::span<const double> alpha, std::vector<Tensor>* grads, double* relu_margin) {
  const std::size_t d = model.config.latent_dim;
  if (alpha.size() != d) throw DimensionError("example_loss: alpha length does not match latent_dim");
  if (pi.rank() != 2 || pi.rows() != model.config.nodes || pi.cols() != model.config.features) {
    throw DimensionError("example_loss: pi has shape " + shape_string(pi.shape()));
  }
  if (target.size() != model.config.nodes) throw DimensionError("example_loss: target length mismatch");

  Tape tape;
  const BoundModel b = bind(tape, model, grads != nullptr);
  Var rg = gfenn_forward(b, tape.constant(pi));
  Var tgt = tape.constant(target.reshaped({1, model.config.nodes}));
  auto [mu, logvar] = encode(b, rg, tgt);
  Var z = reparameterize(mu, logvar, Tensor({1, d}, std::vector<double>(alpha.begin(), alpha.end())));
  Var v_hat = decode(b, rg, z);
  Var kl = kl_loss(mu, logvar);
  Var recon = recon_loss(tgt, v_hat);
  const double weight = 1.0 / (2.0 * model.config.sigma_dec * model.config.sigma_dec);
  Var total = add(kl, scale(recon, weight));

  if (grads) {
    tape.backward(total);
    grads->clear();
    for (Var p : b.params) grads->push_back(p.grad());
  }
  if (relu_margin) *relu_margin = tape.min_relu_margin();
  return {total.value().item(), kl.value().item(), recon.value().item()};
}

TrainTrace train(CgaeModel& model, std::span<const Example> examples, std::size_t epochs, Rng& rng) {
  model.config.validate();
  TrainTrace trace;
  if (epochs == 0) return trace;
  if (examples.empty()) throw UsageError("train: empty dataset");

  const double inv_scale = 1.0 / model.config.scale;
  const std::size_t d = model.config.latent_dim;
  const std::size_t batch = model.config.batch_size;
  std::vector<ParamRef> params = model.parameters();
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<double> alpha(d);
  std::vector<Tensor> grads, batch_grads;
  std::size_t iteration = 0;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    EpochStats stats;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t stop = std::min(order.size(), start + batch);
      batch_grads.clear();
      for (std::size_t pos = start; pos < stop; ++pos) {
        const Example& ex = examples[order[pos]];
        for (double& a : alpha) a = rng.normal();
        const LossParts loss = example_loss(model, scale(ex.pi, inv_scale), scale(ex.target, inv_scale), alpha, &grads);
        if (!std::isfinite(loss.total)) {
          throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", example " +
                              std::to_string(order[pos]));
        }
        stats.loss += loss.total;
        stats.kl += loss.kl;
        stats.recon += loss.recon;
        if (batch_grads.empty()) {
          batch_grads = std::move(grads);
        } else {
          for (std::size_t p = 0; p < grads.size(); ++p) batch_grads[p] = add(batch_grads[p], grads[p]);
        }
      }
      if (stop - start > 1) {
        const double inv = 1.0 / static_cast<double>(stop - start);
        for (Tensor& g : batch_grads) g = scale(g, inv);
      }
      sgd_step(params, batch_grads, model.config.learning_rate, iteration++);
    }
    const double count = static_cast<double>(order.size());
    stats.loss /= count;
    stats.kl /= count;
    stats.recon /= count;
    trace.epochs.push_back(stats);
  }
  return trace;
}

namespace {

constexpr const char* kCheckpointMagic = "cgae-checkpoint";
constexpr int kCheckpointVersion = 1;

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + std::to_string(v[i]);
  return out;
}

void write_tensor(std::ostringstream& os, const std::string& name, const Tensor& t) {
  os << "tensor " << name << ' ' << t.rank();
  for (std::size_t e : t.shape()) os << ' ' << e;
  os << '\n';
  for (std::size_t i = 0; i < t.size(); ++i) os << (i ? " " : "") << text::format_double(t[i]);
  os << '\n';
}

}  // namespace

void save_checkpoint(const CgaeModel& model, const std::string& path) {
  const ModelConfig& c = model.config;
  std::ostringstream os;
  os << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
  os << "nodes " << c.nodes << '\n';
  os << "features " << c.features << '\n';
  os << "latent_dim " << c.latent_dim << '\n';
  os << "gfenn_layers " << c.gfenn_layers << '\n';
  os << "encoder_layers " << c.encoder_layers << '\n';
  os << "decoder_layers " << c.decoder_layers << '\n';
  os << "gfenn_width " << c.gfenn_width << '\n';
  os << "encoder_widths " << join_sizes(c.encoder_widths) << '\n';
  os << "decoder_widths " << join_sizes(c.decoder_widths) << '\n';
  os << "learning_rate " << text::format_double(c.learning_rate) << '\n';
  os << "sigma_dec " << text::format_double(c.sigma_dec) << '\n';
  os << "scale " << text::format_double(c.scale) << '\n';
  os << "batch_size " << c.batch_size << '\n';
  os << "seed " << c.seed << '\n';
  os << "node_ids";
  for (const auto& id : model.node_ids) os << ' ' << id;
  os << '\n';
  write_tensor(os, "propagation", model.propagation);
  for (const auto& [name, t] : model.parameters()) write_tensor(os, name, *t);
  os << "end\n";
  text::write_file(path, os.str());
}

CgaeModel load_checkpoint(const std::string& path) {
  const auto lines = text::read_lines(path);
  std::size_t pos = 0;
  auto next = [&]() -> const std::string& {
    if (pos >= lines.size()) throw DataError(path + ": truncated checkpoint");
    return lines[pos++];
  };
  auto fields_of = [](const std::string& line) {
    std::vector<std::string> out;
    std::istringstream is(line);
    std::string f;
    while (is >> f) out.push_back(f);
    return out;
  };
  auto keyed = [&](const char* key) {
    auto f = fields_of(next());
    if (f.empty() || f[0] != key) throw DataError(path + ": expected '" + std::string(key) + "' on line " + std::to_string(pos));
    f.erase(f.begin());
    return f;
  };
  auto one_size = [&](const char* key) {
    auto f = keyed(key);
    if (f.size() != 1) throw DataError(path + ": malformed '" + std::string(key) + "'");
    return static_cast<std::size_t>(text::parse_int(f[0], key));
  };
  auto one_double = [&](const char* key) {
    auto f = keyed(key);
    if (f.size() != 1) throw DataError(path + ": malformed '" + std::string(key) + "'");
    return text::parse_double(f[0], key);
  };
  auto sizes = [&](const char* key) {
    std::vector<std::size_t> out;
    for (const auto& f : keyed(key)) out.push_back(static_cast<std::size_t>(text::parse_int(f, key)));
    return out;
  };

  const auto header = fields_of(next());
  if (header.size() != 2 || header[0] != kCheckpointMagic) throw DataError(path + ": not a checkpoint file");
  if (text::parse_int(header[1], "checkpoint version") != kCheckpointVersion) {
    throw DataError(path + ": unsupported checkpoint version " + header[1]);
  }

  ModelConfig c;
  c.nodes = one_size("nodes");
  c.features = one_size("features");
  c.latent_dim = one_size("latent_dim");
  c.gfenn_layers = one_size("gfenn_layers");
  c.encoder_layers = one_size("encoder_layers");
  c.decoder_layers = one_size("decoder_layers");
  c.gfenn_width = one_size("gfenn_width");
  c.encoder_widths = sizes("encoder_widths");
  c.decoder_widths = sizes("decoder_widths");
  c.learning_rate = one_double("learning_rate");
  c.sigma_dec = one_double("sigma_dec");
  c.scale = one_double("scale");
  c.batch_size = one_size("batch_size");
  {
    auto f = keyed("seed");
    if (f.size() != 1) throw DataError(path + ": malformed 'seed'");
    c.seed = std::stoull(f[0]);
  }
  std::vector<std::string> ids = keyed("node_ids");

  auto read_tensor = [&](const std::string& expected) {
    auto f = fields_of(next());
    if (f.size() < 3 || f[0] != "tensor" || f[1] != expected) {
      throw DataError(path + ": expected tensor '" + expected + "' on line " + std::to_string(pos));
    }
    const auto rank = static_cast<std::size_t>(text::parse_int(f[2], "tensor rank"));
    if (f.size() != 3 + rank) throw DataError(path + ": malformed shape for tensor " + expected);
    Tensor::Shape shape;
    for (std::size_t r = 0; r < rank; ++r) shape.push_back(static_cast<std::size_t>(text::parse_int(f[3 + r], "extent")));
    const auto values = fields_of(next());
    std::vector<double> data;
    data.reserve(values.size());
    for (const auto& v : values) data.push_back(text::parse_double(v, expected));
    if (shape.empty() || data.size() != shape_size(shape)) {
      throw DataError(path + ": tensor " + expected + " has " + std::to_string(data.size()) +
                      " values for shape " + shape_string(shape));
    }
    for (std::size_t e : shape)
      if (e == 0) throw DataError(path + ": tensor " + expected + " has a zero extent");
    return Tensor(std::move(shape), std::move(data));
  };

  // Build a skeleton with the right layout, then overwrite every tensor.
  Rng scratch(0);
  CgaeModel m = CgaeModel::initialize(c, Tensor({c.nodes, c.nodes}), ids, scratch);
  m.propagation = read_tensor("propagation");
  for (ParamRef& p : m.parameters()) {
    Tensor t = read_tensor(p.name);
    if (t.shape() != p.value->shape()) {
      throw DataError(path + ": tensor " + p.name + " has shape " + shape_string(t.shape()) + ", expected " +
                      shape_string(p.value->shape()));
    }
    *p.value = std::move(t);
  }
  if (fields_of(next()) != std::vector<std::string>{"end"}) throw DataError(path + ": missing 'end' marker");
  return m;
}

}  // namespace cgae
