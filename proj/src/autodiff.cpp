#include "cgae/autodiff.hpp"

#include <cmath>

#include "cgae/errors.hpp"

namespace cgae {

const Tensor& Var::value() const { return tape->value(*this); }
const Tensor& Var::grad() const { return tape->grad(*this); }

Var Tape::leaf(Tensor value) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = true;
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

Var Tape::constant(Tensor value) {
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

Var Tape::push(Tensor value, std::vector<std::size_t> inputs, Backprop backprop) {
  Node node;
  node.value = std::move(value);
  for (std::size_t id : inputs) node.requires_grad = node.requires_grad || nodes_[id].requires_grad;
  node.inputs = std::move(inputs);
  node.backprop = std::move(backprop);
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

void Tape::accumulate(std::size_t id, const Tensor& g) {
  Node& node = nodes_[id];
  if (!node.requires_grad) return;
  if (g.size() != node.grad.size()) {
    throw DimensionError("gradient shape " + shape_string(g.shape()) + " does not match value " +
                         shape_string(node.value.shape()));
  }
  for (std::size_t i = 0; i < g.size(); ++i) node.grad[i] += g[i];
}

void Tape::backward(Var loss) {
  if (nodes_.empty()) throw UsageError("backward called on an empty tape");
  if (loss.tape != this || loss.id >= nodes_.size()) {
    throw UsageError("backward: loss does not belong to this tape");
  }
  if (nodes_[loss.id].value.size() != 1) {
    throw UsageError("backward: loss must be a scalar, got shape " +
                     shape_string(nodes_[loss.id].value.shape()));
  }
  for (Node& node : nodes_) node.grad = zeros_like(node.value);
  nodes_[loss.id].grad[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (node.requires_grad && node.backprop) node.backprop(*this, i);
  }
}

namespace {

// Collapses an upstream gradient onto an operand that was broadcast as a
// scalar.
Tensor reduce_to(const Tensor& g, const Tensor& operand) {
  if (g.shape() == operand.shape()) return g;
  return Tensor(operand.shape(), sum(g));
}

Tape& tape_of(Var a, Var b) {
  if (a.tape != b.tape) throw UsageError("operands live on different tapes");
  return *a.tape;
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  return t.push(matmul(a.value(), b.value()), {a.id, b.id}, [](Tape& tp, std::size_t self) {
    const auto& in = tp.inputs(self);
    const Tensor& g = tp.grad_at(self);
    if (tp.requires_grad_at(in[0])) tp.accumulate(in[0], matmul(g, transpose(tp.value_at(in[1]))));
    if (tp.requires_grad_at(in[1])) tp.accumulate(in[1], matmul(transpose(tp.value_at(in[0])), g));
  });
}

Var add(Var a, Var b) {
  Tape& t = tape_of(a, b);
  return t.push(add(a.value(), b.value()), {a.id, b.id}, [](Tape& tp, std::size_t self) {
    const auto& in = tp.inputs(self);
    const Tensor& g = tp.grad_at(self);
    tp.accumulate(in[0], reduce_to(g, tp.value_at(in[0])));
    tp.accumulate(in[1], reduce_to(g, tp.value_at(in[1])));
  });
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a, b);
  return t.push(sub(a.value(), b.value()), {a.id, b.id}, [](Tape& tp, std::size_t self) {
    const auto& in = tp.inputs(self);
    const Tensor& g = tp.grad_at(self);
    tp.accumulate(in[0], reduce_to(g, tp.value_at(in[0])));
    tp.accumulate(in[1], reduce_to(scale(g, -1.0), tp.value_at(in[1])));
  });
}

Var mul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  return t.push(mul(a.value(), b.value()), {a.id, b.id}, [](Tape& tp, std::size_t self) {
    const auto& in = tp.inputs(self);
    const Tensor& g = tp.grad_at(self);
    const Tensor& av = tp.value_at(in[0]);
    const Tensor& bv = tp.value_at(in[1]);
    if (tp.requires_grad_at(in[0])) tp.accumulate(in[0], reduce_to(mul(g, bv), av));
    if (tp.requires_grad_at(in[1])) tp.accumulate(in[1], reduce_to(mul(g, av), bv));
  });
}

Var exp(Var a) {
  return a.tape->push(exp(a.value()), {a.id}, [](Tape& tp, std::size_t self) {
    tp.accumulate(tp.inputs(self)[0], mul(tp.grad_at(self), tp.value_at(self)));
  });
}

Var log(Var a) {
  return a.tape->push(log(a.value()), {a.id}, [](Tape& tp, std::size_t self) {
    const std::size_t in = tp.inputs(self)[0];
    const Tensor& x = tp.value_at(in);
    Tensor g = tp.grad_at(self);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] /= x[i];
    tp.accumulate(in, g);
  });
}

Var square(Var a) {
  return a.tape->push(square(a.value()), {a.id}, [](Tape& tp, std::size_t self) {
    const std::size_t in = tp.inputs(self)[0];
    const Tensor& x = tp.value_at(in);
    Tensor g = tp.grad_at(self);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= 2.0 * x[i];
    tp.accumulate(in, g);
  });
}

Var relu(Var a) {
  const Tensor& x = a.value();
  for (double v : x.data()) a.tape->note_relu_margin(std::fabs(v));
  return a.tape->push(relu(x), {a.id}, [](Tape& tp, std::size_t self) {
    const std::size_t in = tp.inputs(self)[0];
    const Tensor& xv = tp.value_at(in);
    Tensor g = tp.grad_at(self);
    // Subgradient at exactly zero is taken as zero.
    for (std::size_t i = 0; i < g.size(); ++i)
      if (!(xv[i] > 0.0)) g[i] = 0.0;
    tp.accumulate(in, g);
  });
}

Var scale(Var a, double factor) {
  return a.tape->push(scale(a.value(), factor), {a.id}, [factor](Tape& tp, std::size_t self) {
    tp.accumulate(tp.inputs(self)[0], scale(tp.grad_at(self), factor));
  });
}

Var add_scalar(Var a, double c) {
  Tensor out = a.value();
  for (double& v : out.data()) v += c;
  return a.tape->push(std::move(out), {a.id}, [](Tape& tp, std::size_t self) {
    tp.accumulate(tp.inputs(self)[0], tp.grad_at(self));
  });
}

Var clamp(Var a, double lo, double hi) {
  Tensor out = a.value();
  for (double& v : out.data()) v = v < lo ? lo : (v > hi ? hi : v);
  return a.tape->push(std::move(out), {a.id}, [lo, hi](Tape& tp, std::size_t self) {
    const std::size_t in = tp.inputs(self)[0];
    const Tensor& x = tp.value_at(in);
    Tensor g = tp.grad_at(self);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (x[i] < lo || x[i] > hi) g[i] = 0.0;
    tp.accumulate(in, g);
  });
}

Var sum(Var a) {
  return a.tape->push(Tensor::scalar(sum(a.value())), {a.id}, [](Tape& tp, std::size_t self) {
    const std::size_t in = tp.inputs(self)[0];
    tp.accumulate(in, Tensor(tp.value_at(in).shape(), tp.grad_at(self)[0]));
  });
}

Var reshape(Var a, Tensor::Shape shape) {
  return a.tape->push(a.value().reshaped(std::move(shape)), {a.id}, [](Tape& tp, std::size_t self) {
    const std::size_t in = tp.inputs(self)[0];
    tp.accumulate(in, tp.grad_at(self).reshaped(tp.value_at(in).shape()));
  });
}

Var concat_row(std::span<const Var> parts) {
  if (parts.empty()) throw UsageError("concat_row: nothing to concatenate");
  Tape& t = *parts.front().tape;
  std::vector<double> data;
  std::vector<std::size_t> ids;
  for (const Var& p : parts) {
    if (p.tape != &t) throw UsageError("operands live on different tapes");
    const auto& d = p.value().storage();
    data.insert(data.end(), d.begin(), d.end());
    ids.push_back(p.id);
  }
  const std::size_t total = data.size();
  return t.push(Tensor({1, total}, std::move(data)), std::move(ids), [](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad_at(self);
    std::size_t offset = 0;
    for (std::size_t in : tp.inputs(self)) {
      const Tensor& v = tp.value_at(in);
      if (tp.requires_grad_at(in)) {
        std::vector<double> part(g.storage().begin() + static_cast<std::ptrdiff_t>(offset),
                                 g.storage().begin() + static_cast<std::ptrdiff_t>(offset + v.size()));
        tp.accumulate(in, Tensor(v.shape(), std::move(part)));
      }
      offset += v.size();
    }
  });
}

void sgd_step(std::span<const ParamRef> params, std::span<const Tensor> grads, double eta,
              std::size_t iteration) {
  if (params.size() != grads.size()) {
    throw DimensionError("sgd_step: " + std::to_string(params.size()) + " parameters but " +
                         std::to_string(grads.size()) + " gradients");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].value->shape() != grads[i].shape()) {
      throw DimensionError("sgd_step: parameter " + params[i].name + " has shape " +
                           shape_string(params[i].value->shape()) + " but gradient has " +
                           shape_string(grads[i].shape()));
    }
    if (!grads[i].all_finite()) {
      throw TrainingError("non-finite gradient for parameter " + params[i].name + " at iteration " +
                          std::to_string(iteration));
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].value->data();
    const auto g = grads[i].data();
    for (std::size_t j = 0; j < p.size(); ++j) p[j] -= eta * g[j];
  }
}

}  // namespace cgae
