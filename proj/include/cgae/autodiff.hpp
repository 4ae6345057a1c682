#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "cgae/tensor.hpp"

namespace cgae {

class Tape;

// Handle to a value slot on a tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Tensor& grad() const;
};

// Reverse-mode computation record. Nodes are appended in evaluation order, so
// walking the tape from the loss down to the first node visits every node
// after all of its consumers.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // A value whose gradient is wanted (a parameter or an input under test).
  Var leaf(Tensor value);
  // A value treated as fixed: no gradient flows into it.
  Var constant(Tensor value);

  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  const Tensor& grad(Var v) const { return nodes_[v.id].grad; }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }

  // Zeroes every gradient slot, seeds d(loss)/d(loss) = 1 and back-propagates.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

  // Smallest |pre-activation| seen by any relu on this tape; +inf if none.
  // Finite-difference checks use it to skip points near the kink.
  double min_relu_margin() const { return min_relu_margin_; }

  // Used by the operator implementations.
  using Backprop = std::function<void(Tape&, std::size_t)>;
  Var push(Tensor value, std::vector<std::size_t> inputs, Backprop backprop);
  void accumulate(std::size_t id, const Tensor& g);
  const std::vector<std::size_t>& inputs(std::size_t id) const { return nodes_[id].inputs; }
  const Tensor& value_at(std::size_t id) const { return nodes_[id].value; }
  const Tensor& grad_at(std::size_t id) const { return nodes_[id].grad; }
  bool requires_grad_at(std::size_t id) const { return nodes_[id].requires_grad; }
  void note_relu_margin(double m) {
    if (m < min_relu_margin_) min_relu_margin_ = m;
  }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<std::size_t> inputs;
    Backprop backprop;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
  double min_relu_margin_ = std::numeric_limits<double>::infinity();
};

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var exp(Var a);
Var log(Var a);
Var square(Var a);
Var relu(Var a);
Var scale(Var a, double factor);
Var add_scalar(Var a, double c);
// Elementwise clamp; the gradient is zero where the input was clipped.
Var clamp(Var a, double lo, double hi);
Var sum(Var a);
Var reshape(Var a, Tensor::Shape shape);
// Flattens every operand and joins them into one 1 x total row.
Var concat_row(std::span<const Var> parts);

// A named, trainable tensor owned elsewhere (for example by a model).
struct ParamRef {
  std::string name;
  Tensor* value;
};

// p <- p - eta * g for every entry. A non-finite gradient raises a
// TrainingError naming the parameter and the iteration; nothing is updated in
// that case.
void sgd_step(std::span<const ParamRef> params, std::span<const Tensor> grads, double eta,
              std::size_t iteration = 0);

}  // namespace cgae
