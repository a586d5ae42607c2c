#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dpno/tensor.hpp"

namespace dpno {

/// A learnable tensor together with its accumulated gradient.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}
  void zero_grad() { grad.fill(0.0); }
};

class Tape;

/// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  /// Gradient after Tape::backward (zeros if nothing flowed here).
  const Tensor& grad() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;
  Tape& tape() const { return *tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Records operations in execution order and replays their backward rules
/// in reverse. Single use: backward may run once.
class Tape {
 public:
  using BackwardFn = std::function<void(const Tensor& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  /// Leaf owned by the tape whose gradient is readable through Var::grad.
  Var variable(Tensor value);
  /// Leaf bound to a Parameter; backward adds into parameter.grad.
  Var parameter(Parameter& p);

  /// Appends an op result. `inputs` decide whether the node needs a gradient;
  /// `backward` is dropped when none of them does.
  Var record(std::string_view op, Tensor value, std::span<const Var> inputs, BackwardFn backward);

  /// Gradient buffer of v, allocated as zeros on first use. For backward rules.
  Tensor& grad_buffer(const Var& v);

  void backward(const Var& loss);

  std::size_t size() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }

 private:
  friend class Var;
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    BackwardFn backward;
    Parameter* param = nullptr;
  };
  const Node& node(const Var& v) const;
  Var push(Node n);

  std::deque<Node> nodes_;
  bool consumed_ = false;
};

// Elementwise arithmetic on equal shapes.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);

/// [m x k] * [k x n].
Var matmul(const Var& a, const Var& b);
/// Batched over the leading axis: [B x m x k] * [B x k x n].
Var batched_matmul(const Var& a, const Var& b);
/// Pointwise affine map on the last axis: x[..., k] * w[k x n] -> [..., n].
Var linear(const Var& x, const Var& w);
/// x[..., C] + b[C]: the only broadcasting op, over all axes but the last.
Var bias_add(const Var& x, const Var& b);
Var gelu(const Var& x);
/// Concatenation along the last (channel) axis.
Var concat_channels(std::span<const Var> parts);
Var transpose(const Var& a);
Var reshape(const Var& a, Shape shape);
Var sum(const Var& a);
/// Mean over the leading (batch) axis of ||pred_i - target_i|| / ||target_i||.
Var relative_l2(const Var& pred, const Var& target);

/// Forward value of relative_l2 on plain tensors.
double relative_l2(const Tensor& pred, const Tensor& target);

}  // namespace dpno
