#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dpno/autodiff.hpp"

namespace dpno {

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
};

/// Moments for one parameter tensor.
struct AdamWState {
  Tensor m;
  Tensor v;
  std::uint64_t t = 0;

  AdamWState() = default;
  explicit AdamWState(const Shape& shape) : m(shape), v(shape) {}
};

/// One AdamW update with decoupled weight decay:
///   theta -= lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * theta)
void adamw_step(Tensor& param, const Tensor& grad, AdamWState& state, const AdamWConfig& cfg);

/// AdamW over a fixed set of parameters; consumes and clears their gradients.
class AdamW {
 public:
  AdamW(std::vector<Parameter*> params, AdamWConfig cfg);

  void step();
  void zero_grad();
  void set_lr(double lr) { cfg_.lr = lr; }
  const AdamWConfig& config() const { return cfg_; }

 private:
  std::vector<Parameter*> params_;
  std::vector<AdamWState> states_;
  AdamWConfig cfg_;
};

}  // namespace dpno
