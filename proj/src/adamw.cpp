#include "dpno/adamw.hpp"

#include <cmath>

namespace dpno {

void adamw_step(Tensor& param, const Tensor& grad, AdamWState& state, const AdamWConfig& cfg) {
  if (grad.shape() != param.shape())
    throw ShapeError("adamw_step: gradient " + to_string(grad.shape()) + " vs parameter " + to_string(param.shape()));
  if (state.m.shape() != param.shape()) state = AdamWState(param.shape());
  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    double& m = state.m[i];
    double& v = state.v[i];
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
    const double m_hat = m / bc1;
    const double v_hat = v / bc2;
    param[i] -= cfg.lr * (m_hat / (std::sqrt(v_hat) + cfg.eps) + cfg.weight_decay * param[i]);
  }
}

AdamW::AdamW(std::vector<Parameter*> params, AdamWConfig cfg) : params_(std::move(params)), cfg_(cfg) {
  states_.reserve(params_.size());
  for (auto* p : params_) states_.emplace_back(p->value.shape());
}

void AdamW::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) adamw_step(params_[i]->value, params_[i]->grad, states_[i], cfg_);
}

void AdamW::zero_grad() {
  for (auto* p : params_) p->zero_grad();
}

}  // namespace dpno
