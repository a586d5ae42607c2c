#pragma once

#include <cmath>
#include <numbers>

namespace dpno::kernels::detail {

// tanh-form GeLU: 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3))).
inline constexpr double kGeluC = 0.044715;
inline const double kGeluS = std::sqrt(2.0 / std::numbers::pi);

// tanh through one exp; libm tanh goes through the slower expm1.
inline double fast_tanh(double u) {
  if (std::abs(u) < 1e-3) return u * (1.0 - u * u * (1.0 / 3.0 - 2.0 / 15.0 * u * u));
  return 1.0 - 2.0 / (std::exp(2.0 * u) + 1.0);
}

inline double gelu(double x) {
  const double t = fast_tanh(kGeluS * (x + kGeluC * x * x * x));
  return 0.5 * x * (1.0 + t);
}

inline double gelu_grad(double x) {
  const double t = fast_tanh(kGeluS * (x + kGeluC * x * x * x));
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluS * (1.0 + 3.0 * kGeluC * x * x);
}

}  // namespace dpno::kernels::detail
