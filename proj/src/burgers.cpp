#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "dpno/fft.hpp"
#include "dpno/pde.hpp"

namespace dpno::pde {

double burgers_default_dt(std::size_t n) { return 1e-4 * 2048.0 / static_cast<double>(n); }

Tensor solve_burgers(const Tensor& u0, const BurgersOptions& opts) {
  if (u0.ndim() != 1) throw ShapeError("solve_burgers: expected a 1-D field, got " + to_string(u0.shape()));
  const std::size_t n = u0.size();
  if (n < 4 || !fft::is_power_of_two(n))
    throw std::invalid_argument("solve_burgers: grid size must be a power of two >= 4, got " + std::to_string(n));
  if (!(opts.nu > 0.0)) throw std::invalid_argument("solve_burgers: viscosity must be positive");
  if (!(opts.final_time > 0.0)) throw std::invalid_argument("solve_burgers: final time must be positive");
  if (!u0.all_finite()) throw NumericError("solve_burgers: initial condition is not finite");

  const double dt_target = opts.dt > 0.0 ? opts.dt : burgers_default_dt(n);
  const auto steps = static_cast<std::size_t>(std::ceil(opts.final_time / dt_target - 1e-9));
  const double dt = opts.final_time / static_cast<double>(steps);

  const fft::RealFft& rf = fft::real_fft(n);
  const std::size_t h = rf.half_size();
  std::vector<double> ik(h), half_decay(h), mask(h);
  for (std::size_t k = 0; k < h; ++k) {
    const double kt = 2.0 * std::numbers::pi * static_cast<double>(k);
    mask[k] = 3 * k < n ? 1.0 : 0.0;
    ik[k] = 2 * k == n ? 0.0 : kt;
    half_decay[k] = std::exp(-opts.nu * kt * kt * dt / 2.0);
  }

  std::vector<cplx> u_hat(h);
  rf.forward(u0.data(), u_hat);
  std::vector<double> phys(n);
  std::vector<cplx> work(h);

  // -(u^2/2)_x in spectral space, dealiased before and after the product.
  auto nonlinear = [&](const std::vector<cplx>& v, std::vector<cplx>& out) {
    for (std::size_t k = 0; k < h; ++k) work[k] = v[k] * mask[k];
    rf.inverse(work, phys);
    for (auto& x : phys) x = 0.5 * x * x;
    rf.forward(phys, out);
    for (std::size_t k = 0; k < h; ++k) out[k] *= cplx(0.0, -ik[k]) * mask[k];
  };

  std::vector<cplx> a(h), b(h), c(h), d(h), stage(h);
  for (std::size_t step = 0; step < steps; ++step) {
    nonlinear(u_hat, a);
    for (std::size_t k = 0; k < h; ++k) stage[k] = half_decay[k] * (u_hat[k] + 0.5 * dt * a[k]);
    nonlinear(stage, b);
    for (std::size_t k = 0; k < h; ++k) stage[k] = half_decay[k] * u_hat[k] + 0.5 * dt * b[k];
    nonlinear(stage, c);
    for (std::size_t k = 0; k < h; ++k) {
      const double e = half_decay[k];
      stage[k] = e * e * u_hat[k] + dt * e * c[k];
    }
    nonlinear(stage, d);
    bool finite = true;
    for (std::size_t k = 0; k < h; ++k) {
      const double e = half_decay[k];
      u_hat[k] = e * e * u_hat[k] + dt / 6.0 * (e * e * a[k] + 2.0 * e * (b[k] + c[k]) + d[k]);
      finite = finite && std::isfinite(u_hat[k].real()) && std::isfinite(u_hat[k].imag());
    }
    if (!finite)
      throw NumericError("solve_burgers: blow-up at step " + std::to_string(step + 1) + " (t = " +
                         std::to_string(dt * static_cast<double>(step + 1)) + ", dt = " + std::to_string(dt) + ")");
  }
  Tensor out({n});
  rf.inverse(u_hat, out.data());
  return out;
}

}  // namespace dpno::pde
