#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>

#include "dpno/fft.hpp"
#include "dpno/pde.hpp"

namespace dpno::pde {

double navier_stokes_default_dt(std::size_t n) { return n <= 64 ? 5e-3 : 1e-3; }

namespace {

struct Wavenumbers {
  std::vector<double> kx, ky, lap, mask;
};

Wavenumbers wavenumbers(std::size_t n) {
  const std::size_t h = n / 2 + 1;
  Wavenumbers w;
  w.kx.resize(n * h);
  w.ky.resize(n * h);
  w.lap.resize(n * h);
  w.mask.resize(n * h);
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t i = 0; i < n; ++i) {
    const long kx = i <= n / 2 ? long(i) : long(i) - long(n);
    for (std::size_t j = 0; j < h; ++j) {
      const std::size_t p = i * h + j;
      // Odd derivatives drop the unpaired Nyquist mode.
      w.kx[p] = 2 * i == n ? 0.0 : two_pi * double(kx);
      w.ky[p] = 2 * j == n ? 0.0 : two_pi * double(j);
      w.lap[p] = two_pi * two_pi * double(kx * kx + long(j * j));
      w.mask[p] = (3 * std::size_t(std::labs(kx)) < n && 3 * j < n) ? 1.0 : 0.0;
    }
  }
  return w;
}

}  // namespace

Tensor solve_navier_stokes(const Tensor& w0, const NsOptions& opts) {
  if (w0.ndim() != 2 || w0.dim(0) != w0.dim(1))
    throw ShapeError("solve_navier_stokes: expected a square n x n field, got " + to_string(w0.shape()));
  const std::size_t n = w0.dim(0);
  if (n < 4 || !fft::is_power_of_two(n))
    throw std::invalid_argument("solve_navier_stokes: grid size must be a power of two >= 4, got " +
                                std::to_string(n));
  if (!(opts.nu > 0.0)) throw std::invalid_argument("solve_navier_stokes: viscosity must be positive");
  if (!w0.all_finite()) throw NumericError("solve_navier_stokes: initial vorticity is not finite");
  double mean = 0.0, peak = 1.0;
  for (double v : w0.data()) {
    mean += v;
    peak = std::max(peak, std::abs(v));
  }
  mean /= static_cast<double>(w0.size());
  if (std::abs(mean) > 1e-10 * peak)
    throw std::invalid_argument("solve_navier_stokes: initial vorticity must have zero mean (mean = " +
                                std::to_string(mean) + ")");

  const double dt = opts.dt > 0.0 ? opts.dt : navier_stokes_default_dt(n);
  if (opts.snapshot_times.empty()) throw std::invalid_argument("solve_navier_stokes: no snapshot times");
  std::map<std::size_t, std::vector<std::size_t>> snapshot_at;
  std::size_t last_step = 0;
  for (std::size_t s = 0; s < opts.snapshot_times.size(); ++s) {
    const double steps = opts.snapshot_times[s] / dt;
    const double rounded = std::round(steps);
    if (!(rounded >= 1.0) || std::abs(steps - rounded) > 1e-6 * std::max(1.0, rounded))
      throw std::invalid_argument("solve_navier_stokes: snapshot time " + std::to_string(opts.snapshot_times[s]) +
                                  " is not a positive multiple of dt = " + std::to_string(dt));
    const auto k = static_cast<std::size_t>(rounded);
    snapshot_at[k].push_back(s);
    last_step = std::max(last_step, k);
  }

  const std::size_t dims[] = {n, n};
  const fft::FieldTransform t(dims);
  const std::size_t ns = t.spectrum_size();
  const Wavenumbers kw = wavenumbers(n);
  std::vector<cplx> scratch(t.scratch_size());

  std::vector<cplx> forcing(ns);
  if (opts.forcing == NsForcing::standard) {
    std::vector<double> f(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double arg = 2.0 * std::numbers::pi * (double(i) + double(j)) / double(n);
        f[i * n + j] = 0.1 * (std::sin(arg) + std::cos(arg));
      }
    t.forward(f, forcing, scratch);
    forcing[0] = 0.0;
  }

  std::vector<cplx> w_hat(ns);
  t.forward(w0.data(), w_hat, scratch);
  w_hat[0] = 0.0;

  std::vector<cplx> spec_u(ns), spec_v(ns), spec_wx(ns), spec_wy(ns);
  std::vector<double> u(n * n), v(n * n), wx(n * n), wy(n * n);
  // Advection -(u . grad w) plus forcing, dealiased by the 2/3 rule.
  auto rhs = [&](const std::vector<cplx>& w, std::vector<cplx>& out) {
    for (std::size_t p = 0; p < ns; ++p) {
      const cplx wm = w[p] * kw.mask[p];
      const cplx psi = kw.lap[p] > 0.0 ? wm / kw.lap[p] : cplx{};
      spec_u[p] = cplx(0.0, kw.ky[p]) * psi;
      spec_v[p] = cplx(0.0, -kw.kx[p]) * psi;
      spec_wx[p] = cplx(0.0, kw.kx[p]) * wm;
      spec_wy[p] = cplx(0.0, kw.ky[p]) * wm;
    }
    t.inverse(spec_u, u, scratch);
    t.inverse(spec_v, v, scratch);
    t.inverse(spec_wx, wx, scratch);
    t.inverse(spec_wy, wy, scratch);
    for (std::size_t k = 0; k < n * n; ++k) u[k] = -(u[k] * wx[k] + v[k] * wy[k]);
    t.forward(u, out, scratch);
    for (std::size_t p = 0; p < ns; ++p) out[p] = out[p] * kw.mask[p] + forcing[p];
    out[0] = 0.0;
  };

  std::vector<double> implicit(ns), explicit_part(ns);
  for (std::size_t p = 0; p < ns; ++p) {
    implicit[p] = 1.0 / (1.0 + 0.5 * dt * opts.nu * kw.lap[p]);
    explicit_part[p] = 1.0 - 0.5 * dt * opts.nu * kw.lap[p];
  }

  Tensor out({opts.snapshot_times.size(), n, n});
  Tensor physical({n, n});
  auto to_physical = [&] { t.inverse(w_hat, physical.data(), scratch); };

  std::vector<cplx> f_now(ns), f_prev(ns), predictor(ns), f_pred(ns);
  for (std::size_t step = 1; step <= last_step; ++step) {
    rhs(w_hat, f_now);
    if (step == 1) {
      // Heun start: explicit predictor, trapezoidal corrector on the advection.
      for (std::size_t p = 0; p < ns; ++p) predictor[p] = (explicit_part[p] * w_hat[p] + dt * f_now[p]) * implicit[p];
      rhs(predictor, f_pred);
      for (std::size_t p = 0; p < ns; ++p)
        w_hat[p] = (explicit_part[p] * w_hat[p] + 0.5 * dt * (f_now[p] + f_pred[p])) * implicit[p];
    } else {
      for (std::size_t p = 0; p < ns; ++p)
        w_hat[p] = (explicit_part[p] * w_hat[p] + dt * (1.5 * f_now[p] - 0.5 * f_prev[p])) * implicit[p];
    }
    std::swap(f_now, f_prev);

    bool finite = true;
    for (const cplx& c : w_hat) finite = finite && std::isfinite(c.real()) && std::isfinite(c.imag());
    if (!finite)
      throw NumericError("solve_navier_stokes: blow-up at step " + std::to_string(step) + " (t = " +
                         std::to_string(dt * double(step)) + ")");

    const auto snap = snapshot_at.find(step);
    if (opts.observer || snap != snapshot_at.end()) to_physical();
    if (opts.observer) opts.observer(step, physical);
    if (snap != snapshot_at.end())
      for (std::size_t s : snap->second) std::copy_n(physical.ptr(), n * n, out.ptr() + s * n * n);
  }
  return out;
}

}  // namespace dpno::pde
