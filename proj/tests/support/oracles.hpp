#pragma once

// Independent reference computations used by the test suites. Nothing here
// calls into the FFT or the autodiff backward rules it is used to check.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "dpno/autodiff.hpp"
#include "dpno/tensor.hpp"

namespace dpno::testing {

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = u(rng);
  return t;
}

inline double rel_error(std::span<const double> analytic, std::span<const double> reference) {
  double diff = 0.0, ref = 0.0, ana = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - reference[i]) * (analytic[i] - reference[i]);
    ref += reference[i] * reference[i];
    ana += analytic[i] * analytic[i];
  }
  const double scale = std::max({std::sqrt(ref), std::sqrt(ana), 1e-12});
  return std::sqrt(diff) / scale;
}

/// Scalar loss recomputed from scratch on a fresh tape.
using LossFn = std::function<Var(Tape&)>;

/// Central-difference check of every parameter gradient. Returns the largest
/// per-tensor relative error.
inline double parameter_gradient_error(const std::vector<Parameter*>& params, const LossFn& loss, double h = 1e-6) {
  for (auto* p : params) p->grad = Tensor(p->value.shape());
  {
    Tape tape;
    tape.backward(loss(tape));
  }
  double worst = 0.0;
  for (auto* p : params) {
    std::vector<double> fd(p->value.size());
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double saved = p->value[i];
      p->value[i] = saved + h;
      Tape tp;
      const double lp = loss(tp).value().item();
      p->value[i] = saved - h;
      Tape tm;
      const double lm = loss(tm).value().item();
      p->value[i] = saved;
      fd[i] = (lp - lm) / (2.0 * h);
    }
    worst = std::max(worst, rel_error(p->grad.data(), fd));
  }
  return worst;
}

/// Central-difference check of d loss / d x for a tape input x.
inline double input_gradient_error(const Tensor& x, const std::function<Var(Tape&, const Var&)>& loss,
                                   double h = 1e-6) {
  Tape tape;
  Var xv = tape.variable(x);
  tape.backward(loss(tape, xv));
  const Tensor analytic = xv.grad();
  std::vector<double> fd(x.size());
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + h;
    Tape tp;
    const double lp = loss(tp, tp.variable(probe)).value().item();
    probe[i] = saved - h;
    Tape tm;
    const double lm = loss(tm, tm.variable(probe)).value().item();
    probe[i] = saved;
    fd[i] = (lp - lm) / (2.0 * h);
  }
  return rel_error(analytic.data(), fd);
}

/// Weighted sum <r, y> with fixed random weights: a smooth scalar probe.
inline Var weighted_sum(Tape& tape, const Var& y, std::uint64_t seed = 99) {
  std::mt19937_64 rng(seed);
  return sum(mul(y, tape.constant(random_tensor(y.shape(), rng))));
}

/// Direct-summation DFT of one real field (1-D or 2-D, row-major), returning
/// the half spectrum on the last axis.
inline std::vector<std::complex<double>> direct_rdft(const std::vector<double>& f, std::size_t n1, std::size_t n2) {
  // n1 == 1 selects the 1-D transform of length n2.
  const std::size_t h = n2 / 2 + 1;
  std::vector<std::complex<double>> out(n1 * h);
  for (std::size_t k1 = 0; k1 < n1; ++k1)
    for (std::size_t k2 = 0; k2 < h; ++k2) {
      std::complex<long double> s{};
      for (std::size_t j1 = 0; j1 < n1; ++j1)
        for (std::size_t j2 = 0; j2 < n2; ++j2) {
          const long double ang = -2.0L * std::numbers::pi_v<long double> *
                                  (static_cast<long double>(j1 * k1) / n1 + static_cast<long double>(j2 * k2) / n2);
          s += static_cast<long double>(f[j1 * n2 + j2]) * std::complex<long double>(std::cos(ang), std::sin(ang));
        }
      out[k1 * h + k2] = {static_cast<double>(s.real()), static_cast<double>(s.imag())};
    }
  return out;
}

}  // namespace dpno::testing
