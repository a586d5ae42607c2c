#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "dpno/fft.hpp"
#include "dpno/spectral.hpp"
#include "support/oracles.hpp"

using namespace dpno;
using dpno::testing::direct_rdft;
using dpno::testing::input_gradient_error;
using dpno::testing::random_tensor;
using dpno::testing::weighted_sum;

namespace {

ComplexTensor random_coeffs(const Shape& shape, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  ComplexTensor c(shape);
  for (auto& v : c.data()) v = {u(rng), u(rng)};
  return c;
}

double real_inner(const ComplexTensor& a, const ComplexTensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
  return s;
}

double inner(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

TEST_CASE("fft rejects non-power-of-two sizes") {
  CHECK_THROWS_AS(fft::Radix2(12), std::invalid_argument);
  CHECK_THROWS_AS(RfftPlan({48}, {4}), std::invalid_argument);
  CHECK_THROWS_AS(RfftPlan({16, 20}, {4, 4}), std::invalid_argument);
}

TEST_CASE("plan validates k_max") {
  CHECK_NOTHROW(RfftPlan({16}, {9}));
  CHECK_THROWS_AS(RfftPlan({16}, {10}), std::invalid_argument);
  CHECK_THROWS_AS(RfftPlan({16}, {0}), std::invalid_argument);
  CHECK_THROWS_AS(RfftPlan({16, 16}, {10, 4}), std::invalid_argument);
}

TEST_CASE("rfft of a constant field") {
  const RfftPlan plan({32}, {17});
  const ComplexTensor c = rfft(Tensor({1, 32, 1}, 2.5), plan);
  CHECK(std::abs(c[0] - cplx(2.5 * 32, 0)) < 1e-12);
  for (std::size_t k = 1; k < c.size(); ++k) CHECK(std::abs(c[k]) < 1e-12);
}

TEST_CASE("rfft of a unit impulse") {
  const RfftPlan plan({16, 8}, {1, 1});
  Tensor x({1, 16, 8, 1});
  x[0] = 1.0;
  const ComplexTensor c = rfft(x, plan);
  for (const cplx& v : c.data()) CHECK(std::abs(v - cplx(1, 0)) < 1e-12);
}

TEST_CASE("rfft matches a direct DFT and satisfies Parseval") {
  std::mt19937_64 rng(1);
  for (std::size_t n : {2u, 4u, 8u, 16u, 32u, 64u}) {
    const RfftPlan plan({n}, {1});
    const Tensor x = random_tensor({1, n, 1}, rng);
    const ComplexTensor c = rfft(x, plan);
    const auto ref = direct_rdft(x.storage(), 1, n);
    double err = 0.0, scale = 0.0;
    for (std::size_t k = 0; k < ref.size(); ++k) {
      err = std::max(err, std::abs(c[k] - ref[k]));
      scale = std::max(scale, std::abs(ref[k]));
    }
    CHECK(err / scale < 1e-12);

    double energy = 0.0, spec = 0.0;
    for (double v : x.data()) energy += v * v;
    for (std::size_t k = 0; k < ref.size(); ++k) {
      const double w = (k == 0 || 2 * k == n) ? 1.0 : 2.0;
      spec += w * std::norm(c[k]);
    }
    CHECK(std::abs(energy - spec / n) / energy < 1e-10);
  }
}

TEST_CASE("2-D rfft matches a direct DFT") {
  std::mt19937_64 rng(2);
  const std::size_t n1 = 8, n2 = 16;
  const RfftPlan plan({n1, n2}, {1, 1});
  const Tensor x = random_tensor({1, n1, n2, 1}, rng);
  const ComplexTensor c = rfft(x, plan);
  const auto ref = direct_rdft(x.storage(), n1, n2);
  double err = 0.0, energy = 0.0, spec = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    err = std::max(err, std::abs(c[i] - ref[i]));
    const std::size_t k2 = i % (n2 / 2 + 1);
    spec += ((k2 == 0 || 2 * k2 == n2) ? 1.0 : 2.0) * std::norm(c[i]);
  }
  for (double v : x.data()) energy += v * v;
  CHECK(err < 1e-11);
  CHECK(std::abs(energy - spec / (n1 * n2)) / energy < 1e-10);
}

TEST_CASE("multichannel batches transform each channel independently") {
  std::mt19937_64 rng(3);
  const std::size_t n = 16, b = 2, ch = 3;
  const RfftPlan plan({n}, {1});
  const Tensor x = random_tensor({b, n, ch}, rng);
  const ComplexTensor c = rfft(x, plan);
  const std::size_t h = n / 2 + 1;
  for (std::size_t s = 0; s < b; ++s)
    for (std::size_t q = 0; q < ch; ++q) {
      std::vector<double> f(n);
      for (std::size_t j = 0; j < n; ++j) f[j] = x[(s * n + j) * ch + q];
      const auto ref = direct_rdft(f, 1, n);
      for (std::size_t k = 0; k < h; ++k) CHECK(std::abs(c[(s * h + k) * ch + q] - ref[k]) < 1e-12);
    }
}

TEST_CASE("round trip irfft(rfft(x)) == x") {
  std::mt19937_64 rng(4);
  for (std::size_t n : {8u, 64u, 256u}) {
    const RfftPlan plan({n}, {1});
    const Tensor x = random_tensor({2, n, 3}, rng);
    CHECK(max_abs_diff(irfft(rfft(x, plan), plan), x) < 1e-12);
  }
  const RfftPlan plan2({32, 64}, {1, 1});
  const Tensor x2 = random_tensor({2, 32, 64, 2}, rng);
  CHECK(max_abs_diff(irfft(rfft(x2, plan2), plan2), x2) < 1e-12);
}

TEST_CASE("irfft of zero coefficients is the zero field") {
  const RfftPlan plan({16}, {1});
  const Tensor x = irfft(ComplexTensor({1, 9, 1}), plan);
  for (double v : x.data()) CHECK(v == 0.0);
}

TEST_CASE("irfft of a single cosine mode") {
  const std::size_t n = 64;
  const RfftPlan plan({n}, {1});
  ComplexTensor c({1, n / 2 + 1, 1});
  c[1] = {n / 2.0, 0.0};
  const Tensor x = irfft(c, plan);
  for (std::size_t j = 0; j < n; ++j) CHECK(std::abs(x[j] - std::cos(2 * std::numbers::pi * j / n)) < 1e-12);
}

TEST_CASE("transform layout errors") {
  const RfftPlan plan({16}, {4});
  CHECK_THROWS_AS(rfft(Tensor({1, 8, 1}), plan), ShapeError);
  CHECK_THROWS_AS(irfft(ComplexTensor({1, 8, 1}), plan), ShapeError);
}

TEST_CASE("adjoint identity <rfft(x), y> == <x, rfft_adjoint(y)>") {
  std::mt19937_64 rng(5);
  for (auto dims : {std::vector<std::size_t>{32}, std::vector<std::size_t>{8, 16}}) {
    const RfftPlan plan(dims, std::vector<std::size_t>(dims.size(), 1));
    Shape fs{2};
    for (auto d : dims) fs.push_back(d);
    fs.push_back(3);
    Shape ss{2};
    for (auto d : plan.spectrum_dims()) ss.push_back(d);
    ss.push_back(3);
    const Tensor x = random_tensor(fs, rng);
    ComplexTensor y = random_coeffs(ss, rng);
    // Only the real part of the self-conjugate coefficients is observable.
    const std::size_t h = dims.back() / 2 + 1, ns = plan.spectrum_size();
    for (std::size_t i = 0; i < y.size(); ++i) {
      const std::size_t k2 = ((i / 3) % ns) % h;
      if (k2 == 0 || 2 * k2 == dims.back()) y[i] = y[i].real();
    }
    const double lhs = real_inner(rfft(x, plan), y);
    const double rhs = inner(x, rfft_adjoint(y, plan));
    CHECK(std::abs(lhs - rhs) / std::abs(lhs) < 1e-10);
  }
}

TEST_CASE("spectral_conv with identity weights over the full spectrum is the identity") {
  std::mt19937_64 rng(6);
  {
    const std::size_t kmax[] = {33};
    const RfftPlan plan({64}, {33});
    const Tensor x = random_tensor({2, 64, 3}, rng);
    CHECK(max_abs_diff(spectral_conv(x, spectral_identity_weights(kmax, 3), plan), x) < 1e-10);
  }
  {
    const std::size_t kmax[] = {9, 9};
    const RfftPlan plan({16, 16}, {9, 9});
    const Tensor x = random_tensor({2, 16, 16, 2}, rng);
    CHECK(max_abs_diff(spectral_conv(x, spectral_identity_weights(kmax, 2), plan), x) < 1e-10);
  }
}

TEST_CASE("spectral_conv with k_max = 1 returns the per-channel mean") {
  std::mt19937_64 rng(7);
  const std::size_t n = 32, ch = 2;
  const std::size_t kmax[] = {1};
  const RfftPlan plan({n}, {1});
  const Tensor x = random_tensor({1, n, ch}, rng);
  const Tensor y = spectral_conv(x, spectral_identity_weights(kmax, ch), plan);
  for (std::size_t c = 0; c < ch; ++c) {
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += x[j * ch + c];
    mean /= n;
    for (std::size_t j = 0; j < n; ++j) CHECK(std::abs(y[j * ch + c] - mean) < 1e-12);
  }
  // 2-D: the same holds with a single retained mode on both axes.
  const std::size_t kmax2[] = {1, 1};
  const RfftPlan plan2({8, 8}, {1, 1});
  const Tensor x2 = random_tensor({1, 8, 8, 1}, rng);
  const Tensor y2 = spectral_conv(x2, spectral_identity_weights(kmax2, 1), plan2);
  double mean = 0.0;
  for (double v : x2.data()) mean += v;
  mean /= 64;
  for (double v : y2.data()) CHECK(std::abs(v - mean) < 1e-12);
}

TEST_CASE("spectral_conv keeps both signs of each retained full-axis mode") {
  // A field cos(2 pi x) varying along the full axis survives k_max = 2.
  const std::size_t n = 16;
  const std::size_t kmax[] = {2, 1};
  const RfftPlan plan({n, n}, {2, 1});
  Tensor x({1, n, n, 1});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) x[i * n + j] = std::cos(2 * std::numbers::pi * i / n);
  CHECK(max_abs_diff(spectral_conv(x, spectral_identity_weights(kmax, 1), plan), x) < 1e-12);
}

TEST_CASE("spectral_conv is linear") {
  std::mt19937_64 rng(8);
  const std::size_t kmax[] = {5, 4};
  const RfftPlan plan({16, 16}, {5, 4});
  const Tensor w = random_tensor(spectral_weight_shape(kmax, 2, 3), rng);
  const Tensor x = random_tensor({2, 16, 16, 2}, rng);
  const Tensor y = random_tensor({2, 16, 16, 2}, rng);
  const double a = 0.7, b = -1.3;
  Tensor combo(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) combo[i] = a * x[i] + b * y[i];
  const Tensor lhs = spectral_conv(combo, w, plan);
  const Tensor sx = spectral_conv(x, w, plan), sy = spectral_conv(y, w, plan);
  Tensor rhs(lhs.shape());
  for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = a * sx[i] + b * sy[i];
  CHECK(max_abs_diff(lhs, rhs) < 1e-10);
}

TEST_CASE("spectral_conv width mismatch") {
  const std::size_t kmax[] = {4};
  const RfftPlan plan({16}, {4});
  CHECK_THROWS_AS(spectral_conv(Tensor({1, 16, 3}), Tensor(spectral_weight_shape(kmax, 2, 2)), plan), ShapeError);
  const std::size_t other[] = {5};
  CHECK_THROWS_AS(spectral_conv(Tensor({1, 16, 2}), Tensor(spectral_weight_shape(other, 2, 2)), plan), ShapeError);
}

TEST_CASE("spectral weight shape does not depend on the grid") {
  const std::size_t kmax[] = {12, 12};
  CHECK(spectral_weight_shape(kmax, 4, 5) == Shape{23, 12, 4, 5, 2});
  std::mt19937_64 rng(9);
  const Tensor w = random_tensor(spectral_weight_shape(kmax, 1, 1), rng);
  for (std::size_t n : {32u, 64u}) {
    const RfftPlan plan({n, n}, {12, 12});
    CHECK(spectral_conv(random_tensor({1, n, n, 1}, rng), w, plan).shape() == Shape{1, n, n, 1});
  }
}

TEST_CASE("spectral_conv gradients match finite differences on an 8-point grid") {
  std::mt19937_64 rng(10);
  SUBCASE("1-D") {
    const std::size_t kmax[] = {5};
    const RfftPlan plan({8}, {5});
    const Tensor w = random_tensor(spectral_weight_shape(kmax, 2, 3), rng);
    const Tensor x = random_tensor({2, 8, 2}, rng);
    CHECK(input_gradient_error(x, [&](Tape& t, const Var& v) {
            return weighted_sum(t, spectral_conv(v, t.constant(w), plan));
          }) < 1e-5);
    CHECK(input_gradient_error(w, [&](Tape& t, const Var& v) {
            return weighted_sum(t, spectral_conv(t.constant(x), v, plan));
          }) < 1e-5);
  }
  SUBCASE("2-D") {
    const std::size_t kmax[] = {3, 5};
    const RfftPlan plan({8, 8}, {3, 5});
    const Tensor w = random_tensor(spectral_weight_shape(kmax, 2, 2), rng);
    const Tensor x = random_tensor({1, 8, 8, 2}, rng);
    CHECK(input_gradient_error(x, [&](Tape& t, const Var& v) {
            return weighted_sum(t, spectral_conv(v, t.constant(w), plan));
          }) < 1e-5);
    // Imaginary parts on the self-conjugate column only feed the discarded
    // part of the spectrum, so their gradient is legitimately zero.
    CHECK(input_gradient_error(w, [&](Tape& t, const Var& v) {
            return weighted_sum(t, spectral_conv(t.constant(x), v, plan));
          }) < 1e-5);
  }
}

TEST_CASE("mode truncation is idempotent") {
  std::mt19937_64 rng(11);
  const RfftPlan plan({16, 16}, {4, 3});
  const ComplexTensor c = random_coeffs({2, 16, 9, 2}, rng);
  const ComplexTensor once = truncate_modes(c, plan);
  const ComplexTensor twice = truncate_modes(once, plan);
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(once[i] == twice[i]);
  std::size_t kept = 0;
  for (const auto& v : once.data()) kept += v != cplx{};
  CHECK(kept == 2 * 7 * 3 * 2);
}
