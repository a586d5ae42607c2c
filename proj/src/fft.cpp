#include "dpno/fft.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <vector>

namespace dpno::fft {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

Radix2::Radix2(std::size_t n) : n_(n) {
  if (!is_power_of_two(n))
    throw std::invalid_argument("FFT length must be a power of two, got " + std::to_string(n));
  twiddle_.resize(n / 2);
  for (std::size_t k = 0; k < n / 2; ++k) {
    const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    twiddle_[k] = {std::cos(ang), std::sin(ang)};
  }
  bitrev_.resize(n);
  std::size_t bits = 0;
  while ((std::size_t{1} << bits) < n) ++bits;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = 0;
    for (std::size_t b = 0; b < bits; ++b)
      if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
    bitrev_[i] = r;
  }
}

void Radix2::transform(std::span<cplx> x, bool inverse) const {
  if (x.size() != n_) throw std::invalid_argument("FFT buffer length mismatch");
  for (std::size_t i = 0; i < n_; ++i)
    if (i < bitrev_[i]) std::swap(x[i], x[bitrev_[i]]);
  for (std::size_t len = 2; len <= n_; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t step = n_ / len;
    for (std::size_t start = 0; start < n_; start += len) {
      for (std::size_t j = 0; j < half; ++j) {
        cplx w = twiddle_[j * step];
        if (inverse) w = std::conj(w);
        const cplx t = w * x[start + j + half];
        x[start + j + half] = x[start + j] - t;
        x[start + j] += t;
      }
    }
  }
}

RealFft::RealFft(std::size_t n) : n_(n), half_(n >= 2 ? n / 2 : 0) {
  if (n < 2 || !is_power_of_two(n))
    throw std::invalid_argument("real FFT length must be a power of two >= 2, got " + std::to_string(n));
  twiddle_.resize(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    twiddle_[k] = {std::cos(ang), std::sin(ang)};
  }
}

void RealFft::forward(std::span<const double> in, std::span<cplx> out) const {
  const std::size_t m = n_ / 2;
  if (in.size() != n_ || out.size() != m + 1) throw std::invalid_argument("real FFT buffer length mismatch");
  // Pack even/odd samples into one complex sequence, transform, then split.
  for (std::size_t j = 0; j < m; ++j) out[j] = {in[2 * j], in[2 * j + 1]};
  half_.forward(out.first(m));
  const cplx z0 = out[0];
  out[m] = {z0.real() - z0.imag(), 0.0};
  out[0] = {z0.real() + z0.imag(), 0.0};
  const cplx half_i{0.0, 0.5};
  for (std::size_t k = 1; k <= m / 2; ++k) {
    const std::size_t kc = m - k;
    const cplx zk = out[k], zc = out[kc];
    const cplx ek = 0.5 * (zk + std::conj(zc));
    const cplx ok = -half_i * (zk - std::conj(zc));
    const cplx ec = 0.5 * (zc + std::conj(zk));
    const cplx oc = -half_i * (zc - std::conj(zk));
    out[k] = ek + twiddle_[k] * ok;
    out[kc] = ec + twiddle_[kc] * oc;
  }
}

void RealFft::inverse(std::span<const cplx> in, std::span<double> out) const {
  const std::size_t m = n_ / 2;
  if (in.size() != m + 1 || out.size() != n_) throw std::invalid_argument("real FFT buffer length mismatch");
  // Safe: std::complex<double> is layout-compatible with double[2].
  std::span<cplx> z(reinterpret_cast<cplx*>(out.data()), m);
  const cplx i1{0.0, 1.0};
  for (std::size_t k = 0; k < m; ++k) {
    cplx xk = in[k];
    cplx xc = in[m - k];
    if (k == 0) {
      xk = {xk.real(), 0.0};
      xc = {xc.real(), 0.0};
    }
    const cplx ek = 0.5 * (xk + std::conj(xc));
    const cplx ok = 0.5 * (xk - std::conj(xc)) * std::conj(twiddle_[k]);
    z[k] = ek + i1 * ok;
  }
  half_.inverse(z);
  const double scale = 1.0 / static_cast<double>(m);
  for (auto& v : out) v *= scale;
}

namespace {
template <class Engine>
const Engine& cached(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, std::unique_ptr<Engine>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<Engine>(n);
  return *slot;
}
}  // namespace

const Radix2& radix2(std::size_t n) { return cached<Radix2>(n); }
const RealFft& real_fft(std::size_t n) { return cached<RealFft>(n); }

FieldTransform::FieldTransform(std::span<const std::size_t> dims) : dims_(dims.begin(), dims.end()) {
  if (dims_.empty() || dims_.size() > 2)
    throw std::invalid_argument("field transforms support 1 or 2 spatial dimensions");
  for (auto d : dims_)
    if (d < 2 || !is_power_of_two(d))
      throw std::invalid_argument("spatial size must be a power of two >= 2, got " + std::to_string(d));
  rows_ = &real_fft(dims_.back());
  field_size_ = dims_.back();
  spectrum_size_ = rows_->half_size();
  if (dims_.size() == 2) {
    cols_ = &radix2(dims_[0]);
    field_size_ *= dims_[0];
    spectrum_size_ *= dims_[0];
  }
}

void FieldTransform::forward(std::span<const double> field, std::span<cplx> spectrum,
                             std::span<cplx> scratch) const {
  const std::size_t n2 = dims_.back();
  const std::size_t h2 = rows_->half_size();
  if (dims_.size() == 1) {
    rows_->forward(field, spectrum);
    return;
  }
  const std::size_t n1 = dims_[0];
  for (std::size_t i = 0; i < n1; ++i) rows_->forward(field.subspan(i * n2, n2), spectrum.subspan(i * h2, h2));
  for (std::size_t k = 0; k < h2; ++k) {
    for (std::size_t i = 0; i < n1; ++i) scratch[i] = spectrum[i * h2 + k];
    cols_->forward(scratch.first(n1));
    for (std::size_t i = 0; i < n1; ++i) spectrum[i * h2 + k] = scratch[i];
  }
}

void FieldTransform::inverse(std::span<const cplx> spectrum, std::span<double> field,
                             std::span<cplx> scratch) const {
  const std::size_t n2 = dims_.back();
  const std::size_t h2 = rows_->half_size();
  if (dims_.size() == 1) {
    rows_->inverse(spectrum, field);
    return;
  }
  const std::size_t n1 = dims_[0];
  std::span<cplx> mixed = scratch.subspan(n1, spectrum.size());
  const double scale = 1.0 / static_cast<double>(n1);
  for (std::size_t k = 0; k < h2; ++k) {
    for (std::size_t i = 0; i < n1; ++i) scratch[i] = spectrum[i * h2 + k];
    cols_->inverse(scratch.first(n1));
    for (std::size_t i = 0; i < n1; ++i) mixed[i * h2 + k] = scratch[i] * scale;
  }
  for (std::size_t i = 0; i < n1; ++i)
    rows_->inverse(mixed.subspan(i * h2, h2), field.subspan(i * n2, n2));
}

}  // namespace dpno::fft
