#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dpno/tensor.hpp"

namespace dpno::fft {

bool is_power_of_two(std::size_t n);

/// In-place iterative radix-2 complex FFT of a fixed power-of-two length.
/// Both directions are unnormalized.
class Radix2 {
 public:
  explicit Radix2(std::size_t n);

  std::size_t size() const { return n_; }
  void forward(std::span<cplx> x) const { transform(x, false); }
  void inverse(std::span<cplx> x) const { transform(x, true); }

 private:
  void transform(std::span<cplx> x, bool inverse) const;

  std::size_t n_;
  std::vector<cplx> twiddle_;  // e^{-2 pi i k / n}, k < n/2
  std::vector<std::size_t> bitrev_;
};

/// Real-input FFT of length n (power of two, n >= 2) producing the n/2+1
/// half spectrum. Computed through a length n/2 complex transform.
class RealFft {
 public:
  explicit RealFft(std::size_t n);

  std::size_t size() const { return n_; }
  std::size_t half_size() const { return n_ / 2 + 1; }

  /// out[k] = sum_j in[j] e^{-2 pi i jk/n}, k = 0..n/2.
  void forward(std::span<const double> in, std::span<cplx> out) const;

  /// Inverse including the 1/n factor. The imaginary parts of the k = 0 and
  /// k = n/2 coefficients are ignored.
  void inverse(std::span<const cplx> in, std::span<double> out) const;

 private:
  std::size_t n_;
  Radix2 half_;
  std::vector<cplx> twiddle_;  // e^{-2 pi i k / n}, k <= n/2
};

/// Shared, immutable engines keyed by length.
const Radix2& radix2(std::size_t n);
const RealFft& real_fft(std::size_t n);

/// Real transform of a contiguous 1-D or 2-D field; the half spectrum is
/// taken on the last axis.
class FieldTransform {
 public:
  explicit FieldTransform(std::span<const std::size_t> dims);

  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t field_size() const { return field_size_; }
  /// Number of complex coefficients in the half spectrum.
  std::size_t spectrum_size() const { return spectrum_size_; }
  std::size_t scratch_size() const { return dims_.size() == 2 ? dims_[0] + spectrum_size_ : 0; }

  void forward(std::span<const double> field, std::span<cplx> spectrum, std::span<cplx> scratch) const;
  /// Inverse including the 1/prod(n) factor.
  void inverse(std::span<const cplx> spectrum, std::span<double> field, std::span<cplx> scratch) const;

 private:
  std::vector<std::size_t> dims_;
  std::size_t field_size_;
  std::size_t spectrum_size_;
  const RealFft* rows_;
  const Radix2* cols_ = nullptr;
};

}  // namespace dpno::fft
