#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dpno/autodiff.hpp"
#include "dpno/fft.hpp"
#include "dpno/tensor.hpp"

namespace dpno {

/// Real transform over the spatial axes of a channels-last field batch plus
/// the retained low-frequency block used by the spectral convolution.
///
/// Retained set: on the half-spectrum (last) axis the first k_max entries; on
/// the full axis every k with |k| < k_max (both signs). Every axis requires
/// k_max <= n/2 + 1; at k_max = n/2 + 1 the Nyquist row of a full axis is
/// taken once, from the positive side.
class RfftPlan {
 public:
  RfftPlan(std::vector<std::size_t> dims, std::vector<std::size_t> kmax);

  const std::vector<std::size_t>& dims() const { return dims_; }
  const std::vector<std::size_t>& kmax() const { return kmax_; }
  const fft::FieldTransform& transform() const { return transform_; }
  std::size_t field_size() const { return transform_.field_size(); }
  std::size_t spectrum_size() const { return transform_.spectrum_size(); }
  /// Spatial part of the spectrum shape: (n/2+1) or (n1, n2/2+1).
  std::vector<std::size_t> spectrum_dims() const;

  /// Flat spectrum index of each retained coefficient.
  const std::vector<std::size_t>& retained() const { return retained_; }
  /// Row of the spectral weight tensor used by each retained coefficient.
  const std::vector<std::size_t>& weight_rows() const { return weight_rows_; }
  /// Hermitian multiplicity of each retained coefficient: 1 on the k = 0 and
  /// Nyquist columns of the half axis, 2 elsewhere.
  const std::vector<double>& multiplicity() const { return multiplicity_; }

 private:
  std::vector<std::size_t> dims_;
  std::vector<std::size_t> kmax_;
  fft::FieldTransform transform_;
  std::vector<std::size_t> retained_;
  std::vector<std::size_t> weight_rows_;
  std::vector<double> multiplicity_;
};

/// Shape of the mode index of a spectral weight tensor: {kmax} in 1-D,
/// {2*kmax0 - 1, kmax1} in 2-D. Independent of the grid size.
std::vector<std::size_t> spectral_mode_shape(std::span<const std::size_t> kmax);
/// Full spectral weight shape: modes..., d_in, d_out, 2 (real, imaginary).
Shape spectral_weight_shape(std::span<const std::size_t> kmax, std::size_t d_in, std::size_t d_out);
/// Identity mixing at every retained mode (d_in == d_out == width).
Tensor spectral_identity_weights(std::span<const std::size_t> kmax, std::size_t width);

/// Unnormalized forward transform of x: [batch, spatial..., channels] ->
/// [batch, spectrum..., channels].
ComplexTensor rfft(const Tensor& x, const RfftPlan& plan);
/// Inverse transform scaled by 1/prod(n); irfft(rfft(x)) == x.
Tensor irfft(const ComplexTensor& coeffs, const RfftPlan& plan);
/// Adjoint of rfft under Re<a, b>: rfft_adjoint(y) = N * irfft(y / multiplicity).
Tensor rfft_adjoint(const ComplexTensor& coeffs, const RfftPlan& plan);
/// Zeroes every coefficient outside the retained block.
ComplexTensor truncate_modes(const ComplexTensor& coeffs, const RfftPlan& plan);

/// irfft(R . rfft(x)) restricted to the retained modes, where R is the
/// per-mode d_in x d_out complex matrix stored in `weights`.
Var spectral_conv(const Var& x, const Var& weights, const RfftPlan& plan);
Tensor spectral_conv(const Tensor& x, const Tensor& weights, const RfftPlan& plan);

/// Plan for a channels-last batch shape [batch, spatial..., channels].
RfftPlan plan_for(const Shape& batch_shape, std::span<const std::size_t> kmax);

}  // namespace dpno
