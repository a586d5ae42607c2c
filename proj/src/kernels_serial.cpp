#include <stdexcept>
#include <vector>

#include "dpno/kernels.hpp"
#include "kernels_common.hpp"

namespace dpno::kernels::serial {

void gemm(GemmDims d, std::span<const double> a, std::span<const double> b, std::span<double> c,
          bool accumulate) {
  for (std::size_t i = 0; i < d.rows; ++i)
    for (std::size_t j = 0; j < d.cols; ++j) {
      double s = accumulate ? c[i * d.cols + j] : 0.0;
      for (std::size_t k = 0; k < d.inner; ++k) s += a[i * d.inner + k] * b[k * d.cols + j];
      c[i * d.cols + j] = s;
    }
}

void gemm_tn(GemmDims d, std::span<const double> a, std::span<const double> b, std::span<double> c,
             bool accumulate) {
  for (std::size_t k = 0; k < d.inner; ++k)
    for (std::size_t j = 0; j < d.cols; ++j) {
      double s = accumulate ? c[k * d.cols + j] : 0.0;
      for (std::size_t i = 0; i < d.rows; ++i) s += a[i * d.inner + k] * b[i * d.cols + j];
      c[k * d.cols + j] = s;
    }
}

void gemm_nt(GemmDims d, std::span<const double> a, std::span<const double> b, std::span<double> c,
             bool accumulate) {
  for (std::size_t i = 0; i < d.rows; ++i)
    for (std::size_t k = 0; k < d.inner; ++k) {
      double s = accumulate ? c[i * d.inner + k] : 0.0;
      for (std::size_t j = 0; j < d.cols; ++j) s += a[i * d.cols + j] * b[k * d.cols + j];
      c[i * d.inner + k] = s;
    }
}

void gelu(std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = detail::gelu(x[i]);
}

void gelu_backward(std::span<const double> x, std::span<const double> g, std::span<double> gx) {
  for (std::size_t i = 0; i < x.size(); ++i) gx[i] += g[i] * detail::gelu_grad(x[i]);
}

void spectral_mix(MixDims d, std::span<const cplx> x, std::span<const cplx> w,
                  std::span<const std::size_t> mode_map, std::span<cplx> y) {
  for (std::size_t b = 0; b < d.batch; ++b)
    for (std::size_t r = 0; r < d.modes; ++r) {
      const cplx* wr = w.data() + mode_map[r] * d.in * d.out;
      for (std::size_t o = 0; o < d.out; ++o) {
        cplx s{};
        for (std::size_t i = 0; i < d.in; ++i) s += x[(b * d.modes + r) * d.in + i] * wr[i * d.out + o];
        y[(b * d.modes + r) * d.out + o] = s;
      }
    }
}

void spectral_mix_adjoint(MixDims d, std::span<const cplx> gy, std::span<const cplx> w,
                          std::span<const std::size_t> mode_map, std::span<cplx> gx) {
  for (std::size_t b = 0; b < d.batch; ++b)
    for (std::size_t r = 0; r < d.modes; ++r) {
      const cplx* wr = w.data() + mode_map[r] * d.in * d.out;
      for (std::size_t i = 0; i < d.in; ++i) {
        cplx s{};
        for (std::size_t o = 0; o < d.out; ++o) s += gy[(b * d.modes + r) * d.out + o] * std::conj(wr[i * d.out + o]);
        gx[(b * d.modes + r) * d.in + i] = s;
      }
    }
}

void spectral_weight_grad(MixDims d, std::span<const cplx> x, std::span<const cplx> gy,
                          std::span<const std::size_t> mode_map, std::span<cplx> gw) {
  for (std::size_t r = 0; r < d.modes; ++r) {
    cplx* gr = gw.data() + mode_map[r] * d.in * d.out;
    for (std::size_t i = 0; i < d.in; ++i)
      for (std::size_t o = 0; o < d.out; ++o) {
        cplx s{};
        for (std::size_t b = 0; b < d.batch; ++b)
          s += std::conj(x[(b * d.modes + r) * d.in + i]) * gy[(b * d.modes + r) * d.out + o];
        gr[i * d.out + o] += s;
      }
  }
}

void rfft_channels(const fft::FieldTransform& t, FieldBatch d, std::span<const double> in,
                   std::span<cplx> out) {
  const std::size_t nf = t.field_size(), ns = t.spectrum_size(), nc = d.channels;
  std::vector<double> field(nf);
  std::vector<cplx> spec(ns), scratch(t.scratch_size());
  for (std::size_t b = 0; b < d.batch; ++b)
    for (std::size_t c = 0; c < nc; ++c) {
      for (std::size_t j = 0; j < nf; ++j) field[j] = in[(b * nf + j) * nc + c];
      t.forward(field, spec, scratch);
      for (std::size_t k = 0; k < ns; ++k) out[(b * ns + k) * nc + c] = spec[k];
    }
}

void irfft_channels(const fft::FieldTransform& t, FieldBatch d, std::span<const cplx> in,
                    std::span<double> out) {
  const std::size_t nf = t.field_size(), ns = t.spectrum_size(), nc = d.channels;
  std::vector<double> field(nf);
  std::vector<cplx> spec(ns), scratch(t.scratch_size());
  for (std::size_t b = 0; b < d.batch; ++b)
    for (std::size_t c = 0; c < nc; ++c) {
      for (std::size_t k = 0; k < ns; ++k) spec[k] = in[(b * ns + k) * nc + c];
      t.inverse(spec, field, scratch);
      for (std::size_t j = 0; j < nf; ++j) out[(b * nf + j) * nc + c] = field[j];
    }
}

}  // namespace dpno::kernels::serial
