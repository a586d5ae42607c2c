#pragma once

// Hot loops used by the autodiff ops and the spectral layer.
//
// Every kernel exists twice: `serial` is the straightforward reference kept
// for testing, `omp` is the OpenMP version the library dispatches to. The omp
// kernels split work over output rows (or independent fields) only, so each
// output element is produced by one thread with a fixed summation order and
// results do not depend on the thread count.

#include <cstddef>
#include <span>

#include "dpno/fft.hpp"
#include "dpno/tensor.hpp"

namespace dpno::kernels {

/// Dimensions of a dense product C[rows x cols] = A[rows x inner] * B[inner x cols].
struct GemmDims {
  std::size_t rows;
  std::size_t inner;
  std::size_t cols;
};

/// Complex per-mode channel mixing. X: [batch, modes, in], W: [weight_modes, in, out],
/// Y: [batch, modes, out]; mode r uses weight row mode_map[r].
struct MixDims {
  std::size_t batch;
  std::size_t modes;
  std::size_t in;
  std::size_t out;
};

/// Layout of a batch of channels-last fields: [batch, spatial..., channels].
struct FieldBatch {
  std::size_t batch;
  std::size_t channels;
};

#define DPNO_KERNEL_DECLS                                                                          \
  /* C (+)= A * B */                                                                               \
  void gemm(GemmDims d, std::span<const double> a, std::span<const double> b, std::span<double> c, \
            bool accumulate);                                                                      \
  /* C[inner x cols] (+)= A^T * B with A: [rows x inner], B: [rows x cols] */                      \
  void gemm_tn(GemmDims d, std::span<const double> a, std::span<const double> b, std::span<double> c, \
               bool accumulate);                                                                   \
  /* C[rows x inner] (+)= A * B^T with A: [rows x cols], B: [inner x cols] */                      \
  void gemm_nt(GemmDims d, std::span<const double> a, std::span<const double> b, std::span<double> c, \
               bool accumulate);                                                                   \
  void gelu(std::span<const double> x, std::span<double> y);                                      \
  /* gx (+)= g * gelu'(x) */                                                                       \
  void gelu_backward(std::span<const double> x, std::span<const double> g, std::span<double> gx);  \
  void spectral_mix(MixDims d, std::span<const cplx> x, std::span<const cplx> w,                  \
                    std::span<const std::size_t> mode_map, std::span<cplx> y);                     \
  /* gx = gy * conj(W)^T */                                                                        \
  void spectral_mix_adjoint(MixDims d, std::span<const cplx> gy, std::span<const cplx> w,         \
                            std::span<const std::size_t> mode_map, std::span<cplx> gx);            \
  /* gw += sum_b conj(x) gy^T */                                                                   \
  void spectral_weight_grad(MixDims d, std::span<const cplx> x, std::span<const cplx> gy,         \
                            std::span<const std::size_t> mode_map, std::span<cplx> gw);            \
  /* Half spectra of every channel: out [batch, spectrum, channels]. */                            \
  void rfft_channels(const fft::FieldTransform& t, FieldBatch d, std::span<const double> in,       \
                     std::span<cplx> out);                                                         \
  void irfft_channels(const fft::FieldTransform& t, FieldBatch d, std::span<const cplx> in,       \
                      std::span<double> out);

namespace serial {
DPNO_KERNEL_DECLS
}  // namespace serial

namespace omp {
DPNO_KERNEL_DECLS
}  // namespace omp

#undef DPNO_KERNEL_DECLS

/// Threads the omp kernels will use (1 without OpenMP).
int max_threads();

}  // namespace dpno::kernels
