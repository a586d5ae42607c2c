#include <algorithm>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "dpno/kernels.hpp"
#include "kernels_common.hpp"

namespace dpno::kernels {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace omp {

namespace {
using idx = std::ptrdiff_t;
// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelWork = 1 << 15;
}  // namespace

namespace {

// Rows [i, i + nr) of C += A * B. The k loop is unrolled by four so each
// load/store of C carries four multiply-adds.
void gemm_rows(const GemmDims& d, const double* a, const double* b, double* c, std::size_t i, std::size_t nr) {
  const std::size_t n = d.cols;
  std::size_t k = 0;
  for (; k + 4 <= d.inner; k += 4) {
    const double* b0 = b + k * n;
    const double* b1 = b0 + n;
    const double* b2 = b1 + n;
    const double* b3 = b2 + n;
    for (std::size_t r = i; r < i + nr; ++r) {
      const double* ar = a + r * d.inner + k;
      const double x0 = ar[0], x1 = ar[1], x2 = ar[2], x3 = ar[3];
      double* cr = c + r * n;
#pragma omp simd
      for (std::size_t j = 0; j < n; ++j) cr[j] += x0 * b0[j] + x1 * b1[j] + x2 * b2[j] + x3 * b3[j];
    }
  }
  for (; k < d.inner; ++k) {
    const double* bk = b + k * n;
    for (std::size_t r = i; r < i + nr; ++r) {
      const double x = a[r * d.inner + k];
      double* cr = c + r * n;
#pragma omp simd
      for (std::size_t j = 0; j < n; ++j) cr[j] += x * bk[j];
    }
  }
}

std::vector<double> transposed(std::span<const double> m, std::size_t rows, std::size_t cols) {
  std::vector<double> t(rows * cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) t[j * rows + i] = m[i * cols + j];
  return t;
}

}  // namespace

void gemm(GemmDims d, std::span<const double> a, std::span<const double> b, std::span<double> c,
          bool accumulate) {
  // Row blocks of 8 keep the four B rows of an unrolled step hot in L1.
  constexpr std::size_t kRowBlock = 8;
  const idx blocks = static_cast<idx>((d.rows + kRowBlock - 1) / kRowBlock);
#pragma omp parallel for schedule(static) if (d.rows * d.inner * d.cols > kParallelWork)
  for (idx blk = 0; blk < blocks; ++blk) {
    const std::size_t i = static_cast<std::size_t>(blk) * kRowBlock;
    const std::size_t nr = std::min(kRowBlock, d.rows - i);
    if (!accumulate) std::fill(c.data() + i * d.cols, c.data() + (i + nr) * d.cols, 0.0);
    gemm_rows(d, a.data(), b.data(), c.data(), i, nr);
  }
}

void gemm_tn(GemmDims d, std::span<const double> a, std::span<const double> b, std::span<double> c,
             bool accumulate) {
  const auto at = transposed(a, d.rows, d.inner);
  gemm({d.inner, d.rows, d.cols}, at, b, c, accumulate);
}

void gemm_nt(GemmDims d, std::span<const double> a, std::span<const double> b, std::span<double> c,
             bool accumulate) {
  const auto bt = transposed(b, d.inner, d.cols);
  gemm({d.rows, d.cols, d.inner}, a, bt, c, accumulate);
}

void gelu(std::span<const double> x, std::span<double> y) {
  const idx n = static_cast<idx>(x.size());
#pragma omp parallel for schedule(static) if (x.size() > kParallelWork / 8)
  for (idx i = 0; i < n; ++i) y[i] = detail::gelu(x[i]);
}

void gelu_backward(std::span<const double> x, std::span<const double> g, std::span<double> gx) {
  const idx n = static_cast<idx>(x.size());
#pragma omp parallel for schedule(static) if (x.size() > kParallelWork / 8)
  for (idx i = 0; i < n; ++i) gx[i] += g[i] * detail::gelu_grad(x[i]);
}

void spectral_mix(MixDims d, std::span<const cplx> x, std::span<const cplx> w,
                  std::span<const std::size_t> mode_map, std::span<cplx> y) {
  const idx total = static_cast<idx>(d.batch * d.modes);
#pragma omp parallel for schedule(static) if (d.batch * d.modes * d.in * d.out > kParallelWork / 4)
  for (idx br = 0; br < total; ++br) {
    const std::size_t r = static_cast<std::size_t>(br) % d.modes;
    const cplx* wr = w.data() + mode_map[r] * d.in * d.out;
    const cplx* xr = x.data() + br * d.in;
    cplx* yr = y.data() + br * d.out;
    std::fill(yr, yr + d.out, cplx{});
    for (std::size_t i = 0; i < d.in; ++i) {
      const cplx xi = xr[i];
      for (std::size_t o = 0; o < d.out; ++o) yr[o] += xi * wr[i * d.out + o];
    }
  }
}

void spectral_mix_adjoint(MixDims d, std::span<const cplx> gy, std::span<const cplx> w,
                          std::span<const std::size_t> mode_map, std::span<cplx> gx) {
  const idx total = static_cast<idx>(d.batch * d.modes);
#pragma omp parallel for schedule(static) if (d.batch * d.modes * d.in * d.out > kParallelWork / 4)
  for (idx br = 0; br < total; ++br) {
    const std::size_t r = static_cast<std::size_t>(br) % d.modes;
    const cplx* wr = w.data() + mode_map[r] * d.in * d.out;
    const cplx* gyr = gy.data() + br * d.out;
    cplx* gxr = gx.data() + br * d.in;
    for (std::size_t i = 0; i < d.in; ++i) {
      cplx s{};
      for (std::size_t o = 0; o < d.out; ++o) s += gyr[o] * std::conj(wr[i * d.out + o]);
      gxr[i] = s;
    }
  }
}

void spectral_weight_grad(MixDims d, std::span<const cplx> x, std::span<const cplx> gy,
                          std::span<const std::size_t> mode_map, std::span<cplx> gw) {
  const idx modes = static_cast<idx>(d.modes);
#pragma omp parallel for schedule(static) if (d.batch * d.modes * d.in * d.out > kParallelWork / 4)
  for (idx r = 0; r < modes; ++r) {
    cplx* gr = gw.data() + mode_map[r] * d.in * d.out;
    for (std::size_t b = 0; b < d.batch; ++b) {
      const cplx* xr = x.data() + (b * d.modes + r) * d.in;
      const cplx* gyr = gy.data() + (b * d.modes + r) * d.out;
      for (std::size_t i = 0; i < d.in; ++i) {
        const cplx xc = std::conj(xr[i]);
        for (std::size_t o = 0; o < d.out; ++o) gr[i * d.out + o] += xc * gyr[o];
      }
    }
  }
}

void rfft_channels(const fft::FieldTransform& t, FieldBatch d, std::span<const double> in,
                   std::span<cplx> out) {
  const std::size_t nf = t.field_size(), ns = t.spectrum_size(), nc = d.channels;
  const idx total = static_cast<idx>(d.batch * nc);
#pragma omp parallel if (total > 1 && d.batch * nf * nc > kParallelWork / 8)
  {
    std::vector<double> field(nf);
    std::vector<cplx> spec(ns), scratch(t.scratch_size());
#pragma omp for schedule(static)
    for (idx bc = 0; bc < total; ++bc) {
      const std::size_t b = static_cast<std::size_t>(bc) / nc, c = static_cast<std::size_t>(bc) % nc;
      for (std::size_t j = 0; j < nf; ++j) field[j] = in[(b * nf + j) * nc + c];
      t.forward(field, spec, scratch);
      for (std::size_t k = 0; k < ns; ++k) out[(b * ns + k) * nc + c] = spec[k];
    }
  }
}

void irfft_channels(const fft::FieldTransform& t, FieldBatch d, std::span<const cplx> in,
                    std::span<double> out) {
  const std::size_t nf = t.field_size(), ns = t.spectrum_size(), nc = d.channels;
  const idx total = static_cast<idx>(d.batch * nc);
#pragma omp parallel if (total > 1 && d.batch * nf * nc > kParallelWork / 8)
  {
    std::vector<double> field(nf);
    std::vector<cplx> spec(ns), scratch(t.scratch_size());
#pragma omp for schedule(static)
    for (idx bc = 0; bc < total; ++bc) {
      const std::size_t b = static_cast<std::size_t>(bc) / nc, c = static_cast<std::size_t>(bc) % nc;
      for (std::size_t k = 0; k < ns; ++k) spec[k] = in[(b * ns + k) * nc + c];
      t.inverse(spec, field, scratch);
      for (std::size_t j = 0; j < nf; ++j) out[(b * nf + j) * nc + c] = field[j];
    }
  }
}

}  // namespace omp
}  // namespace dpno::kernels
