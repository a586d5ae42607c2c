// Serial reference kernels against their OpenMP counterparts, plus one full
// training step. Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "dpno/autodiff.hpp"
#include "dpno/fft.hpp"
#include "dpno/kernels.hpp"
#include "dpno/models.hpp"
#include "dpno/spectral.hpp"

namespace kn = dpno::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

std::vector<dpno::cplx> random_cvec(std::size_t n, std::uint64_t seed) {
  const auto re = random_vec(2 * n, seed);
  std::vector<dpno::cplx> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = {re[2 * i], re[2 * i + 1]};
  return v;
}

// Pointwise layer of a 64x64 field batch: [4096 x 32] * [32 x 128].
template <auto Fn>
void BM_gemm(benchmark::State& state) {
  const kn::GemmDims d{static_cast<std::size_t>(state.range(0)), 32, 128};
  const auto a = random_vec(d.rows * d.inner, 1), b = random_vec(d.inner * d.cols, 2);
  std::vector<double> c(d.rows * d.cols);
  for (auto _ : state) {
    Fn(d, a, b, c, false);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.rows * d.inner * d.cols));
}

// Weight gradient of the same layer: C[32 x 128] = A^T B.
template <auto Fn>
void BM_gemm_tn(benchmark::State& state) {
  const kn::GemmDims d{static_cast<std::size_t>(state.range(0)), 32, 128};
  const auto a = random_vec(d.rows * d.inner, 1), b = random_vec(d.rows * d.cols, 2);
  std::vector<double> c(d.inner * d.cols);
  for (auto _ : state) {
    Fn(d, a, b, c, false);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.rows * d.inner * d.cols));
}

template <auto Fn>
void BM_gelu(benchmark::State& state) {
  const auto x = random_vec(static_cast<std::size_t>(state.range(0)), 3);
  std::vector<double> y(x.size());
  for (auto _ : state) {
    Fn(x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

// Mode mixing of a 2-D block: batch 20, 23 x 12 retained modes, width 32.
template <auto Fn>
void BM_spectral_mix(benchmark::State& state) {
  const kn::MixDims d{20, 23 * 12, 32, 32};
  const auto x = random_cvec(d.batch * d.modes * d.in, 4);
  const auto w = random_cvec(d.modes * d.in * d.out, 5);
  std::vector<std::size_t> map(d.modes);
  for (std::size_t r = 0; r < d.modes; ++r) map[r] = r;
  std::vector<dpno::cplx> y(d.batch * d.modes * d.out);
  for (auto _ : state) {
    Fn(d, x, w, map, y);
    benchmark::DoNotOptimize(y.data());
  }
}

// Channel-wise 2-D real transforms of a [20, 64, 64, 32] batch.
template <auto Fn>
void BM_rfft_channels(benchmark::State& state) {
  const std::size_t dims[] = {64, 64};
  const dpno::fft::FieldTransform t(dims);
  const kn::FieldBatch d{20, 32};
  const auto in = random_vec(d.batch * t.field_size() * d.channels, 6);
  std::vector<dpno::cplx> out(d.batch * t.spectrum_size() * d.channels);
  for (auto _ : state) {
    Fn(t, d, in, out);
    benchmark::DoNotOptimize(out.data());
  }
}

// One forward + backward pass of a dual-path FNO on a batch of 1-D fields.
void BM_dp_fno_step(benchmark::State& state) {
  const dpno::FnoSpec spec{1, 1, 16, {12}, 128, 4};
  dpno::DualPathFno model(spec, dpno::DualPathSpec{4, 3, 128, dpno::MergeInput::full_stack}, 0);
  dpno::Tensor x({20, 64, 1});
  const auto v = random_vec(x.size(), 7);
  std::copy(v.begin(), v.end(), x.ptr());
  for (auto _ : state) {
    dpno::Tape tape;
    const auto y = model.forward(tape, x);
    tape.backward(dpno::sum(y));
    benchmark::DoNotOptimize(y.value().ptr());
  }
}

}  // namespace

BENCHMARK(BM_gemm<kn::serial::gemm>)->Name("gemm/serial")->Arg(1024)->Arg(4096);
BENCHMARK(BM_gemm<kn::omp::gemm>)->Name("gemm/omp")->Arg(1024)->Arg(4096);
BENCHMARK(BM_gemm_tn<kn::serial::gemm_tn>)->Name("gemm_tn/serial")->Arg(4096);
BENCHMARK(BM_gemm_tn<kn::omp::gemm_tn>)->Name("gemm_tn/omp")->Arg(4096);
BENCHMARK(BM_gelu<kn::serial::gelu>)->Name("gelu/serial")->Arg(1 << 18);
BENCHMARK(BM_gelu<kn::omp::gelu>)->Name("gelu/omp")->Arg(1 << 18);
BENCHMARK(BM_spectral_mix<kn::serial::spectral_mix>)->Name("spectral_mix/serial");
BENCHMARK(BM_spectral_mix<kn::omp::spectral_mix>)->Name("spectral_mix/omp");
BENCHMARK(BM_rfft_channels<kn::serial::rfft_channels>)->Name("rfft_channels/serial");
BENCHMARK(BM_rfft_channels<kn::omp::rfft_channels>)->Name("rfft_channels/omp");
BENCHMARK(BM_dp_fno_step)->Name("dp_fno_step/omp")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
