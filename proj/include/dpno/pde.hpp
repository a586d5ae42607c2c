#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "dpno/tensor.hpp"

namespace dpno::pde {

enum class Boundary { periodic, neumann_cosine };

/// Gaussian random field N(0, sigma2 (-Laplacian + tau2 I)^(-alpha)).
struct GrfSpec {
  std::size_t dim = 1;
  double sigma2 = 1.0;
  double tau2 = 1.0;
  double alpha = 2.0;
  Boundary boundary = Boundary::periodic;
  std::size_t n = 64;

  void validate() const;
  /// Covariance eigenvalue for the integer wavenumber magnitude squared |k|^2.
  double eigenvalue(double k_squared) const;
};

/// Initial-condition measures of the three benchmark problems.
GrfSpec burgers_grf(std::size_t n);
GrfSpec darcy_grf(std::size_t n);
GrfSpec navier_stokes_grf(std::size_t n);

/// One draw on the grid: [n] or [n, n]. Periodic fields live on x_j = j/n,
/// Neumann-cosine fields on the node grid x_j = j/(n-1).
Tensor grf_sample(const GrfSpec& spec, std::uint64_t seed);

/// 12 where g >= 0, 3 elsewhere.
Tensor psi_threshold(const Tensor& g);

struct BurgersOptions {
  double nu = 0.01;
  double final_time = 1.0;
  /// Time step; 0 selects 1e-4 * 2048 / n.
  double dt = 0.0;
};

/// Default Burgers step for an n-point grid.
double burgers_default_dt(std::size_t n);

/// u_t + (u^2/2)_x = nu u_xx on the unit torus, returned at final_time.
/// Pseudo-spectral, 2/3-rule dealiased, integrating-factor RK4.
Tensor solve_burgers(const Tensor& u0, const BurgersOptions& opts = {});

struct DarcyOptions {
  double tolerance = 1e-8;
  std::size_t max_iterations = 20000;
};

struct DarcyResult {
  Tensor u;
  std::size_t iterations = 0;
  double residual = 0.0;
};

/// -div(a grad u) = f on the unit square, u = 0 on the boundary. a and f are
/// given on the n x n node grid including the boundary (h = 1/(n-1)).
DarcyResult solve_darcy(const Tensor& a, const Tensor& f, const DarcyOptions& opts = {});
/// Same with f = 1.
DarcyResult solve_darcy(const Tensor& a, const DarcyOptions& opts = {});

enum class NsForcing { standard, none };

struct NsOptions {
  double nu = 1e-3;
  /// Time step; 0 selects 5e-3 for n <= 64 and 1e-3 above.
  double dt = 0.0;
  NsForcing forcing = NsForcing::standard;
  /// Output times; each must be a positive multiple of dt.
  std::vector<double> snapshot_times{1,  2,  3,  4,  5,  6,  7,  8,  9,  10,
                                     11, 12, 13, 14, 15, 16, 17, 18, 19, 20};
  /// Called after every step with the physical vorticity (costs one inverse
  /// transform per step when set).
  std::function<void(std::size_t step, const Tensor& w)> observer;
};

double navier_stokes_default_dt(std::size_t n);

/// w_t + u . grad w = nu lap w + f on the unit torus (axis 0 = x, axis 1 = y),
/// streamfunction-vorticity pseudo-spectral, Crank-Nicolson / Adams-Bashforth 2.
/// Returns [snapshots, n, n].
Tensor solve_navier_stokes(const Tensor& w0, const NsOptions& opts = {});

/// Stride-r point subsampling of the trailing `spatial_rank` axes.
Tensor downsample(const Tensor& field, std::size_t r, std::size_t spatial_rank);

}  // namespace dpno::pde
