#include <cmath>
#include <stdexcept>
#include <string>

#include "dpno/pde.hpp"

namespace dpno::pde {

namespace {

// Five-point operator h^2 * (-div(a grad u)) on interior nodes of an n x n
// node grid, face coefficients the arithmetic mean of the two nodes.
struct Stencil {
  std::size_t n;
  std::vector<double> east, north;  // face to (i, j+1) and (i+1, j), per node
  std::vector<double> diag;

  explicit Stencil(const Tensor& a) : n(a.dim(0)), east(n * n), north(n * n), diag(n * n) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double c = a[i * n + j];
        if (j + 1 < n) east[i * n + j] = 0.5 * (c + a[i * n + j + 1]);
        if (i + 1 < n) north[i * n + j] = 0.5 * (c + a[(i + 1) * n + j]);
      }
    for (std::size_t i = 1; i + 1 < n; ++i)
      for (std::size_t j = 1; j + 1 < n; ++j) {
        const std::size_t p = i * n + j;
        diag[p] = east[p] + east[p - 1] + north[p] + north[p - n];
      }
  }

  // Boundary entries of u are zero and stay zero in the result.
  void apply(const std::vector<double>& u, std::vector<double>& out) const {
    for (std::size_t i = 1; i + 1 < n; ++i)
      for (std::size_t j = 1; j + 1 < n; ++j) {
        const std::size_t p = i * n + j;
        out[p] = diag[p] * u[p] - east[p] * u[p + 1] - east[p - 1] * u[p - 1] - north[p] * u[p + n] -
                 north[p - n] * u[p - n];
      }
  }
};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

DarcyResult solve_darcy(const Tensor& a, const Tensor& f, const DarcyOptions& opts) {
  if (a.ndim() != 2 || a.dim(0) != a.dim(1) || a.dim(0) < 3)
    throw ShapeError("solve_darcy: coefficient must be a square n x n grid with n >= 3, got " + to_string(a.shape()));
  if (f.shape() != a.shape())
    throw ShapeError("solve_darcy: forcing " + to_string(f.shape()) + " does not match coefficient " +
                     to_string(a.shape()));
  for (double v : a.data())
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("solve_darcy: coefficient must be positive");

  const std::size_t n = a.dim(0);
  const double h = 1.0 / static_cast<double>(n - 1);
  const Stencil op(a);

  std::vector<double> rhs(n * n, 0.0), x(n * n, 0.0), r(n * n, 0.0), z(n * n, 0.0), p(n * n, 0.0), q(n * n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i)
    for (std::size_t j = 1; j + 1 < n; ++j) rhs[i * n + j] = h * h * f[i * n + j];
  r = rhs;
  const double b_norm = std::sqrt(dot(rhs, rhs));
  DarcyResult res;
  res.u = Tensor({n, n});
  if (b_norm == 0.0) return res;

  auto precondition = [&] {
    for (std::size_t k = 0; k < n * n; ++k) z[k] = op.diag[k] > 0.0 ? r[k] / op.diag[k] : 0.0;
  };
  precondition();
  p = z;
  double rz = dot(r, z);
  double rel = 1.0;
  std::size_t it = 0;
  while (it < opts.max_iterations) {
    op.apply(p, q);
    const double alpha = rz / dot(p, q);
    for (std::size_t k = 0; k < n * n; ++k) {
      x[k] += alpha * p[k];
      r[k] -= alpha * q[k];
    }
    ++it;
    rel = std::sqrt(dot(r, r)) / b_norm;
    if (rel < opts.tolerance) break;
    precondition();
    const double rz_next = dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t k = 0; k < n * n; ++k) p[k] = z[k] + beta * p[k];
  }
  if (!(rel < opts.tolerance))
    throw std::runtime_error("solve_darcy: conjugate gradient did not reach relative residual " +
                             std::to_string(opts.tolerance) + " in " + std::to_string(opts.max_iterations) +
                             " iterations (at " + std::to_string(rel) + ")");
  res.u = Tensor({n, n}, std::move(x));
  res.iterations = it;
  res.residual = rel;
  return res;
}

DarcyResult solve_darcy(const Tensor& a, const DarcyOptions& opts) {
  return solve_darcy(a, Tensor(a.shape(), 1.0), opts);
}

}  // namespace dpno::pde
