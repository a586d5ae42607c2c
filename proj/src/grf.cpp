#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "dpno/fft.hpp"
#include "dpno/pde.hpp"

namespace dpno::pde {

void GrfSpec::validate() const {
  if (dim != 1 && dim != 2) throw std::invalid_argument("GRF dimension must be 1 or 2, got " + std::to_string(dim));
  if (!(sigma2 > 0.0)) throw std::invalid_argument("GRF amplitude sigma^2 must be positive");
  if (!(alpha > 0.0)) throw std::invalid_argument("GRF exponent alpha must be positive");
  if (!(tau2 >= 0.0)) throw std::invalid_argument("GRF shift tau^2 must be non-negative");
  if (n < 2 || !fft::is_power_of_two(n))
    throw std::invalid_argument("GRF resolution must be a power of two >= 2, got " + std::to_string(n));
}

double GrfSpec::eigenvalue(double k_squared) const {
  const double pi2 = std::numbers::pi * std::numbers::pi;
  const double scale = boundary == Boundary::periodic ? 4.0 * pi2 : pi2;
  return sigma2 * std::pow(scale * k_squared + tau2, -alpha);
}

GrfSpec burgers_grf(std::size_t n) { return {1, 625.0, 25.0, 2.0, Boundary::periodic, n}; }
GrfSpec darcy_grf(std::size_t n) { return {2, 1.0, 9.0, 2.0, Boundary::neumann_cosine, n}; }
GrfSpec navier_stokes_grf(std::size_t n) { return {2, std::pow(7.0, 1.5), 49.0, 2.5, Boundary::periodic, n}; }

namespace {

// White noise -> spectrum -> colour by sqrt(lambda) -> back. The transform of
// real white noise already has Hermitian symmetry with the variance split
// evenly between real and imaginary parts off the self-conjugate modes.
Tensor periodic_sample(const GrfSpec& spec, std::mt19937_64& rng) {
  const std::vector<std::size_t> dims(spec.dim, spec.n);
  const fft::FieldTransform t(dims);
  std::normal_distribution<double> normal;
  std::vector<double> field(t.field_size());
  for (auto& v : field) v = normal(rng);
  std::vector<cplx> spec_c(t.spectrum_size()), scratch(t.scratch_size());
  t.forward(field, spec_c, scratch);

  const std::size_t n = spec.n, h = n / 2 + 1;
  const std::size_t rows = spec.dim == 2 ? n : 1;
  for (std::size_t i = 0; i < rows; ++i) {
    const double k1 = spec.dim == 2 ? (i <= n / 2 ? double(i) : double(i) - double(n)) : 0.0;
    for (std::size_t j = 0; j < h; ++j) {
      const double k2 = double(j);
      spec_c[i * h + j] *= std::sqrt(spec.eigenvalue(k1 * k1 + k2 * k2));
    }
  }
  t.inverse(spec_c, field, scratch);
  const double amp = std::sqrt(static_cast<double>(t.field_size()));
  for (auto& v : field) v *= amp;
  return Tensor(Shape(dims.begin(), dims.end()), std::move(field));
}

Tensor cosine_sample(const GrfSpec& spec, std::mt19937_64& rng) {
  const std::size_t n = spec.n;
  // basis[i * n + k] = phi_k(x_i) on the node grid x_i = i / (n - 1).
  std::vector<double> basis(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = double(i) / double(n - 1);
    for (std::size_t k = 0; k < n; ++k)
      basis[i * n + k] = k == 0 ? 1.0 : std::numbers::sqrt2 * std::cos(std::numbers::pi * double(k) * x);
  }
  std::normal_distribution<double> normal;
  if (spec.dim == 1) {
    std::vector<double> coef(n);
    for (std::size_t k = 0; k < n; ++k) coef[k] = std::sqrt(spec.eigenvalue(double(k * k))) * normal(rng);
    Tensor out({n});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) out[i] += basis[i * n + k] * coef[k];
    return out;
  }
  std::vector<double> coef(n * n);
  for (std::size_t k1 = 0; k1 < n; ++k1)
    for (std::size_t k2 = 0; k2 < n; ++k2)
      coef[k1 * n + k2] = std::sqrt(spec.eigenvalue(double(k1 * k1 + k2 * k2))) * normal(rng);
  // field = B coef B^T, evaluated as two dense products.
  std::vector<double> tmp(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k1 = 0; k1 < n; ++k1) {
      const double b = basis[i * n + k1];
      for (std::size_t k2 = 0; k2 < n; ++k2) tmp[i * n + k2] += b * coef[k1 * n + k2];
    }
  Tensor out({n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k2 = 0; k2 < n; ++k2) s += tmp[i * n + k2] * basis[j * n + k2];
      out[i * n + j] = s;
    }
  return out;
}

}  // namespace

Tensor grf_sample(const GrfSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  return spec.boundary == Boundary::periodic ? periodic_sample(spec, rng) : cosine_sample(spec, rng);
}

Tensor psi_threshold(const Tensor& g) {
  Tensor out(g.shape());
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = g[i] >= 0.0 ? 12.0 : 3.0;
  return out;
}

Tensor downsample(const Tensor& field, std::size_t r, std::size_t spatial_rank) {
  if (r == 0) throw std::invalid_argument("downsample factor must be positive");
  const Shape& s = field.shape();
  if (spatial_rank == 0 || spatial_rank > s.size() || spatial_rank > 2)
    throw ShapeError("downsample: cannot take " + std::to_string(spatial_rank) + " spatial axes of " + to_string(s));
  Shape out_shape = s;
  for (std::size_t a = s.size() - spatial_rank; a < s.size(); ++a) {
    if (s[a] % r != 0)
      throw std::invalid_argument("downsample: factor " + std::to_string(r) + " does not divide axis of size " +
                                  std::to_string(s[a]));
    out_shape[a] = s[a] / r;
  }
  const std::size_t lead = numel(Shape(s.begin(), s.end() - spatial_rank));
  const std::size_t in_block = numel(Shape(s.end() - spatial_rank, s.end()));
  const std::size_t out_block = in_block / (spatial_rank == 1 ? r : r * r);
  Tensor out(out_shape);
  const std::size_t n_last = s.back(), m_last = out_shape.back();
  const std::size_t m_rows = spatial_rank == 2 ? out_shape[s.size() - 2] : 1;
  for (std::size_t l = 0; l < lead; ++l)
    for (std::size_t i = 0; i < m_rows; ++i)
      for (std::size_t j = 0; j < m_last; ++j)
        out[l * out_block + i * m_last + j] = field[l * in_block + (i * r) * n_last + j * r];
  return out;
}

}  // namespace dpno::pde
