#include "dpno/spectral.hpp"

#include <algorithm>
#include <memory>
#include <string>

#include "dpno/kernels.hpp"

namespace dpno {

namespace k = kernels::omp;

RfftPlan::RfftPlan(std::vector<std::size_t> dims, std::vector<std::size_t> kmax)
    : dims_(std::move(dims)), kmax_(std::move(kmax)), transform_(dims_) {
  if (kmax_.size() != dims_.size())
    throw std::invalid_argument("RfftPlan: need one k_max per spatial axis");
  for (std::size_t a = 0; a < dims_.size(); ++a)
    if (kmax_[a] < 1 || kmax_[a] > dims_[a] / 2 + 1)
      throw std::invalid_argument("RfftPlan: k_max " + std::to_string(kmax_[a]) + " out of range for axis of size " +
                                  std::to_string(dims_[a]));
  const std::size_t n_last = dims_.back();
  const std::size_t h = n_last / 2 + 1;
  const std::size_t k_last = kmax_.back();
  auto mult = [&](std::size_t k2) { return (k2 == 0 || 2 * k2 == n_last) ? 1.0 : 2.0; };
  if (dims_.size() == 1) {
    for (std::size_t k2 = 0; k2 < k_last; ++k2) {
      retained_.push_back(k2);
      weight_rows_.push_back(k2);
      multiplicity_.push_back(mult(k2));
    }
    return;
  }
  const std::size_t n1 = dims_[0], k1max = kmax_[0];
  for (std::size_t k1 = 0; k1 < n1; ++k1) {
    std::size_t row;
    if (k1 < k1max)
      row = k1;
    else if (k1 + k1max > n1)
      row = 2 * k1max - 1 - (n1 - k1);
    else
      continue;
    for (std::size_t k2 = 0; k2 < k_last; ++k2) {
      retained_.push_back(k1 * h + k2);
      weight_rows_.push_back(row * k_last + k2);
      multiplicity_.push_back(mult(k2));
    }
  }
}

std::vector<std::size_t> RfftPlan::spectrum_dims() const {
  std::vector<std::size_t> s = dims_;
  s.back() = s.back() / 2 + 1;
  return s;
}

std::vector<std::size_t> spectral_mode_shape(std::span<const std::size_t> kmax) {
  if (kmax.size() == 1) return {kmax[0]};
  if (kmax.size() == 2) return {2 * kmax[0] - 1, kmax[1]};
  throw std::invalid_argument("spectral weights support 1 or 2 spatial dimensions");
}

Shape spectral_weight_shape(std::span<const std::size_t> kmax, std::size_t d_in, std::size_t d_out) {
  Shape s = spectral_mode_shape(kmax);
  s.push_back(d_in);
  s.push_back(d_out);
  s.push_back(2);
  return s;
}

Tensor spectral_identity_weights(std::span<const std::size_t> kmax, std::size_t width) {
  Tensor w(spectral_weight_shape(kmax, width, width));
  const std::size_t modes = numel(spectral_mode_shape(kmax));
  for (std::size_t r = 0; r < modes; ++r)
    for (std::size_t i = 0; i < width; ++i) w[((r * width + i) * width + i) * 2] = 1.0;
  return w;
}

RfftPlan plan_for(const Shape& batch_shape, std::span<const std::size_t> kmax) {
  if (batch_shape.size() < 3 || batch_shape.size() > 4)
    throw ShapeError("expected [batch, spatial..., channels] with 1 or 2 spatial axes, got " + to_string(batch_shape));
  std::vector<std::size_t> dims(batch_shape.begin() + 1, batch_shape.end() - 1);
  return RfftPlan(std::move(dims), std::vector<std::size_t>(kmax.begin(), kmax.end()));
}

namespace {

struct Layout {
  std::size_t batch, channels;
};

Layout check_field(const Shape& s, const RfftPlan& plan, const char* op) {
  const std::size_t nd = plan.dims().size();
  if (s.size() != nd + 2 || !std::equal(plan.dims().begin(), plan.dims().end(), s.begin() + 1))
    throw ShapeError(std::string(op) + ": field " + to_string(s) + " does not match plan dims " +
                     to_string(plan.dims()));
  return {s.front(), s.back()};
}

Layout check_spectrum(const Shape& s, const RfftPlan& plan, const char* op) {
  const auto sd = plan.spectrum_dims();
  if (s.size() != sd.size() + 2 || !std::equal(sd.begin(), sd.end(), s.begin() + 1))
    throw ShapeError(std::string(op) + ": coefficients " + to_string(s) + " do not match spectrum layout " +
                     to_string(sd));
  return {s.front(), s.back()};
}

Shape spectrum_shape(const RfftPlan& plan, Layout l) {
  Shape s{l.batch};
  for (auto d : plan.spectrum_dims()) s.push_back(d);
  s.push_back(l.channels);
  return s;
}

Shape field_shape(const RfftPlan& plan, Layout l) {
  Shape s{l.batch};
  for (auto d : plan.dims()) s.push_back(d);
  s.push_back(l.channels);
  return s;
}

}  // namespace

ComplexTensor rfft(const Tensor& x, const RfftPlan& plan) {
  const Layout l = check_field(x.shape(), plan, "rfft");
  ComplexTensor out(spectrum_shape(plan, l));
  k::rfft_channels(plan.transform(), {l.batch, l.channels}, x.data(), out.data());
  return out;
}

Tensor irfft(const ComplexTensor& coeffs, const RfftPlan& plan) {
  const Layout l = check_spectrum(coeffs.shape(), plan, "irfft");
  Tensor out(field_shape(plan, l));
  k::irfft_channels(plan.transform(), {l.batch, l.channels}, coeffs.data(), out.data());
  return out;
}

Tensor rfft_adjoint(const ComplexTensor& coeffs, const RfftPlan& plan) {
  const Layout l = check_spectrum(coeffs.shape(), plan, "rfft_adjoint");
  ComplexTensor scaled = coeffs;
  const std::size_t ns = plan.spectrum_size();
  const std::size_t h = plan.dims().back() / 2 + 1;
  const double n = static_cast<double>(plan.field_size());
  for (std::size_t b = 0; b < l.batch; ++b)
    for (std::size_t s = 0; s < ns; ++s) {
      const std::size_t k2 = s % h;
      const double m = (k2 == 0 || 2 * k2 == plan.dims().back()) ? 1.0 : 2.0;
      for (std::size_t c = 0; c < l.channels; ++c) scaled[(b * ns + s) * l.channels + c] *= n / m;
    }
  return irfft(scaled, plan);
}

ComplexTensor truncate_modes(const ComplexTensor& coeffs, const RfftPlan& plan) {
  const Layout l = check_spectrum(coeffs.shape(), plan, "truncate_modes");
  ComplexTensor out(coeffs.shape());
  const std::size_t ns = plan.spectrum_size();
  for (std::size_t b = 0; b < l.batch; ++b)
    for (auto s : plan.retained())
      for (std::size_t c = 0; c < l.channels; ++c)
        out[(b * ns + s) * l.channels + c] = coeffs[(b * ns + s) * l.channels + c];
  return out;
}

namespace {

struct SpectralForward {
  Tensor out;
  std::vector<cplx> retained_x;  // [batch, retained, d_in]
};

void check_weights(const Shape& ws, const RfftPlan& plan, std::size_t d_in) {
  const Shape expect = spectral_weight_shape(plan.kmax(), d_in, ws.size() >= 2 ? ws[ws.size() - 2] : 0);
  if (ws != expect)
    throw ShapeError("spectral_conv: weights " + to_string(ws) + " do not match plan/width, expected " +
                     to_string(expect));
}

SpectralForward spectral_forward(const Tensor& x, const Tensor& w, const RfftPlan& plan) {
  const Layout l = check_field(x.shape(), plan, "spectral_conv");
  check_weights(w.shape(), plan, l.channels);
  const std::size_t d_in = l.channels, d_out = w.dim(w.ndim() - 2);
  const std::size_t ns = plan.spectrum_size(), nr = plan.retained().size();
  std::vector<cplx> full(l.batch * ns * d_in);
  k::rfft_channels(plan.transform(), {l.batch, d_in}, x.data(), full);
  SpectralForward f;
  f.retained_x.resize(l.batch * nr * d_in);
  for (std::size_t b = 0; b < l.batch; ++b)
    for (std::size_t r = 0; r < nr; ++r)
      std::copy_n(full.data() + (b * ns + plan.retained()[r]) * d_in, d_in, f.retained_x.data() + (b * nr + r) * d_in);
  std::vector<cplx> mixed(l.batch * nr * d_out);
  const auto* wc = reinterpret_cast<const cplx*>(w.ptr());
  const kernels::MixDims md{l.batch, nr, d_in, d_out};
  k::spectral_mix(md, f.retained_x, {wc, w.size() / 2}, plan.weight_rows(), mixed);
  std::vector<cplx> spec(l.batch * ns * d_out);
  for (std::size_t b = 0; b < l.batch; ++b)
    for (std::size_t r = 0; r < nr; ++r)
      std::copy_n(mixed.data() + (b * nr + r) * d_out, d_out, spec.data() + (b * ns + plan.retained()[r]) * d_out);
  f.out = Tensor(field_shape(plan, {l.batch, d_out}));
  k::irfft_channels(plan.transform(), {l.batch, d_out}, spec, f.out.data());
  return f;
}

}  // namespace

Tensor spectral_conv(const Tensor& x, const Tensor& weights, const RfftPlan& plan) {
  return spectral_forward(x, weights, plan).out;
}

Var spectral_conv(const Var& x, const Var& weights, const RfftPlan& plan) {
  auto f = spectral_forward(x.value(), weights.value(), plan);
  auto saved = std::make_shared<std::vector<cplx>>(std::move(f.retained_x));
  auto plan_copy = std::make_shared<RfftPlan>(plan);
  Var ins[] = {x, weights};
  return x.tape().record("spectral_conv", std::move(f.out), ins, [x, weights, saved, plan_copy](const Tensor& g) {
    const RfftPlan& p = *plan_copy;
    const std::size_t batch = g.dim(0), d_out = g.shape().back(), d_in = x.shape().back();
    const std::size_t ns = p.spectrum_size(), nr = p.retained().size();
    const double n = static_cast<double>(p.field_size());
    // Output-coefficient gradient: (multiplicity / N) * rfft(g) on retained modes.
    std::vector<cplx> gfull(batch * ns * d_out);
    k::rfft_channels(p.transform(), {batch, d_out}, g.data(), gfull);
    std::vector<cplx> gy(batch * nr * d_out);
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t r = 0; r < nr; ++r) {
        const double s = p.multiplicity()[r] / n;
        for (std::size_t o = 0; o < d_out; ++o)
          gy[(b * nr + r) * d_out + o] = s * gfull[(b * ns + p.retained()[r]) * d_out + o];
      }
    const kernels::MixDims md{batch, nr, d_in, d_out};
    if (weights.requires_grad()) {
      Tensor& gw = weights.tape().grad_buffer(weights);
      k::spectral_weight_grad(md, *saved, gy, p.weight_rows(), {reinterpret_cast<cplx*>(gw.ptr()), gw.size() / 2});
    }
    if (x.requires_grad()) {
      const auto& w = weights.value();
      std::vector<cplx> gx(batch * nr * d_in);
      k::spectral_mix_adjoint(md, gy, {reinterpret_cast<const cplx*>(w.ptr()), w.size() / 2}, p.weight_rows(), gx);
      std::vector<cplx> spec(batch * ns * d_in);
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t r = 0; r < nr; ++r) {
          const double s = n / p.multiplicity()[r];
          for (std::size_t i = 0; i < d_in; ++i)
            spec[(b * ns + p.retained()[r]) * d_in + i] = s * gx[(b * nr + r) * d_in + i];
        }
      Tensor back(x.shape());
      k::irfft_channels(p.transform(), {batch, d_in}, spec, back.data());
      x.tape().grad_buffer(x) += back;
    }
  });
}

}  // namespace dpno
