#include "dpno/blocks.hpp"

#include <cmath>

namespace dpno {

namespace {
void fill_uniform(Tensor& t, double bound, Rng& rng) {
  std::uniform_real_distribution<double> u(-bound, bound);
  for (auto& v : t.data()) v = u(rng);
}
}  // namespace

Linear::Linear(const std::string& name, std::size_t in, std::size_t out, bool bias)
    : in_(in), out_(out), has_bias_(bias), weight_(name + ".weight", Tensor({in, out})) {
  if (bias) bias_ = Parameter(name + ".bias", Tensor({out}));
}

void Linear::init(Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_));
  fill_uniform(weight_.value, bound, rng);
  if (has_bias_) fill_uniform(bias_.value, bound, rng);
}

Var Linear::forward(Tape& tape, const Var& x) {
  Var y = linear(x, tape.parameter(weight_));
  return has_bias_ ? bias_add(y, tape.parameter(bias_)) : y;
}

void Linear::collect(std::vector<Parameter*>& out) {
  out.push_back(&weight_);
  if (has_bias_) out.push_back(&bias_);
}

Mlp::Mlp(const std::string& name, const MlpSpec& spec) : final_activation_(spec.final_activation) {
  if (spec.depth == 0) throw std::invalid_argument("Mlp depth must be >= 1");
  for (std::size_t l = 0; l < spec.depth; ++l) {
    const std::size_t in = l == 0 ? spec.in : spec.hidden;
    const std::size_t out = l + 1 == spec.depth ? spec.out : spec.hidden;
    layers_.emplace_back(name + "." + std::to_string(l), in, out);
  }
}

void Mlp::init(Rng& rng) {
  for (auto& l : layers_) l.init(rng);
}

Var Mlp::forward(Tape& tape, const Var& x) {
  Var h = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    h = layers_[l].forward(tape, h);
    if (l + 1 < layers_.size() || final_activation_) h = gelu(h);
  }
  return h;
}

void Mlp::collect(std::vector<Parameter*>& out) {
  for (auto& l : layers_) l.collect(out);
}

SpectralConv::SpectralConv(const std::string& name, std::size_t d_in, std::size_t d_out, std::vector<std::size_t> kmax)
    : d_in_(d_in), d_out_(d_out), kmax_(std::move(kmax)),
      weights_(name + ".spectral", Tensor(spectral_weight_shape(kmax_, d_in, d_out))) {}

void SpectralConv::init(Rng& rng) { fill_uniform(weights_.value, 1.0 / static_cast<double>(d_in_), rng); }

Var SpectralConv::forward(Tape& tape, const Var& x) {
  if (x.shape().back() != d_in_)
    throw ShapeError("spectral conv expects " + std::to_string(d_in_) + " channels, got " + to_string(x.shape()));
  return spectral_conv(x, tape.parameter(weights_), plan_for(x.shape(), kmax_));
}

FnoBlock::FnoBlock(const std::string& name, const FnoBlockSpec& spec)
    : spectral_(name, spec.d_in, spec.d_out, spec.kmax),
      pointwise_(name + ".w", spec.d_in, spec.d_out),
      activation_(spec.activation) {}

void FnoBlock::init(Rng& rng) {
  spectral_.init(rng);
  pointwise_.init(rng);
}

Var FnoBlock::forward(Tape& tape, const Var& x) {
  if (x.shape().back() != in())
    throw ShapeError("FNO block expects " + std::to_string(in()) + " channels, got " + to_string(x.shape()));
  Var y = add(pointwise_.forward(tape, x), spectral_.forward(tape, x));
  return activation_ ? gelu(y) : y;
}

void FnoBlock::collect(std::vector<Parameter*>& out) {
  spectral_.collect(out);
  pointwise_.collect(out);
}

Tensor grid_coordinates(std::span<const std::size_t> dims) {
  Shape shape(dims.begin(), dims.end());
  shape.push_back(dims.size());
  Tensor c(shape);
  const std::size_t points = numel(Shape(dims.begin(), dims.end()));
  for (std::size_t p = 0; p < points; ++p) {
    std::size_t rem = p;
    for (std::size_t a = dims.size(); a-- > 0;) {
      c[p * dims.size() + a] = static_cast<double>(rem % dims[a]) / static_cast<double>(dims[a]);
      rem /= dims[a];
    }
  }
  return c;
}

LiftProject::LiftProject(std::size_t d_a, std::size_t coord_dim, std::size_t d_v, std::size_t d_u, std::size_t hidden)
    : lift_("lift", d_a + coord_dim, d_v), project_("project", MlpSpec{d_v, hidden, 2, d_u, false}) {}

void LiftProject::init(Rng& rng) {
  lift_.init(rng);
  project_.init(rng);
}

Var LiftProject::lift(Tape& tape, const Var& a, const Tensor& coords) {
  const Shape& as = a.shape();
  const Shape& cs = coords.shape();
  if (as.size() != cs.size() + 1 || !std::equal(cs.begin(), cs.end() - 1, as.begin() + 1))
    throw ShapeError("lift: coordinates " + to_string(cs) + " do not match field " + to_string(as));
  if (as.back() + cs.back() != lift_.in())
    throw ShapeError("lift: expects " + std::to_string(lift_.in()) + " input channels, got " +
                     std::to_string(as.back() + cs.back()));
  Shape bs = cs;
  bs.insert(bs.begin(), as[0]);
  Tensor tiled(bs);
  for (std::size_t b = 0; b < as[0]; ++b) std::copy_n(coords.ptr(), coords.size(), tiled.ptr() + b * coords.size());
  Var parts[] = {a, tape.constant(std::move(tiled))};
  return lift_.forward(tape, concat_channels(parts));
}

Var LiftProject::project(Tape& tape, const Var& x) {
  if (x.shape().back() != project_.in())
    throw ShapeError("project: expects " + std::to_string(project_.in()) + " channels, got " + to_string(x.shape()));
  return project_.forward(tape, x);
}

void LiftProject::collect(std::vector<Parameter*>& out) {
  lift_.collect(out);
  project_.collect(out);
}

Var deeponet_combine(const Var& branch, const Var& trunk) {
  if (branch.shape().size() != 2 || trunk.shape().size() != 2 || branch.shape()[1] != trunk.shape()[1])
    throw ShapeError("deeponet: branch " + to_string(branch.shape()) + " and trunk " + to_string(trunk.shape()) +
                     " must share the basis count");
  return matmul(branch, transpose(trunk));
}

DeepONet::DeepONet(const DeepONetSpec& spec)
    : spec_(spec),
      branch_("branch", MlpSpec{spec.sensors, spec.width, spec.depth, spec.basis, false}),
      trunk_("trunk", MlpSpec{spec.query_dim, spec.width, spec.depth, spec.basis, false}) {
  if (spec.output_bias) out_bias_ = Parameter("output_bias", Tensor({1}));
}

void DeepONet::init(Rng& rng) {
  branch_.init(rng);
  trunk_.init(rng);
}

Var DeepONet::forward(Tape& tape, const Var& sensors, const Var& queries) {
  if (sensors.shape().size() != 2 || sensors.shape()[1] != spec_.sensors)
    throw ShapeError("deeponet: expected [batch, " + std::to_string(spec_.sensors) + "] sensors, got " +
                     to_string(sensors.shape()));
  if (queries.shape().size() != 2 || queries.shape()[1] != spec_.query_dim)
    throw ShapeError("deeponet: expected [q, " + std::to_string(spec_.query_dim) + "] queries, got " +
                     to_string(queries.shape()));
  Var out = deeponet_combine(branch_.forward(tape, sensors), trunk_.forward(tape, queries));
  if (spec_.output_bias) {
    const Shape s = out.shape();
    out = reshape(bias_add(reshape(out, {s[0] * s[1], 1}), tape.parameter(out_bias_)), s);
  }
  return out;
}

void DeepONet::collect(std::vector<Parameter*>& out) {
  branch_.collect(out);
  trunk_.collect(out);
  if (spec_.output_bias) out.push_back(&out_bias_);
}

}  // namespace dpno
