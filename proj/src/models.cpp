#include "dpno/models.hpp"

#include <stdexcept>

namespace dpno {

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::fno: return "fno";
    case ModelKind::deeponet: return "deeponet";
    case ModelKind::dp_fno: return "dp-fno";
    case ModelKind::dp_deeponet: return "dp-deeponet";
  }
  return "?";
}

ModelKind parse_model_kind(const std::string& s) {
  if (s == "fno") return ModelKind::fno;
  if (s == "deeponet") return ModelKind::deeponet;
  if (s == "dp-fno") return ModelKind::dp_fno;
  if (s == "dp-deeponet") return ModelKind::dp_deeponet;
  throw std::invalid_argument("unknown model '" + s + "' (expected fno, deeponet, dp-fno, dp-deeponet)");
}

std::vector<Parameter*> OperatorModel::parameters() {
  std::vector<Parameter*> out;
  collect(out);
  return out;
}

std::size_t OperatorModel::parameter_count() {
  std::size_t n = 0;
  for (auto* p : parameters()) n += p->value.size();
  return n;
}

Tensor OperatorModel::predict(const Tensor& input) {
  Tape tape;
  return forward(tape, input).value();
}

namespace {
Tensor coords_for(const Tensor& input, std::size_t spatial_rank, std::size_t d_a) {
  const Shape& s = input.shape();
  if (s.size() != spatial_rank + 2 || s.back() != d_a)
    throw ShapeError("FNO input must be [batch, grid(" + std::to_string(spatial_rank) + "), " + std::to_string(d_a) +
                     "], got " + to_string(s));
  std::vector<std::size_t> dims(s.begin() + 1, s.end() - 1);
  return grid_coordinates(dims);
}
}  // namespace

StackedFno::StackedFno(const FnoSpec& spec, std::uint64_t seed)
    : spec_(spec), lp_(spec.d_a, spec.kmax.size(), spec.width, spec.d_u, spec.projection_hidden) {
  for (std::size_t k = 0; k < spec.blocks; ++k)
    blocks_.emplace_back("blocks." + std::to_string(k),
                         FnoBlockSpec{spec.width, spec.width, spec.kmax, k + 1 < spec.blocks});
  Rng rng(seed);
  lp_.init(rng);
  for (auto& b : blocks_) b.init(rng);
}

Var StackedFno::forward(Tape& tape, const Tensor& input) {
  const Tensor coords = coords_for(input, spec_.kmax.size(), spec_.d_a);
  Var h = lp_.lift(tape, tape.constant(input), coords);
  for (auto& b : blocks_) h = b.forward(tape, h);
  return lp_.project(tape, h);
}

void StackedFno::collect(std::vector<Parameter*>& out) {
  lp_.collect(out);
  for (auto& b : blocks_) b.collect(out);
}

DualPathFno::DualPathFno(const FnoSpec& spec, const DualPathSpec& dual, std::uint64_t seed)
    : spec_(spec),
      lp_(spec.d_a, spec.kmax.size(), spec.width, spec.d_u, spec.projection_hidden),
      paths_(make_fno_dual_path(spec.width, spec.kmax, dual)) {
  Rng rng(seed);
  lp_.init(rng);
  paths_.init(rng);
}

Var DualPathFno::forward(Tape& tape, const Tensor& input) {
  const Tensor coords = coords_for(input, spec_.kmax.size(), spec_.d_a);
  const Var a0 = lp_.lift(tape, tape.constant(input), coords);
  return lp_.project(tape, paths_.forward(tape, a0));
}

void DualPathFno::collect(std::vector<Parameter*>& out) {
  lp_.collect(out);
  paths_.collect(out);
}

DeepONetModel::DeepONetModel(const DeepONetSpec& spec, Tensor queries, std::uint64_t seed)
    : net_(spec), queries_(std::move(queries)) {
  Rng rng(seed);
  net_.init(rng);
}

Var DeepONetModel::forward(Tape& tape, const Tensor& input) {
  return net_.forward(tape, tape.constant(input), tape.constant(queries_));
}

DualPathDeepONet::DualPathDeepONet(const DeepONetSpec& spec, const DualPathSpec& dual, Tensor queries,
                                   std::uint64_t seed)
    : spec_(spec),
      branch_("branch", MlpSpec{spec.sensors, spec.width, spec.depth, spec.basis, false}),
      embed_("trunk.embed", spec.query_dim, spec.width),
      paths_(make_mlp_dual_path(spec.width, spec.width, spec.depth, spec.basis, dual)),
      queries_(std::move(queries)) {
  if (queries_.ndim() != 2 || queries_.dim(1) != spec.query_dim)
    throw ShapeError("dual-path DeepONet: queries must be [q, " + std::to_string(spec.query_dim) + "], got " +
                     to_string(queries_.shape()));
  Rng rng(seed);
  branch_.init(rng);
  embed_.init(rng);
  paths_.init(rng);
}

Var DualPathDeepONet::trunk(Tape& tape, const Var& queries) {
  if (queries.shape().size() != 2 || queries.shape()[1] != spec_.query_dim)
    throw ShapeError("dual-path DeepONet: expected [q, " + std::to_string(spec_.query_dim) + "] queries, got " +
                     to_string(queries.shape()));
  return paths_.forward(tape, embed_.forward(tape, queries));
}

Var DualPathDeepONet::forward(Tape& tape, const Tensor& input) {
  if (input.ndim() != 2 || input.dim(1) != spec_.sensors)
    throw ShapeError("dual-path DeepONet: expected [batch, " + std::to_string(spec_.sensors) + "] sensors, got " +
                     to_string(input.shape()));
  return deeponet_combine(branch(tape, tape.constant(input)), trunk(tape, tape.constant(queries_)));
}

void DualPathDeepONet::collect(std::vector<Parameter*>& out) {
  branch_.collect(out);
  embed_.collect(out);
  paths_.collect(out);
}

}  // namespace dpno
