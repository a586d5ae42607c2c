#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "dpno/blocks.hpp"
#include "dpno/dual_path.hpp"

namespace dpno {

enum class ModelKind { fno, deeponet, dp_fno, dp_deeponet };

std::string to_string(ModelKind k);
ModelKind parse_model_kind(const std::string& s);

/// A learned operator evaluated on batches in its own input layout:
/// FNO family [batch, grid..., d_a] -> [batch, grid..., d_u];
/// DeepONet family [batch, sensors] -> [batch, queries].
class OperatorModel {
 public:
  virtual ~OperatorModel() = default;

  virtual Var forward(Tape& tape, const Tensor& input) = 0;
  virtual void collect(std::vector<Parameter*>& out) = 0;
  virtual ModelKind kind() const = 0;

  std::vector<Parameter*> parameters();
  std::size_t parameter_count();
  /// Inference without keeping a gradient graph around.
  Tensor predict(const Tensor& input);
};

struct FnoSpec {
  std::size_t d_a = 1;
  std::size_t d_u = 1;
  std::size_t width = 32;
  /// Retained modes per spatial axis; its length fixes the spatial rank.
  std::vector<std::size_t> kmax{16};
  std::size_t projection_hidden = 128;
  std::size_t blocks = 4;
};

/// lift -> FNO blocks (GeLU on all but the last) -> project.
class StackedFno : public OperatorModel {
 public:
  StackedFno(const FnoSpec& spec, std::uint64_t seed);

  Var forward(Tape& tape, const Tensor& input) override;
  void collect(std::vector<Parameter*>& out) override;
  ModelKind kind() const override { return ModelKind::fno; }

  LiftProject& lift_project() { return lp_; }
  std::vector<FnoBlock>& blocks() { return blocks_; }

 private:
  FnoSpec spec_;
  LiftProject lp_;
  std::vector<FnoBlock> blocks_;
};

/// lift -> dual path of FNO blocks -> project.
class DualPathFno : public OperatorModel {
 public:
  DualPathFno(const FnoSpec& spec, const DualPathSpec& dual, std::uint64_t seed);

  Var forward(Tape& tape, const Tensor& input) override;
  void collect(std::vector<Parameter*>& out) override;
  ModelKind kind() const override { return ModelKind::dp_fno; }

  LiftProject& lift_project() { return lp_; }
  DualPath<FnoBlock>& paths() { return paths_; }

 private:
  FnoSpec spec_;
  LiftProject lp_;
  DualPath<FnoBlock> paths_;
};

/// DeepONet with a fixed query set.
class DeepONetModel : public OperatorModel {
 public:
  DeepONetModel(const DeepONetSpec& spec, Tensor queries, std::uint64_t seed);

  Var forward(Tape& tape, const Tensor& input) override;
  void collect(std::vector<Parameter*>& out) override { net_.collect(out); }
  ModelKind kind() const override { return ModelKind::deeponet; }

  DeepONet& net() { return net_; }

 private:
  DeepONet net_;
  Tensor queries_;
};

/// DeepONet whose trunk is an affine embedding followed by a dual path of MLP
/// blocks merged to `basis` values per query. The branch is a plain MLP.
class DualPathDeepONet : public OperatorModel {
 public:
  DualPathDeepONet(const DeepONetSpec& spec, const DualPathSpec& dual, Tensor queries, std::uint64_t seed);

  Var forward(Tape& tape, const Tensor& input) override;
  void collect(std::vector<Parameter*>& out) override;
  ModelKind kind() const override { return ModelKind::dp_deeponet; }

  /// Basis values per query: [q, d] -> [q, basis].
  Var trunk(Tape& tape, const Var& queries);
  Var branch(Tape& tape, const Var& sensors) { return branch_.forward(tape, sensors); }

  Mlp& branch_net() { return branch_; }
  Linear& embed() { return embed_; }
  DualPath<Mlp>& paths() { return paths_; }
  const Tensor& queries() const { return queries_; }

 private:
  DeepONetSpec spec_;
  Mlp branch_;
  Linear embed_;
  DualPath<Mlp> paths_;
  Tensor queries_;
};

}  // namespace dpno
