#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "dpno/autodiff.hpp"
#include "dpno/spectral.hpp"

namespace dpno {

using Rng = std::mt19937_64;

/// Pointwise affine map on the channel axis.
class Linear {
 public:
  Linear() = default;
  Linear(const std::string& name, std::size_t in, std::size_t out, bool bias = true);

  /// Uniform(-1/sqrt(in), 1/sqrt(in)) for weight and bias.
  void init(Rng& rng);
  Var forward(Tape& tape, const Var& x);
  void collect(std::vector<Parameter*>& out);

  std::size_t in() const { return in_; }
  std::size_t out() const { return out_; }
  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }
  bool has_bias() const { return has_bias_; }

 private:
  std::size_t in_ = 0, out_ = 0;
  bool has_bias_ = true;
  Parameter weight_, bias_;
};

struct MlpSpec {
  std::size_t in = 1;
  std::size_t hidden = 128;
  /// Number of affine layers.
  std::size_t depth = 4;
  std::size_t out = 1;
  /// Apply GeLU after the last layer as well.
  bool final_activation = false;
};

/// Affine layers with GeLU between them.
class Mlp {
 public:
  Mlp() = default;
  Mlp(const std::string& name, const MlpSpec& spec);

  void init(Rng& rng);
  Var forward(Tape& tape, const Var& x);
  void collect(std::vector<Parameter*>& out);

  std::size_t in() const { return layers_.front().in(); }
  std::size_t out() const { return layers_.back().out(); }
  std::vector<Linear>& layers() { return layers_; }

 private:
  std::vector<Linear> layers_;
  bool final_activation_ = false;
};

/// Learnable per-mode complex channel mixing, applied in Fourier space.
class SpectralConv {
 public:
  SpectralConv() = default;
  SpectralConv(const std::string& name, std::size_t d_in, std::size_t d_out, std::vector<std::size_t> kmax);

  /// Real and imaginary parts uniform in (-1/d_in, 1/d_in).
  void init(Rng& rng);
  Var forward(Tape& tape, const Var& x);
  void collect(std::vector<Parameter*>& out) { out.push_back(&weights_); }

  Parameter& weights() { return weights_; }
  const std::vector<std::size_t>& kmax() const { return kmax_; }

 private:
  std::size_t d_in_ = 0, d_out_ = 0;
  std::vector<std::size_t> kmax_;
  Parameter weights_;
};

struct FnoBlockSpec {
  std::size_t d_in = 1;
  std::size_t d_out = 1;
  std::vector<std::size_t> kmax{1};
  bool activation = true;
};

/// sigma(W x + b + K x) with K the spectral convolution.
class FnoBlock {
 public:
  FnoBlock() = default;
  FnoBlock(const std::string& name, const FnoBlockSpec& spec);

  void init(Rng& rng);
  Var forward(Tape& tape, const Var& x);
  void collect(std::vector<Parameter*>& out);

  std::size_t in() const { return pointwise_.in(); }
  std::size_t out() const { return pointwise_.out(); }
  SpectralConv& spectral() { return spectral_; }
  Linear& pointwise() { return pointwise_; }
  bool activation() const { return activation_; }

 private:
  SpectralConv spectral_;
  Linear pointwise_;
  bool activation_ = true;
};

/// Uniform grid coordinates j/n per axis: [dims..., ndims].
Tensor grid_coordinates(std::span<const std::size_t> dims);

/// Lifting P: (a, x) -> d_v channels, and projection Q: d_v -> hidden -> d_u.
class LiftProject {
 public:
  LiftProject() = default;
  LiftProject(std::size_t d_a, std::size_t coord_dim, std::size_t d_v, std::size_t d_u, std::size_t hidden = 128);

  void init(Rng& rng);
  /// a: [batch, grid..., d_a], coords: [grid..., d] -> [batch, grid..., d_v].
  Var lift(Tape& tape, const Var& a, const Tensor& coords);
  Var project(Tape& tape, const Var& x);
  void collect(std::vector<Parameter*>& out);

  Linear& lift_map() { return lift_; }
  Mlp& project_map() { return project_; }
  std::size_t width() const { return lift_.out(); }

 private:
  Linear lift_;
  Mlp project_;
};

struct DeepONetSpec {
  std::size_t sensors = 1;
  std::size_t query_dim = 1;
  std::size_t width = 128;
  std::size_t depth = 4;
  std::size_t basis = 128;
  bool output_bias = false;
};

/// out[b, j] = sum_k branch[b, k] * trunk[j, k] for [batch x p] and [queries x p].
Var deeponet_combine(const Var& branch, const Var& trunk);

/// Branch net over sensor values, trunk net over query coordinates.
class DeepONet {
 public:
  DeepONet() = default;
  explicit DeepONet(const DeepONetSpec& spec);

  void init(Rng& rng);
  /// sensors: [batch, m], queries: [q, d] -> [batch, q].
  Var forward(Tape& tape, const Var& sensors, const Var& queries);
  void collect(std::vector<Parameter*>& out);

  Mlp& branch() { return branch_; }
  Mlp& trunk() { return trunk_; }
  const DeepONetSpec& spec() const { return spec_; }

 private:
  DeepONetSpec spec_;
  Mlp branch_, trunk_;
  Parameter out_bias_;
};

}  // namespace dpno
