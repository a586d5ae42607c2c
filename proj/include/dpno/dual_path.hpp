#pragma once

// Dual-path composition of operator blocks.
//
//   residual path:  u_{k+1} = G_k(u_k) + u_k
//   dense path:     v_{k+1} = G_k([v_0, v_1, ..., v_k])
//
// Both paths start from the same state; their outputs are concatenated on the
// channel axis and merged by a pointwise two-layer network.

#include <concepts>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dpno/autodiff.hpp"
#include "dpno/blocks.hpp"

namespace dpno {

template <class B>
concept OperatorBlock = requires(B& b, Tape& tape, const Var& x, std::vector<Parameter*>& out) {
  { b.forward(tape, x) } -> std::same_as<Var>;
  { b.in() } -> std::convertible_to<std::size_t>;
  { b.out() } -> std::convertible_to<std::size_t>;
  b.collect(out);
};

/// What the merge network sees from the dense path.
enum class MergeInput { full_stack, last_only };

template <OperatorBlock Block>
Var res_path(Tape& tape, const Var& u0, std::span<Block> blocks) {
  Var u = u0;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    if (blocks[k].in() != u.shape().back() || blocks[k].out() != u.shape().back())
      throw ShapeError("res_path: block " + std::to_string(k) + " maps " + std::to_string(blocks[k].in()) + " -> " +
                       std::to_string(blocks[k].out()) + " but the path width is " +
                       std::to_string(u.shape().back()));
    u = add(blocks[k].forward(tape, u), u);
  }
  return u;
}

/// Returns the whole stack [v_0, v_1, ..., v_K] on the channel axis.
template <OperatorBlock Block>
Var dense_path(Tape& tape, const Var& v0, std::span<Block> blocks) {
  std::vector<Var> stack{v0};
  const std::size_t width = v0.shape().back();
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const Var input = stack.size() == 1 ? stack.front() : concat_channels(stack);
    if (blocks[k].in() != input.shape().back() || blocks[k].out() != width)
      throw ShapeError("dense_path: block " + std::to_string(k) + " maps " + std::to_string(blocks[k].in()) + " -> " +
                       std::to_string(blocks[k].out()) + ", expected " + std::to_string(input.shape().back()) +
                       " -> " + std::to_string(width));
    stack.push_back(blocks[k].forward(tape, input));
  }
  return stack.size() == 1 ? stack.front() : concat_channels(stack);
}

/// Residual and dense stacks over one block type plus the merge network.
template <OperatorBlock Block>
class DualPath {
 public:
  DualPath() = default;
  DualPath(std::size_t width, std::vector<Block> res, std::vector<Block> dense, Mlp merge, MergeInput mode)
      : width_(width), res_(std::move(res)), dense_(std::move(dense)), merge_(std::move(merge)), mode_(mode) {
    for (std::size_t k = 0; k < res_.size(); ++k)
      if (res_[k].in() != width_ || res_[k].out() != width_)
        throw ShapeError("residual block " + std::to_string(k) + " must map " + std::to_string(width_) + " -> " +
                         std::to_string(width_) + " channels");
    for (std::size_t k = 0; k < dense_.size(); ++k)
      if (dense_[k].in() != (k + 1) * width_ || dense_[k].out() != width_)
        throw ShapeError("dense block " + std::to_string(k) + " must map " + std::to_string((k + 1) * width_) +
                         " -> " + std::to_string(width_) + " channels");
    if (merge_.in() != merge_width(width_, dense_.size(), mode_))
      throw ShapeError("merge network expects " + std::to_string(merge_width(width_, dense_.size(), mode_)) +
                       " input channels, has " + std::to_string(merge_.in()));
  }

  /// Channels entering the merge network.
  static std::size_t merge_width(std::size_t width, std::size_t dense_blocks, MergeInput mode) {
    return mode == MergeInput::full_stack ? width + (dense_blocks + 1) * width : 2 * width;
  }

  Var forward(Tape& tape, const Var& x0) {
    const Var u = res_path<Block>(tape, x0, res_);
    Var v = dense_path<Block>(tape, x0, dense_);
    if (mode_ == MergeInput::last_only && !dense_.empty()) {
      // The newest features are the trailing `width_` channels of the stack.
      v = last_channels(tape, v, width_);
    }
    const Var parts[] = {u, v};
    return merge_.forward(tape, concat_channels(parts));
  }

  void init(Rng& rng) {
    for (auto& b : res_) b.init(rng);
    for (auto& b : dense_) b.init(rng);
    merge_.init(rng);
  }

  void collect(std::vector<Parameter*>& out) {
    for (auto& b : res_) b.collect(out);
    for (auto& b : dense_) b.collect(out);
    merge_.collect(out);
  }

  std::size_t width() const { return width_; }
  std::vector<Block>& res_blocks() { return res_; }
  std::vector<Block>& dense_blocks() { return dense_; }
  Mlp& merge() { return merge_; }
  MergeInput mode() const { return mode_; }

 private:
  static Var last_channels(Tape& tape, const Var& v, std::size_t count) {
    // Selection through a constant 0/1 matrix keeps the op differentiable.
    const std::size_t total = v.shape().back();
    Tensor select({total, count});
    for (std::size_t j = 0; j < count; ++j) select[(total - count + j) * count + j] = 1.0;
    return linear(v, tape.constant(std::move(select)));
  }

  std::size_t width_ = 0;
  std::vector<Block> res_;
  std::vector<Block> dense_;
  Mlp merge_;
  MergeInput mode_ = MergeInput::full_stack;
};

struct DualPathSpec {
  std::size_t res_blocks = 4;
  std::size_t dense_blocks = 3;
  std::size_t merge_hidden = 128;
  MergeInput merge_input = MergeInput::full_stack;
};

/// FNO blocks (GeLU on every block): residual d_v -> d_v, dense block k (k+1) d_v -> d_v,
/// merge to d_v.
DualPath<FnoBlock> make_fno_dual_path(std::size_t width, const std::vector<std::size_t>& kmax,
                                      const DualPathSpec& spec);

/// MLP blocks (hidden width/depth as given, GeLU on the output), merge to `merge_out` values.
DualPath<Mlp> make_mlp_dual_path(std::size_t width, std::size_t hidden, std::size_t depth, std::size_t merge_out,
                                 const DualPathSpec& spec);

}  // namespace dpno
