#include "dpno/dual_path.hpp"

namespace dpno {

DualPath<FnoBlock> make_fno_dual_path(std::size_t width, const std::vector<std::size_t>& kmax,
                                      const DualPathSpec& spec) {
  std::vector<FnoBlock> res, dense;
  for (std::size_t k = 0; k < spec.res_blocks; ++k)
    res.emplace_back("res." + std::to_string(k), FnoBlockSpec{width, width, kmax, true});
  for (std::size_t k = 0; k < spec.dense_blocks; ++k)
    dense.emplace_back("dense." + std::to_string(k), FnoBlockSpec{(k + 1) * width, width, kmax, true});
  const std::size_t merge_in = DualPath<FnoBlock>::merge_width(width, spec.dense_blocks, spec.merge_input);
  Mlp merge("merge", MlpSpec{merge_in, spec.merge_hidden, 2, width, false});
  return DualPath<FnoBlock>(width, std::move(res), std::move(dense), std::move(merge), spec.merge_input);
}

DualPath<Mlp> make_mlp_dual_path(std::size_t width, std::size_t hidden, std::size_t depth, std::size_t merge_out,
                                 const DualPathSpec& spec) {
  std::vector<Mlp> res, dense;
  for (std::size_t k = 0; k < spec.res_blocks; ++k)
    res.emplace_back("trunk.res." + std::to_string(k), MlpSpec{width, hidden, depth, width, true});
  for (std::size_t k = 0; k < spec.dense_blocks; ++k)
    dense.emplace_back("trunk.dense." + std::to_string(k), MlpSpec{(k + 1) * width, hidden, depth, width, true});
  const std::size_t merge_in = DualPath<Mlp>::merge_width(width, spec.dense_blocks, spec.merge_input);
  Mlp merge("trunk.merge", MlpSpec{merge_in, spec.merge_hidden, 2, merge_out, false});
  return DualPath<Mlp>(width, std::move(res), std::move(dense), std::move(merge), spec.merge_input);
}

}  // namespace dpno
