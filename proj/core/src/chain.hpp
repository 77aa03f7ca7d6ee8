#ifndef GTD_SRC_CHAIN_HPP_
#define GTD_SRC_CHAIN_HPP_

// Contraction helpers shared by TT/TR reconstruction and their ALS sweeps.

#include <span>
#include <vector>

#include "gtd/tensor.hpp"

namespace gtd::detail {

/// Product of a run of 3-way cores, stored as a (left, middle, right) tensor
/// with left rank fastest. `middle` linearizes the physical indices of the
/// run with the first core's index fastest.
struct ChainProduct {
  std::size_t left = 0;
  std::size_t middle = 0;
  std::size_t right = 0;
  Vector data;
};

/// Contracts cores[order[0]] * cores[order[1]] * ... in that order.
ChainProduct contract_chain(std::span<const DenseTensor> cores, std::span<const std::size_t> order);

/// Identity matrix of the given size viewed as a chain product with middle == 1.
ChainProduct identity_chain(std::size_t rank);

/// Entry p of the result is trace(product(:, p, :)).
Vector chain_trace(const ChainProduct& product);

/// Chain cores contracted into the full tensor (TT or TR).
DenseTensor reconstruct_chain(std::span<const DenseTensor> cores);

/// Rows: i_k; columns: the remaining indices in cyclic order k+1, ..., N-1,
/// 0, ..., k-1 with k+1 fastest. Returns, for row-major (i_k fastest)
/// enumeration of that matrix, the linear index into a tensor of `shape`.
std::vector<std::size_t> cyclic_unfold_map(const Shape& shape, std::size_t k);

}  // namespace gtd::detail

#endif  // GTD_SRC_CHAIN_HPP_
