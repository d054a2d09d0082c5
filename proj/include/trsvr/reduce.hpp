#pragma once

#include <span>
#include <vector>

#include "trsvr/types.hpp"

namespace trsvr {

/// Sums vector-valued terms over `indices` along a fixed pairwise tree:
/// blocks of kPairwiseBlock terms are accumulated left to right, then halves
/// are combined recursively. The tree depends only on indices.size(), so the
/// result is bit-reproducible and safe to split across threads later.
inline constexpr std::size_t kPairwiseBlock = 64;

namespace detail {

template <typename AddTerm>
void pairwise_into(std::span<const Index> indices, const AddTerm& add, Vector& out,
                   std::vector<Vector>& scratch, std::size_t depth) {
  out.setZero();
  if (indices.size() <= kPairwiseBlock) {
    for (Index i : indices) add(i, out);
    return;
  }
  const std::size_t mid = indices.size() / 2;
  pairwise_into(indices.first(mid), add, out, scratch, depth + 1);
  Vector& right = scratch[depth];
  pairwise_into(indices.subspan(mid), add, right, scratch, depth + 1);
  out += right;
}

}  // namespace detail

/// `add(i, acc)` must add term i into acc.
template <typename AddTerm>
Vector pairwise_sum(std::span<const Index> indices, Index dim, const AddTerm& add) {
  Vector out = Vector::Zero(dim);
  // One temporary per tree level, allocated up front so references stay valid.
  std::size_t levels = 0;
  for (std::size_t n = indices.size(); n > kPairwiseBlock; n = n - n / 2) ++levels;
  std::vector<Vector> scratch(levels, Vector::Zero(dim));
  detail::pairwise_into(indices, add, out, scratch, 0);
  return out;
}

/// Scalar counterpart of pairwise_sum.
template <typename Term>
double pairwise_sum_scalar(std::span<const Index> indices, const Term& term) {
  if (indices.size() <= kPairwiseBlock) {
    double acc = 0.0;
    for (Index i : indices) acc += term(i);
    return acc;
  }
  const std::size_t mid = indices.size() / 2;
  return pairwise_sum_scalar(indices.first(mid), term) +
         pairwise_sum_scalar(indices.subspan(mid), term);
}

/// 0, 1, ..., n-1
std::vector<Index> iota_indices(Index n);

}  // namespace trsvr
