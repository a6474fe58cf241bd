// Copyright 2026 The bindscore Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bindscore/embedding.hpp"

namespace bindscore {

struct AlignmentParams {
  int k = 5;
};

/// Top-K patch set of one token and its pooled score.
struct TokenAlignment {
  std::size_t token_index = 0;
  std::vector<Eigen::Index> patch_indices;
  double token_score = 0.0;
};

namespace detail {

inline void check_k(Eigen::Index n, int k) {
  if (k < 1 || k > n) {
    throw std::invalid_argument("top-k: K=" + std::to_string(k) + " outside [1, " +
                                std::to_string(n) + "]");
  }
}

}  // namespace detail

/// Indices of the K largest entries of `row`, largest first. Equal values are
/// ordered by lower index first.
template <typename Derived>
std::vector<Eigen::Index> topk_indices(const Eigen::DenseBase<Derived>& row, int k) {
  const Eigen::Index n = row.size();
  detail::check_k(n, k);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  const auto before = [&row](Eigen::Index a, Eigen::Index b) {
    const auto va = row(a);
    const auto vb = row(b);
    return va > vb || (va == vb && a < b);
  };
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), before);
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

/// Mean of the K largest entries, summed largest first.
template <typename Derived>
typename Derived::Scalar token_score(const Eigen::DenseBase<Derived>& row, int k) {
  using Scalar = typename Derived::Scalar;
  Scalar sum(0);
  for (Eigen::Index j : topk_indices(row, k)) sum += row(j);
  return sum / Scalar(k);
}

/// Mean token score over rows with mask == true (the local score S_base when
/// applied to original tokens). Throws if no row is selected.
double aggregate_score(const SimilarityMatrix& sim, const std::vector<bool>& mask, int k);

/// Per-token alignments for every row (masked rows included, flagged by the
/// caller's mask).
std::vector<TokenAlignment> token_alignments(const SimilarityMatrix& sim, int k);

/// Mask used for aggregation: the content mask, or all-true when special
/// tokens are included.
std::vector<bool> scoring_mask(const TextEncoding& text, bool include_special_tokens);

}  // namespace bindscore
