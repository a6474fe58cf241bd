// Copyright 2026 The bindscore Authors
// SPDX-License-Identifier: Apache-2.0

#include "bindscore/alignment.hpp"

namespace bindscore {

double aggregate_score(const SimilarityMatrix& sim, const std::vector<bool>& mask, int k) {
  if (mask.size() != static_cast<std::size_t>(sim.rows())) {
    throw DimensionMismatch("aggregate_score: mask length differs from token count");
  }
  detail::check_k(sim.cols(), k);
  double sum = 0.0;
  std::size_t count = 0;
  for (Eigen::Index i = 0; i < sim.rows(); ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    sum += token_score(sim.values.row(i), k);
    ++count;
  }
  if (count == 0) throw std::invalid_argument("aggregate_score: empty token mask");
  return sum / static_cast<double>(count);
}

std::vector<TokenAlignment> token_alignments(const SimilarityMatrix& sim, int k) {
  std::vector<TokenAlignment> out;
  out.reserve(static_cast<std::size_t>(sim.rows()));
  for (Eigen::Index i = 0; i < sim.rows(); ++i) {
    TokenAlignment a;
    a.token_index = static_cast<std::size_t>(i);
    a.patch_indices = topk_indices(sim.values.row(i), k);
    a.token_score = token_score(sim.values.row(i), k);
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<bool> scoring_mask(const TextEncoding& text, bool include_special_tokens) {
  if (include_special_tokens) return std::vector<bool>(text.content_mask().size(), true);
  return text.content_mask();
}

}  // namespace bindscore
