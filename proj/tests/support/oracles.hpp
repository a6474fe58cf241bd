// Copyright 2026 The bindscore Authors
// SPDX-License-Identifier: Apache-2.0

// Reference computations used only by tests. They deliberately avoid the
// library's code paths: plain loops over std::vector, full sorts, no Eigen.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <vector>

namespace bindscore::oracle {

using Row = std::vector<double>;
using Grid = std::vector<Row>;

inline double cosine(const Row& u, const Row& v) {
  double dot = 0, nu = 0, nv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

inline Grid cosine_grid(const Grid& tokens, const Grid& patches) {
  Grid out(tokens.size(), Row(patches.size()));
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    for (std::size_t j = 0; j < patches.size(); ++j) out[i][j] = cosine(tokens[i], patches[j]);
  }
  return out;
}

/// Indices of the K largest values (lowest index first among equals), via a
/// full stable sort.
inline std::vector<std::size_t> topk(const Row& row, int k) {
  std::vector<std::size_t> idx(row.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return row[a] > row[b]; });
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

/// Mean of the K largest values: sort a copy descending, sum the head.
inline double token_score(Row row, int k) {
  std::sort(row.begin(), row.end(), std::greater<>());
  double sum = 0;
  for (int i = 0; i < k; ++i) sum += row[static_cast<std::size_t>(i)];
  return sum / k;
}

inline double aggregate(const Grid& sim, const std::vector<bool>& mask, int k) {
  double sum = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < sim.size(); ++i) {
    if (!mask[i]) continue;
    sum += token_score(sim[i], k);
    ++n;
  }
  return sum / static_cast<double>(n);
}

}  // namespace bindscore::oracle
