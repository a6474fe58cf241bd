// Copyright 2026 The bindscore Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <initializer_list>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "bindscore/caption.hpp"
#include "bindscore/embedding.hpp"
#include "bindscore/refinement.hpp"
#include "bindscore/scoring.hpp"

namespace bindscore::fixture {

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

inline Matrix rows(std::initializer_list<std::initializer_list<double>> r) {
  Matrix out(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& row : r) {
    Eigen::Index j = 0;
    for (double x : row) out(i, j++) = x;
    ++i;
  }
  return out;
}

inline Matrix random_rows(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d) {
  std::normal_distribution<double> normal;
  Matrix m(n, d);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

/// Text whose tokens are all content words named w0, w1, ... separated by
/// single spaces.
inline TextEncoding plain_text(const std::string& id, const Matrix& tokens, const Vector& eot) {
  std::string caption;
  std::vector<std::string> texts;
  std::vector<CharSpan> spans;
  for (Eigen::Index i = 0; i < tokens.rows(); ++i) {
    if (i > 0) caption += ' ';
    const std::string w = "w" + std::to_string(i);
    spans.push_back({caption.size(), caption.size() + w.size()});
    caption += w;
    texts.push_back(w);
  }
  return TextEncoding(id, caption, eot, tokens, texts, spans,
                      std::vector<bool>(static_cast<std::size_t>(tokens.rows()), true));
}

// ---------------------------------------------------------------------------
// Hand-traced 2-d fixture (docs/hand_trace.md).
//
// Caption "red cube" with tokens <start> red cube <end>; the two special
// tokens are masked. Patches e1, e2. Pool {cube: e1, ball: e2}; phrase table
// F(red, cube) = (1, 0.5), F(red, ball) = (0.5, 1). K = 1, P = 2, ω = 0.3.

inline ImageEmbedding toy_image() {
  return ImageEmbedding("toy_img", vec({2, 1}), rows({{1, 0}, {0, 1}}));
}

inline TextEncoding toy_text() {
  return TextEncoding("toy_txt", "red cube", vec({1, 2}),
                      rows({{1, -1}, {1, 1}, {2, 1}, {-1, 1}}),
                      {"<start>", "red", "cube", "<end>"}, {{0, 0}, {0, 3}, {4, 8}, {8, 8}},
                      {false, true, true, false});
}

inline CaptionStructure toy_structure() {
  CaptionStructure s;
  s.caption_id = "toy_txt";
  s.caption = "red cube";
  s.pairs.push_back({"red", "cube", {0, 3}, {4, 8}, {}, {}});
  return s;
}

inline ConceptPool toy_pool() { return ConceptPool({"cube", "ball"}, rows({{1, 0}, {0, 1}})); }

inline PhraseEmbeddingTable toy_table() {
  PhraseEmbeddingTable t(2);
  t.insert({"red", "cube"}, vec({1, 0.5}));
  t.insert({"red", "ball"}, vec({0.5, 1}));
  return t;
}

inline ScoreParams toy_params() {
  ScoreParams p;
  p.k = 1;
  p.p = 2;
  p.omega = 0.3;
  return p;
}

/// Values computed by hand (closed forms in docs/hand_trace.md).
struct ToyExpected {
  static constexpr double s_base = 0.8007669860932316;     // (1/√2 + 2/√5) / 2
  static constexpr double s_refine = 0.8531037852296908;   // (3/√13 + 9/√106) / 2
  static constexpr double delta = 0.05233679913645917;
  static constexpr double s_local = 0.9054405843661499;
  static constexpr double s_global = 0.8;                   // 4/5
  static constexpr double s_final = 0.8738084090563049;
};

}  // namespace bindscore::fixture
