// Copyright 2026 The bindscore Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <string>

#include <json.hpp>

#include "bindscore/alignment.hpp"
#include "bindscore/caption.hpp"
#include "bindscore/embedding.hpp"
#include "bindscore/refinement.hpp"

namespace bindscore {

struct ScoreParams {
  double omega = 0.3;
  int k = 5;
  int p = 5;
  bool include_special_tokens = false;

  /// Throws std::invalid_argument unless 0 <= omega <= 1, k >= 1, p >= 1.
  void validate() const;
  AlignmentParams alignment() const { return {k}; }
  RefinementParams refinement() const { return {p}; }
};

/// Every intermediate score of one image-text pair.
struct ScoreReport {
  std::string image_id;
  std::string text_id;
  double s_base = 0.0;
  double s_refine = 0.0;
  double delta = 0.0;
  double s_local = 0.0;
  double s_global = 0.0;
  double s_final = 0.0;
  ScoreParams params;
};

inline double binding_difference(double s_refine, double s_base) {
  return std::abs(s_refine - s_base);
}

/// cosine(t_eot, v_cls) on the unrefined encodings.
double global_score(const TextEncoding& text, const ImageEmbedding& image);

/// (1 − ω)·s_local + ω·s_global.
double final_score(double s_local, double s_global, double omega);

/// Local token-patch score of `text` against `image` under `params`.
double local_score(const TextEncoding& text, const ImageEmbedding& image, const ScoreParams& params);

/// Full pipeline for one pair: base local score, semantic refinement, refined
/// local score, binding difference, global score and fusion. `structure` must
/// be resolved against `text`.
ScoreReport score_pair(const ImageEmbedding& image, const TextEncoding& text,
                       const CaptionStructure& structure, const ConceptPool& pool,
                       const PhraseEmbeddingTable& table, const ScoreParams& params);

/// {image_id, text_id, s_base, s_refine, delta, s_local, s_global, s_final, omega, k, p}
nlohmann::ordered_json to_json(const ScoreReport& report);

}  // namespace bindscore
