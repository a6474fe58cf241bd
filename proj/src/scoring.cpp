// Copyright 2026 The bindscore Authors
// SPDX-License-Identifier: Apache-2.0

#include "bindscore/scoring.hpp"

#include <stdexcept>

namespace bindscore {

void ScoreParams::validate() const {
  if (!(omega >= 0.0 && omega <= 1.0)) {
    throw std::invalid_argument("omega must lie in [0, 1], got " + std::to_string(omega));
  }
  if (k < 1) throw std::invalid_argument("K must be >= 1");
  if (p < 1) throw std::invalid_argument("P must be >= 1");
}

double global_score(const TextEncoding& text, const ImageEmbedding& image) {
  if (text.dim() != image.dim()) {
    throw DimensionMismatch("global_score: text " + text.id() + " and image " + image.id() +
                            " differ in dim");
  }
  return cosine(text.eot(), image.cls());
}

double final_score(double s_local, double s_global, double omega) {
  if (!(omega >= 0.0 && omega <= 1.0)) {
    throw std::invalid_argument("final_score: omega outside [0, 1]");
  }
  return (1.0 - omega) * s_local + omega * s_global;
}

double local_score(const TextEncoding& text, const ImageEmbedding& image,
                   const ScoreParams& params) {
  return aggregate_score(similarity_matrix(text, image),
                         scoring_mask(text, params.include_special_tokens), params.k);
}

ScoreReport score_pair(const ImageEmbedding& image, const TextEncoding& text,
                       const CaptionStructure& structure, const ConceptPool& pool,
                       const PhraseEmbeddingTable& table, const ScoreParams& params) {
  params.validate();
  ScoreReport r;
  r.image_id = image.id();
  r.text_id = text.id();
  r.params = params;

  r.s_global = global_score(text, image);
  r.s_base = local_score(text, image, params);

  const TextEncoding refined = refine_encoding(text, structure, pool, table, params.refinement());
  r.s_refine = local_score(refined, image, params);

  r.delta = binding_difference(r.s_refine, r.s_base);
  r.s_local = r.s_refine + r.delta;
  r.s_final = final_score(r.s_local, r.s_global, params.omega);
  return r;
}

nlohmann::ordered_json to_json(const ScoreReport& r) {
  return {{"image_id", r.image_id}, {"text_id", r.text_id},   {"s_base", r.s_base},
          {"s_refine", r.s_refine}, {"delta", r.delta},       {"s_local", r.s_local},
          {"s_global", r.s_global}, {"s_final", r.s_final},   {"omega", r.params.omega},
          {"k", r.params.k},        {"p", r.params.p}};
}

}  // namespace bindscore
