// Copyright 2026 The bindscore Authors
// SPDX-License-Identifier: Apache-2.0

// Planted-binding benchmark: embeddings built from orthogonal attribute and
// object directions so that the correct answer is known by construction.
//
// Each case is an image with two colored objects and two captions,
// "the A1 O1 and the A2 O2" (positive) and the attribute-swapped
// "the A2 O1 and the A1 O2" (negative). Patches of object O carry the
// direction e_O + e_A of the attribute drawn on it, an attribute token bound
// to O in the caption carries e_A + e_O, and an object token carries
// e_O + 0.5 e_A. EOT and CLS vectors are bags of all four words, so the
// global score cannot separate the captions.
//
// In the shuffled control the attributes drawn on the two objects are swapped
// for exactly half of the cases (chosen by a seeded shuffle), which leaves
// the captions unchanged and makes the planted answer uninformative.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "bindscore/caption.hpp"
#include "bindscore/embedding.hpp"
#include "bindscore/harness.hpp"
#include "bindscore/refinement.hpp"

namespace bindscore::synthetic {

struct Options {
  std::size_t cases = 100;
  std::uint64_t seed = 20240917;
  bool shuffled_control = false;
  // Per-dimension standard deviation of the isotropic noise added to every vector.
  double noise = 0.02;
};

inline constexpr Eigen::Index kDim = 64;
inline constexpr Eigen::Index kPatchesPerObject = 6;
inline constexpr Eigen::Index kBackgroundPatches = 4;

struct Benchmark {
  std::vector<ImageEmbedding> images;
  std::vector<TextEncoding> texts;
  std::vector<CaptionStructure> structures;  // unresolved, keyed by text id
  ConceptPool pool;
  PhraseEmbeddingTable table;
  std::vector<PairwiseCase> cases;
  RetrievalSet retrieval;
};

Benchmark make_planted_binding(const Options& options);

/// Scorer over all of a benchmark's resources.
Scorer make_scorer(const Benchmark& bench);

/// Writes images/, texts/, pool/, phrases/ bundles plus pairs.jsonl,
/// cases.jsonl, retrieval.jsonl and gallery.txt under `dir`.
void write(const std::filesystem::path& dir, const Benchmark& bench);

}  // namespace bindscore::synthetic
