// Copyright 2026 The bindscore Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bindscore/caption.hpp"
#include "bindscore/embedding.hpp"
#include "bindscore/refinement.hpp"
#include "bindscore/scoring.hpp"

namespace bindscore {

/// Which score field a benchmark compares. The four modes form the component
/// ablation: global CLS/EOT cosine, unrefined local score, refined local
/// score, and the fused final score.
enum class Mode { kGlobalOnly, kBaseLocal, kRefined, kFull };

inline constexpr Mode kAllModes[] = {Mode::kGlobalOnly, Mode::kBaseLocal, Mode::kRefined,
                                     Mode::kFull};

std::string_view to_string(Mode mode);
/// "global-only" | "base-local" | "refined" | "full"
Mode parse_mode(std::string_view name);

double select_score(const ScoreReport& report, Mode mode);

/// Loaded datasets plus refinement resources, shared read-only by all workers.
/// Caption structures are resolved against their encodings at construction;
/// texts without a structure get an empty one.
class Scorer {
 public:
  Scorer(std::map<std::string, ImageEmbedding> images, std::map<std::string, TextEncoding> texts,
         const std::map<std::string, CaptionStructure>& structures, ConceptPool pool,
         PhraseEmbeddingTable table);

  ScoreReport score(const std::string& image_id, const std::string& text_id,
                    const ScoreParams& params) const;
  /// Only what `mode` needs: global-only never touches refinement resources.
  double score(const std::string& image_id, const std::string& text_id, const ScoreParams& params,
               Mode mode) const;

  const ImageEmbedding& image(const std::string& id) const;
  const TextEncoding& text(const std::string& id) const;
  const CaptionStructure& structure(const std::string& text_id) const;
  const ConceptPool& pool() const noexcept { return pool_; }
  const PhraseEmbeddingTable& table() const noexcept { return table_; }

  bool has_image(const std::string& id) const { return images_.contains(id); }
  bool has_text(const std::string& id) const { return texts_.contains(id); }
  std::vector<std::string> image_ids() const;
  /// Pairs dropped while resolving token spans (truncated captions).
  std::size_t dropped_pairs() const noexcept { return dropped_pairs_; }

 private:
  std::map<std::string, ImageEmbedding> images_;
  std::map<std::string, TextEncoding> texts_;
  std::map<std::string, CaptionStructure> structures_;
  ConceptPool pool_;
  PhraseEmbeddingTable table_;
  std::size_t dropped_pairs_ = 0;
};

struct PairwiseCase {
  std::string image_id;
  std::string positive_text_id;
  std::string negative_text_id;
};

struct CaseRecord {
  PairwiseCase item;
  double positive = 0.0;
  double negative = 0.0;
  double margin = 0.0;
  bool correct = false;
};

struct RetrievalQuery {
  std::string text_id;
  std::vector<std::string> gold_image_ids;
};

struct RetrievalSet {
  std::vector<RetrievalQuery> queries;
  std::vector<std::string> gallery;
};

struct QueryRecord {
  std::string text_id;
  std::size_t gold_rank = 0;  // 1-based rank of the best-ranked gold image
  bool hit = false;
};

struct BenchResult {
  std::string metric;  // "pairwise_accuracy" or "recall@K"
  Mode mode = Mode::kFull;
  ScoreParams params;
  std::size_t correct = 0;
  std::size_t total = 0;
  double value = 0.0;  // correct / total
  std::vector<CaseRecord> cases;
  std::vector<QueryRecord> queries;
};

/// Runs `fn(i)` for i in [0, n) on up to `workers` threads. Exceptions are
/// collected; missing phrase keys from all items are merged into one
/// MissingPhraseError, otherwise the lowest-index failure is rethrown.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

/// A case is correct iff the positive caption scores strictly higher.
BenchResult pairwise_accuracy(const Scorer& scorer, std::span<const PairwiseCase> cases,
                              const ScoreParams& params, Mode mode, std::size_t workers = 1);

/// Recall@K for each K in `ks` (ascending), ranking the gallery by s_final
/// with ties broken by image id.
std::vector<BenchResult> retrieval_recall(const Scorer& scorer, const RetrievalSet& set,
                                          const ScoreParams& params, std::span<const int> ks,
                                          std::size_t workers = 1);

/// Full-mode pairwise accuracy over the K x ω grid, K-major.
std::vector<BenchResult> sweep(const Scorer& scorer, std::span<const PairwiseCase> cases,
                               const ScoreParams& base, std::span<const int> k_values,
                               std::span<const double> omega_values, std::size_t workers = 1);

/// Pairwise accuracy under each of the four modes.
std::vector<BenchResult> ablation(const Scorer& scorer, std::span<const PairwiseCase> cases,
                                  const ScoreParams& params, std::size_t workers = 1);

// Dataset manifests (JSON lines).
std::vector<PairwiseCase> load_cases(const std::filesystem::path& path);
/// `gallery_path` holds one image id per line; empty path means "use
/// `default_gallery`".
RetrievalSet load_retrieval(const std::filesystem::path& path,
                            const std::filesystem::path& gallery_path,
                            const std::vector<std::string>& default_gallery);
void validate(const Scorer& scorer, std::span<const PairwiseCase> cases);
void validate(const Scorer& scorer, const RetrievalSet& set);

void write_cases(std::ostream& out, std::span<const PairwiseCase> cases);
void write_retrieval(std::ostream& out, const RetrievalSet& set);

// Result serialization. Output depends only on the results, never on worker
// count or timing.
void write_results_csv(std::ostream& out, std::span<const BenchResult> results);
void write_results_jsonl(std::ostream& out, std::span<const BenchResult> results);
void write_records_jsonl(std::ostream& out, const BenchResult& result);

}  // namespace bindscore
