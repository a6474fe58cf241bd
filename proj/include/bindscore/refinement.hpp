// Copyright 2026 The bindscore Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "bindscore/caption.hpp"
#include "bindscore/embedding.hpp"

namespace bindscore {

/// Candidate object vocabulary with blank-context embeddings F(∅, obj).
class ConceptPool {
 public:
  ConceptPool(std::vector<std::string> concepts, Matrix base_embeddings);

  std::size_t size() const noexcept { return concepts_.size(); }
  Eigen::Index dim() const noexcept { return base_.cols(); }
  const std::vector<std::string>& concepts() const noexcept { return concepts_; }
  const Matrix& base_embeddings() const noexcept { return base_; }

  /// Row of F(∅, concept); throws std::out_of_range for unknown concepts.
  Eigen::Ref<const Vector> base(const std::string& concept_name) const;
  bool contains(const std::string& concept_name) const {
    return index_.contains(concept_name);
  }

 private:
  std::vector<std::string> concepts_;
  Matrix base_;
  std::unordered_map<std::string, Eigen::Index> index_;
};

/// Object embeddings F(a, obj) from encoding the phrase "a obj".
class PhraseEmbeddingTable {
 public:
  explicit PhraseEmbeddingTable(Eigen::Index dim) : dim_(dim) {}

  Eigen::Index dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return entries_.size(); }

  /// Throws DimensionMismatch / FormatError on bad vectors, FormatError on duplicates.
  void insert(PhraseKey key, Vector vec);
  const Vector* find(const PhraseKey& key) const;
  const std::map<PhraseKey, Vector>& entries() const noexcept { return entries_; }

 private:
  Eigen::Index dim_;
  std::map<PhraseKey, Vector> entries_;
};

struct RefinementParams {
  int p = 5;
};

struct BindingVectors {
  Vector positive;
  Vector negative;
};

/// The P pool concepts most cosine-similar to `query`, best first; ties keep
/// pool order.
std::vector<std::string> nearest_concepts(const Eigen::Ref<const Vector>& query,
                                          const ConceptPool& pool, int p);

/// Mean over attributes of (1/P) Σ_i [F(a, obj_i) − F(∅, obj_i)]. An empty
/// attribute list gives the zero vector. Missing entries are reported together
/// in a MissingPhraseError.
Vector binding_vector(std::span<const std::string> attributes,
                      std::span<const std::string> neighbors, const PhraseEmbeddingTable& table,
                      const ConceptPool& pool);

/// t_k + (b⁺ − b⁻); equal binding vectors cancel exactly.
template <typename A, typename B, typename C>
Vector refine_object(const Eigen::MatrixBase<A>& object, const Eigen::MatrixBase<B>& positive,
                     const Eigen::MatrixBase<C>& negative) {
  if (object.size() != positive.size() || object.size() != negative.size()) {
    throw DimensionMismatch("refine_object: length mismatch");
  }
  return object + (positive - negative);
}

/// t_a + t_k, where t_k is the unrefined object embedding.
template <typename A, typename B>
Vector refine_attribute(const Eigen::MatrixBase<A>& attribute,
                        const Eigen::MatrixBase<B>& object) {
  if (attribute.size() != object.size()) {
    throw DimensionMismatch("refine_attribute: length mismatch");
  }
  return attribute + object;
}

/// Mean of the token rows in `span`.
Vector span_mean(const Matrix& tokens, const TokenSpan& span);

/// Binding vectors for pair `pair_index` of a resolved structure. The neighbor
/// query is the mean of the object's original token vectors.
BindingVectors pair_binding_vectors(const TextEncoding& text, const CaptionStructure& structure,
                                    std::size_t pair_index, const ConceptPool& pool,
                                    const PhraseEmbeddingTable& table,
                                    const RefinementParams& params);

/// Returns `text` with object tokens shifted by b⁺ − b⁻ and attribute tokens
/// shifted by the original object span mean. Every other token and the EOT
/// vector are untouched. All missing phrase entries across the caption are
/// reported together.
TextEncoding refine_encoding(const TextEncoding& text, const CaptionStructure& structure,
                             const ConceptPool& pool, const PhraseEmbeddingTable& table,
                             const RefinementParams& params);

/// Every (attribute, neighbor) key that refining the given captions will look
/// up, sorted and unique. `texts` supplies the object embeddings used as
/// neighbor queries; structures are resolved internally.
std::vector<PhraseKey> phrase_requests(std::span<const CaptionStructure> structures,
                                       const std::map<std::string, TextEncoding>& texts,
                                       const ConceptPool& pool, const RefinementParams& params);

/// Writes requests as JSON lines {"attribute": ..., "object": ...}.
void write_phrase_requests(std::ostream& out, std::span<const PhraseKey> requests);
std::size_t emit_phrase_requests(const std::filesystem::path& path,
                                 std::span<const CaptionStructure> structures,
                                 const std::map<std::string, TextEncoding>& texts,
                                 const ConceptPool& pool, const RefinementParams& params);

}  // namespace bindscore
