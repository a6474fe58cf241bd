// Copyright 2026 The bindscore Authors
// SPDX-License-Identifier: Apache-2.0

#include "bindscore/refinement.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <utility>

#include <json.hpp>

namespace bindscore {

ConceptPool::ConceptPool(std::vector<std::string> concepts, Matrix base_embeddings)
    : concepts_(std::move(concepts)), base_(std::move(base_embeddings)) {
  if (concepts_.empty()) throw FormatError("concept pool is empty");
  if (static_cast<Eigen::Index>(concepts_.size()) != base_.rows() || base_.cols() < 1) {
    throw DimensionMismatch("concept pool: embedding rows differ from concept count");
  }
  if (!base_.allFinite()) throw FormatError("concept pool: non-finite embedding");
  for (Eigen::Index i = 0; i < base_.rows(); ++i) {
    const auto& name = concepts_[static_cast<std::size_t>(i)];
    if (base_.row(i).squaredNorm() == 0.0) {
      throw DegenerateInput("concept pool: zero embedding for '" + name + "'");
    }
    if (!index_.emplace(name, i).second) {
      throw FormatError("concept pool: duplicate concept '" + name + "'");
    }
  }
}

Eigen::Ref<const Vector> ConceptPool::base(const std::string& concept_name) const {
  const auto it = index_.find(concept_name);
  if (it == index_.end()) throw std::out_of_range("unknown concept '" + concept_name + "'");
  return base_.row(it->second).transpose();
}

void PhraseEmbeddingTable::insert(PhraseKey key, Vector vec) {
  if (vec.size() != dim_) {
    throw DimensionMismatch("phrase table: vector for (" + key.attribute + ", " + key.object +
                            ") has wrong length");
  }
  if (!vec.allFinite()) {
    throw FormatError("phrase table: non-finite vector for (" + key.attribute + ", " +
                      key.object + ")");
  }
  const std::string a = key.attribute;
  const std::string o = key.object;
  if (!entries_.emplace(std::move(key), std::move(vec)).second) {
    throw FormatError("phrase table: duplicate entry (" + a + ", " + o + ")");
  }
}

const Vector* PhraseEmbeddingTable::find(const PhraseKey& key) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<std::string> nearest_concepts(const Eigen::Ref<const Vector>& query,
                                          const ConceptPool& pool, int p) {
  if (p < 1 || static_cast<std::size_t>(p) > pool.size()) {
    throw std::invalid_argument("nearest_concepts: P=" + std::to_string(p) + " outside [1, " +
                                std::to_string(pool.size()) + "]");
  }
  if (query.size() != pool.dim()) {
    throw DimensionMismatch("nearest_concepts: query length differs from pool dim");
  }
  const Matrix q = query.transpose();
  const Matrix sims = cosine_matrix(q, pool.base_embeddings());
  std::vector<Eigen::Index> order(pool.size());
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::partial_sort(order.begin(), order.begin() + p, order.end(),
                    [&sims](Eigen::Index a, Eigen::Index b) {
                      const double va = sims(0, a);
                      const double vb = sims(0, b);
                      return va > vb || (va == vb && a < b);
                    });
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) out.push_back(pool.concepts()[static_cast<std::size_t>(order[i])]);
  return out;
}

Vector binding_vector(std::span<const std::string> attributes,
                      std::span<const std::string> neighbors, const PhraseEmbeddingTable& table,
                      const ConceptPool& pool) {
  if (neighbors.empty()) throw std::invalid_argument("binding_vector: empty neighbor list");
  if (table.dim() != pool.dim()) {
    throw DimensionMismatch("binding_vector: phrase table and concept pool dims differ");
  }
  Vector total = Vector::Zero(pool.dim());
  if (attributes.empty()) return total;

  std::vector<PhraseKey> missing;
  for (const auto& attribute : attributes) {
    Vector shift = Vector::Zero(pool.dim());
    for (const auto& object : neighbors) {
      PhraseKey key{attribute, object};
      const Vector* with_attr = table.find(key);
      if (with_attr == nullptr) {
        missing.push_back(std::move(key));
        continue;
      }
      shift += *with_attr - pool.base(object);
    }
    total += shift / static_cast<double>(neighbors.size());
  }
  if (!missing.empty()) {
    std::sort(missing.begin(), missing.end());
    missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
    throw MissingPhraseError(std::move(missing));
  }
  return total / static_cast<double>(attributes.size());
}

Vector span_mean(const Matrix& tokens, const TokenSpan& span) {
  if (span.empty() || span.end > static_cast<std::size_t>(tokens.rows())) {
    throw std::out_of_range("span_mean: token span out of range");
  }
  const auto rows = static_cast<Eigen::Index>(span.size());
  return tokens.middleRows(static_cast<Eigen::Index>(span.begin), rows).colwise().mean().transpose();
}

namespace {

void require_resolved(const CaptionStructure& structure, const TextEncoding& text) {
  if (!structure.resolved()) {
    throw std::invalid_argument("caption " + structure.caption_id + " has unresolved token spans");
  }
  for (const auto& p : structure.pairs) {
    if (p.attr_tokens->end > static_cast<std::size_t>(text.num_tokens()) ||
        p.obj_tokens->end > static_cast<std::size_t>(text.num_tokens())) {
      throw std::out_of_range("caption " + structure.caption_id +
                              ": token span beyond encoded tokens");
    }
  }
}

// Neighbor concepts for one object, or nothing when its span mean is the zero
// vector (no direction to query).
std::vector<std::string> object_neighbors(const Vector& object_mean, const ConceptPool& pool,
                                          const RefinementParams& params) {
  if (object_mean.squaredNorm() == 0.0) return {};
  return nearest_concepts(object_mean, pool, params.p);
}

}  // namespace

BindingVectors pair_binding_vectors(const TextEncoding& text, const CaptionStructure& structure,
                                    std::size_t pair_index, const ConceptPool& pool,
                                    const PhraseEmbeddingTable& table,
                                    const RefinementParams& params) {
  require_resolved(structure, text);
  const AttrObjPair& pair = structure.pairs.at(pair_index);
  const Vector object_mean = span_mean(text.tokens(), *pair.obj_tokens);
  const auto neighbors = object_neighbors(object_mean, pool, params);
  if (neighbors.empty()) {
    return {Vector::Zero(text.dim()), Vector::Zero(text.dim())};
  }
  const std::vector<std::string> positive{pair.attribute};
  const auto negative = negative_attributes(structure, pair_index);

  std::vector<PhraseKey> missing;
  BindingVectors out;
  try {
    out.positive = binding_vector(positive, neighbors, table, pool);
  } catch (const MissingPhraseError& e) {
    missing.insert(missing.end(), e.keys().begin(), e.keys().end());
  }
  try {
    out.negative = binding_vector(negative, neighbors, table, pool);
  } catch (const MissingPhraseError& e) {
    missing.insert(missing.end(), e.keys().begin(), e.keys().end());
  }
  if (!missing.empty()) {
    std::sort(missing.begin(), missing.end());
    missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
    throw MissingPhraseError(std::move(missing));
  }
  return out;
}

TextEncoding refine_encoding(const TextEncoding& text, const CaptionStructure& structure,
                             const ConceptPool& pool, const PhraseEmbeddingTable& table,
                             const RefinementParams& params) {
  require_resolved(structure, text);
  if (structure.pairs.empty()) return text;

  const Matrix& original = text.tokens();
  Matrix refined = original;
  std::vector<PhraseKey> missing;
  for (std::size_t m = 0; m < structure.pairs.size(); ++m) {
    const AttrObjPair& pair = structure.pairs[m];
    BindingVectors b;
    try {
      b = pair_binding_vectors(text, structure, m, pool, table, params);
    } catch (const MissingPhraseError& e) {
      missing.insert(missing.end(), e.keys().begin(), e.keys().end());
      continue;
    }
    const Vector object_mean = span_mean(original, *pair.obj_tokens);
    for (std::size_t i = pair.obj_tokens->begin; i < pair.obj_tokens->end; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      refined.row(r) = refine_object(refined.row(r).transpose(), b.positive, b.negative).transpose();
    }
    for (std::size_t i = pair.attr_tokens->begin; i < pair.attr_tokens->end; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      refined.row(r) = refine_attribute(refined.row(r).transpose(), object_mean).transpose();
    }
  }
  if (!missing.empty()) {
    std::sort(missing.begin(), missing.end());
    missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
    throw MissingPhraseError(std::move(missing));
  }
  return text.with_tokens(std::move(refined));
}

std::vector<PhraseKey> phrase_requests(std::span<const CaptionStructure> structures,
                                       const std::map<std::string, TextEncoding>& texts,
                                       const ConceptPool& pool, const RefinementParams& params) {
  std::set<PhraseKey> keys;
  for (const auto& raw : structures) {
    if (raw.pairs.empty()) continue;
    const auto it = texts.find(raw.caption_id);
    if (it == texts.end()) {
      throw std::invalid_argument("phrase_requests: no encoding for caption " + raw.caption_id);
    }
    const TextEncoding& text = it->second;
    const CaptionStructure s = raw.resolved() ? raw : resolve_token_spans(raw, text);
    for (std::size_t m = 0; m < s.pairs.size(); ++m) {
      const Vector object_mean = span_mean(text.tokens(), *s.pairs[m].obj_tokens);
      const auto neighbors = object_neighbors(object_mean, pool, params);
      auto attributes = negative_attributes(s, m);
      attributes.push_back(s.pairs[m].attribute);
      for (const auto& a : attributes) {
        for (const auto& o : neighbors) keys.insert(PhraseKey{a, o});
      }
    }
  }
  return {keys.begin(), keys.end()};
}

void write_phrase_requests(std::ostream& out, std::span<const PhraseKey> requests) {
  for (const auto& k : requests) {
    out << nlohmann::json{{"attribute", k.attribute}, {"object", k.object}}.dump() << '\n';
  }
}

std::size_t emit_phrase_requests(const std::filesystem::path& path,
                                 std::span<const CaptionStructure> structures,
                                 const std::map<std::string, TextEncoding>& texts,
                                 const ConceptPool& pool, const RefinementParams& params) {
  const auto requests = phrase_requests(structures, texts, pool, params);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_phrase_requests(out, requests);
  if (!out) throw std::runtime_error("write failed: " + path.string());
  return requests.size();
}

}  // namespace bindscore
