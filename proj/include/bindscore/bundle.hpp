// Copyright 2026 The bindscore Authors
// SPDX-License-Identifier: Apache-2.0

// Embedding bundles: a directory holding manifest.json plus raw little-endian
// float32 blob files. The manifest records
//
//   format_version  1
//   kind            "image" | "text" | "concept_pool" | "phrase_table"
//   dim             vector width d
//   dtype           "f32le"
//   items           one record per image / caption / concept / phrase
//
// Vectors are referenced as {file, byte_offset} and stored row-major. Readers
// ignore unknown fields such as exporter provenance.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "bindscore/embedding.hpp"
#include "bindscore/refinement.hpp"

namespace bindscore::bundle {

inline constexpr int kFormatVersion = 1;
inline constexpr const char* kManifestName = "manifest.json";
inline constexpr const char* kDefaultBlob = "data.bin";

enum class Kind { kImage, kText, kConceptPool, kPhraseTable };

const char* to_string(Kind kind);

std::vector<ImageEmbedding> read_images(const std::filesystem::path& dir);
std::vector<TextEncoding> read_texts(const std::filesystem::path& dir);
ConceptPool read_concept_pool(const std::filesystem::path& dir);
PhraseEmbeddingTable read_phrase_table(const std::filesystem::path& dir);

/// Keyed by id; duplicate ids are rejected by the readers.
std::map<std::string, ImageEmbedding> index_images(std::vector<ImageEmbedding> images);
std::map<std::string, TextEncoding> index_texts(std::vector<TextEncoding> texts);

// Writers emit one blob file (data.bin) next to the manifest. Values are
// narrowed to float32. `extra` is merged into the manifest's top level.
void write_images(const std::filesystem::path& dir, std::span<const ImageEmbedding> images,
                  const nlohmann::json& extra = nlohmann::json::object());
void write_texts(const std::filesystem::path& dir, std::span<const TextEncoding> texts,
                 const nlohmann::json& extra = nlohmann::json::object());
void write_concept_pool(const std::filesystem::path& dir, const ConceptPool& pool,
                        const nlohmann::json& extra = nlohmann::json::object());
void write_phrase_table(const std::filesystem::path& dir, const PhraseEmbeddingTable& table,
                        const nlohmann::json& extra = nlohmann::json::object());

}  // namespace bindscore::bundle
