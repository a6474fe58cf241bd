// Copyright 2026 The bindscore Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bindscore/embedding.hpp"

namespace bindscore {

/// One attribute-object pair (a, k) extracted from a caption.
struct AttrObjPair {
  std::string attribute;
  std::string object;
  CharSpan attr_chars;
  CharSpan obj_chars;
  // Set by resolve_token_spans.
  std::optional<TokenSpan> attr_tokens;
  std::optional<TokenSpan> obj_tokens;

  bool resolved() const noexcept { return attr_tokens.has_value() && obj_tokens.has_value(); }
};

/// Every attribute-object pair found in one caption, in caption order.
struct CaptionStructure {
  std::string caption_id;
  std::string caption;
  std::vector<AttrObjPair> pairs;
  // Pairs removed by resolve_token_spans because their words were not encoded.
  std::size_t dropped_pairs = 0;

  bool resolved() const noexcept;
};

/// Attributes bound to objects other than `pair_index`'s object, with the
/// pair's own attribute removed. Sorted and unique.
std::vector<std::string> negative_attributes(const CaptionStructure& structure,
                                             std::size_t pair_index);

using Lexicon = std::set<std::string>;

/// One lowercase word per line; blank lines and `#` comments ignored.
Lexicon load_lexicon(const std::filesystem::path& path);
Lexicon parse_lexicon(std::string_view text);

/// Reads a JSON-lines pairs file keyed by caption id. Char spans are checked
/// against the caption; token spans are left unresolved.
std::map<std::string, CaptionStructure> load_pairs_file(const std::filesystem::path& path);

/// Parses one pairs-file record (exposed for tests and streaming callers).
CaptionStructure parse_pairs_record(std::string_view json_line);

/// Inverse of load_pairs_file; token spans are not written.
void write_pairs_file(std::ostream& out, std::span<const CaptionStructure> structures);

/// Fallback extractor: an attribute word from `lexicon` followed by a run of up
/// to three plain words (no stopwords, no lexicon words, whitespace-separated)
/// yields one pair. Left to right, first match wins.
CaptionStructure extract_pairs_heuristic(std::string caption_id, std::string caption,
                                         const Lexicon& lexicon);

/// Maps each pair's character spans onto the token intervals of `text`.
/// Pairs whose words are missing from the encoded window are dropped and
/// counted in `dropped_pairs`. Idempotent.
CaptionStructure resolve_token_spans(const CaptionStructure& structure, const TextEncoding& text);

}  // namespace bindscore
