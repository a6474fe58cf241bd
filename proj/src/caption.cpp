// Copyright 2026 The bindscore Authors
// SPDX-License-Identifier: Apache-2.0

#include "bindscore/caption.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace bindscore {

namespace {

using nlohmann::json;

const std::set<std::string, std::less<>>& stopwords() {
  static const std::set<std::string, std::less<>> words = {
      "a",     "an",   "the",  "and",   "or",     "but",  "of",    "on",    "in",
      "into",  "onto", "at",   "to",    "by",     "for",  "from",  "with",  "without",
      "near",  "next", "over", "under", "above",  "below", "behind", "beside", "between",
      "is",    "are",  "was",  "were",  "be",     "being", "has",   "have",  "its",
      "their", "his",  "her",  "this",  "that",   "these", "those", "there", "here",
      "while", "some", "two",  "three", "one",    "who",   "which", "as",    "it",
      "they",  "he",   "she",  "left",  "right",  "front", "top",   "bottom", "sitting",
      "standing", "holding", "wearing", "parked", "lying", "made",
  };
  return words;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool is_word_char(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) != 0;
}

struct Word {
  CharSpan span;
  std::string text;   // lowercased
  bool joined_by_space = false;  // only whitespace separates it from the previous word
};

std::vector<Word> split_words(const std::string& caption) {
  std::vector<Word> words;
  std::size_t i = 0;
  std::size_t prev_end = 0;
  while (i < caption.size()) {
    if (!is_word_char(caption[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    // Letters with internal hyphens or apostrophes form one word.
    while (j < caption.size() &&
           (is_word_char(caption[j]) ||
            ((caption[j] == '-' || caption[j] == '\'') && j + 1 < caption.size() &&
             is_word_char(caption[j + 1])))) {
      ++j;
    }
    Word w;
    w.span = {i, j};
    w.text = lower(std::string_view(caption).substr(i, j - i));
    w.joined_by_space = !words.empty() && std::all_of(caption.begin() + static_cast<long>(prev_end),
                                                      caption.begin() + static_cast<long>(i),
                                                      [](unsigned char c) { return std::isspace(c); });
    words.push_back(std::move(w));
    prev_end = j;
    i = j;
  }
  return words;
}

CharSpan read_span(const json& j, const std::string& field) {
  const auto& v = j.at(field);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_unsigned() || !v[1].is_number_unsigned()) {
    throw FormatError(field + " must be [begin, end] with non-negative integers");
  }
  return CharSpan{v[0].get<std::size_t>(), v[1].get<std::size_t>()};
}

void check_span(const CharSpan& span, const std::string& word, const std::string& caption,
                const std::string& what) {
  if (span.empty() || span.end > caption.size()) {
    throw FormatError(what + " span [" + std::to_string(span.begin) + ", " +
                      std::to_string(span.end) + ") out of range for caption of length " +
                      std::to_string(caption.size()));
  }
  if (caption.compare(span.begin, span.end - span.begin, word) != 0) {
    throw FormatError(what + " span does not match the word '" + word + "'");
  }
}

// Minimal content-token interval covering `span`; nullopt when the span is not
// (fully) inside the encoded window.
std::optional<TokenSpan> cover(const CharSpan& span, const TextEncoding& text) {
  const auto& spans = text.char_spans();
  const auto& mask = text.content_mask();
  std::optional<std::size_t> first;
  std::size_t last = 0;
  std::size_t window_end = 0;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    if (!mask[i]) continue;
    window_end = std::max(window_end, spans[i].end);
    if (spans[i].intersects(span)) {
      if (!first) first = i;
      last = i;
    }
  }
  if (!first || span.end > window_end) return std::nullopt;
  for (std::size_t i = *first; i <= last; ++i) {
    if (!mask[i]) return std::nullopt;
  }
  return TokenSpan{*first, last + 1};
}

}  // namespace

bool CaptionStructure::resolved() const noexcept {
  return std::all_of(pairs.begin(), pairs.end(), [](const AttrObjPair& p) { return p.resolved(); });
}

std::vector<std::string> negative_attributes(const CaptionStructure& structure,
                                             std::size_t pair_index) {
  const AttrObjPair& self = structure.pairs.at(pair_index);
  std::set<std::string> out;
  for (const auto& other : structure.pairs) {
    if (other.object != self.object && other.attribute != self.attribute) {
      out.insert(other.attribute);
    }
  }
  return {out.begin(), out.end()};
}

Lexicon parse_lexicon(std::string_view text) {
  Lexicon lex;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    lex.insert(lower(std::string_view(line).substr(b, e - b + 1)));
  }
  return lex;
}

Lexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open lexicon " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_lexicon(buf.str());
}

CaptionStructure parse_pairs_record(std::string_view json_line) {
  json j;
  try {
    j = json::parse(json_line);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("malformed JSON: ") + e.what());
  }
  try {
    CaptionStructure s;
    s.caption_id = j.at("caption_id").get<std::string>();
    s.caption = j.at("caption").get<std::string>();
    for (const auto& p : j.at("pairs")) {
      AttrObjPair pair;
      pair.attribute = p.at("attribute").get<std::string>();
      pair.object = p.at("object").get<std::string>();
      pair.attr_chars = read_span(p, "attr_char_span");
      pair.obj_chars = read_span(p, "obj_char_span");
      if (pair.attribute == pair.object) {
        throw FormatError("attribute equals object ('" + pair.attribute + "')");
      }
      check_span(pair.attr_chars, pair.attribute, s.caption, "attribute");
      check_span(pair.obj_chars, pair.object, s.caption, "object");
      if (pair.attr_chars.intersects(pair.obj_chars)) {
        throw FormatError("attribute and object spans overlap");
      }
      s.pairs.push_back(std::move(pair));
    }
    return s;
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad pairs record: ") + e.what());
  }
}

std::map<std::string, CaptionStructure> load_pairs_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open pairs file " + path.string());
  std::map<std::string, CaptionStructure> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    CaptionStructure s;
    try {
      s = parse_pairs_record(line);
    } catch (const FormatError& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    auto id = s.caption_id;
    if (!out.emplace(id, std::move(s)).second) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) +
                        ": duplicate caption_id " + id);
    }
  }
  return out;
}

void write_pairs_file(std::ostream& out, std::span<const CaptionStructure> structures) {
  for (const auto& s : structures) {
    nlohmann::ordered_json pairs = nlohmann::ordered_json::array();
    for (const auto& p : s.pairs) {
      pairs.push_back({{"attribute", p.attribute},
                       {"object", p.object},
                       {"attr_char_span", {p.attr_chars.begin, p.attr_chars.end}},
                       {"obj_char_span", {p.obj_chars.begin, p.obj_chars.end}}});
    }
    out << nlohmann::ordered_json{{"caption_id", s.caption_id},
                                  {"caption", s.caption},
                                  {"pairs", std::move(pairs)}}
               .dump()
        << '\n';
  }
}

CaptionStructure extract_pairs_heuristic(std::string caption_id, std::string caption,
                                         const Lexicon& lexicon) {
  CaptionStructure s;
  s.caption_id = std::move(caption_id);
  s.caption = std::move(caption);
  const auto words = split_words(s.caption);
  const auto plain = [&](const Word& w) {
    return !lexicon.contains(w.text) && !stopwords().contains(w.text);
  };
  constexpr std::size_t kMaxObjectWords = 3;

  std::size_t i = 0;
  while (i < words.size()) {
    if (!lexicon.contains(words[i].text)) {
      ++i;
      continue;
    }
    std::size_t end = i + 1;
    while (end < words.size() && end - (i + 1) < kMaxObjectWords && words[end].joined_by_space &&
           plain(words[end])) {
      ++end;
    }
    if (end == i + 1) {
      ++i;
      continue;
    }
    AttrObjPair p;
    p.attr_chars = words[i].span;
    p.obj_chars = {words[i + 1].span.begin, words[end - 1].span.end};
    p.attribute = s.caption.substr(p.attr_chars.begin, p.attr_chars.end - p.attr_chars.begin);
    p.object = s.caption.substr(p.obj_chars.begin, p.obj_chars.end - p.obj_chars.begin);
    s.pairs.push_back(std::move(p));
    i = end;
  }
  return s;
}

CaptionStructure resolve_token_spans(const CaptionStructure& structure, const TextEncoding& text) {
  if (structure.caption != text.caption()) {
    throw std::invalid_argument("resolve_token_spans: caption of " + structure.caption_id +
                                " differs from encoded caption of " + text.id());
  }
  CaptionStructure out;
  out.caption_id = structure.caption_id;
  out.caption = structure.caption;
  out.dropped_pairs = structure.dropped_pairs;
  for (const auto& pair : structure.pairs) {
    auto attr = cover(pair.attr_chars, text);
    auto obj = cover(pair.obj_chars, text);
    if (!attr || !obj || attr->overlaps(*obj)) {
      ++out.dropped_pairs;
      continue;
    }
    AttrObjPair r = pair;
    r.attr_tokens = attr;
    r.obj_tokens = obj;
    out.pairs.push_back(std::move(r));
  }
  return out;
}

}  // namespace bindscore
