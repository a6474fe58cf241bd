// Copyright 2026 The bindscore Authors
// SPDX-License-Identifier: Apache-2.0

#include "bindscore/synthetic.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <random>
#include <string>
#include <utility>

#include <fmt/format.h>

#include "bindscore/bundle.hpp"

namespace bindscore::synthetic {

namespace {

constexpr std::array<const char*, 8> kAttributes = {"red",    "green",  "blue",  "yellow",
                                                    "purple", "orange", "white", "black"};
constexpr std::array<const char*, 12> kObjects = {"cube", "sphere", "cylinder", "cone",
                                                  "car",  "ball",   "chair",    "vase",
                                                  "cup",  "book",   "lamp",     "table"};
// Basis layout: attributes, objects, two function words, then free dimensions
// used for background patches and special tokens.
constexpr Eigen::Index kAttrBase = 0;
constexpr Eigen::Index kObjBase = kAttrBase + static_cast<Eigen::Index>(kAttributes.size());
constexpr Eigen::Index kTheDim = kObjBase + static_cast<Eigen::Index>(kObjects.size());
constexpr Eigen::Index kAndDim = kTheDim + 1;
constexpr Eigen::Index kFreeBase = kAndDim + 1;

constexpr double kObjectAttrMix = 0.5;  // attribute leakage into object tokens
constexpr double kBindingStrength = 0.5;  // F(a, obj) − F(∅, obj) = 0.5 e_a

static_assert(kFreeBase + 4 <= kDim);

class Generator {
 public:
  Generator(std::uint64_t seed, double sigma) : rng_(seed), sigma_(sigma) {}

  Vector basis(Eigen::Index i) const { return Vector::Unit(kDim, i); }
  Vector attr(std::size_t a) const { return basis(kAttrBase + static_cast<Eigen::Index>(a)); }
  Vector obj(std::size_t o) const { return basis(kObjBase + static_cast<Eigen::Index>(o)); }

  Vector noisy(const Vector& v) {
    Vector out = v;
    for (Eigen::Index i = 0; i < out.size(); ++i) out(i) += sigma_ * normal_(rng_);
    return out.normalized();
  }

  Vector free_direction() {
    Vector v = Vector::Zero(kDim);
    for (Eigen::Index i = kFreeBase; i < kDim; ++i) v(i) = normal_(rng_);
    return v.normalized();
  }

  std::size_t pick(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  double sigma_;
};

struct Token {
  std::string text;
  Vector vec;
  bool content;
};

// Builds a caption word by word, tracking character spans.
TextEncoding encode(std::string id, const std::vector<Token>& tokens, const Vector& eot) {
  std::string caption;
  std::vector<std::string> texts;
  std::vector<CharSpan> spans;
  std::vector<bool> mask;
  Matrix m(static_cast<Eigen::Index>(tokens.size()), kDim);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const Token& t = tokens[i];
    if (t.content) {
      if (!caption.empty()) caption += ' ';
      spans.push_back({caption.size(), caption.size() + t.text.size()});
      caption += t.text;
    } else {
      spans.push_back({caption.size(), caption.size()});
    }
    texts.push_back(t.text);
    mask.push_back(t.content);
    m.row(static_cast<Eigen::Index>(i)) = t.vec.transpose();
  }
  // Special tokens at the end point past the last word.
  for (std::size_t i = 0; i < spans.size(); ++i) {
    if (!mask[i] && i > 0) spans[i] = {caption.size(), caption.size()};
  }
  return TextEncoding(std::move(id), std::move(caption), eot, std::move(m), std::move(texts),
                      std::move(spans), std::move(mask));
}

CaptionStructure structure_of(const TextEncoding& text, std::size_t attr1, std::size_t obj1,
                              std::size_t attr2, std::size_t obj2) {
  // Token layout: <start> the A1 O1 and the A2 O2 <end>
  const auto& spans = text.char_spans();
  CaptionStructure s;
  s.caption_id = text.id();
  s.caption = text.caption();
  s.pairs.push_back({kAttributes[attr1], kObjects[obj1], spans[2], spans[3], {}, {}});
  s.pairs.push_back({kAttributes[attr2], kObjects[obj2], spans[6], spans[7], {}, {}});
  return s;
}

}  // namespace

Benchmark make_planted_binding(const Options& options) {
  Generator gen(options.seed, options.noise);

  std::vector<std::string> names(kObjects.begin(), kObjects.end());
  Matrix base(static_cast<Eigen::Index>(kObjects.size()), kDim);
  for (std::size_t o = 0; o < kObjects.size(); ++o) {
    base.row(static_cast<Eigen::Index>(o)) = gen.noisy(gen.obj(o)).transpose();
  }
  ConceptPool pool(std::move(names), base);
  PhraseEmbeddingTable table(kDim);
  for (std::size_t a = 0; a < kAttributes.size(); ++a) {
    for (std::size_t o = 0; o < kObjects.size(); ++o) {
      table.insert({kAttributes[a], kObjects[o]},
                   pool.base(kObjects[o]) + kBindingStrength * gen.attr(a));
    }
  }

  // Balanced swap assignment for the control.
  std::vector<bool> swapped(options.cases, false);
  if (options.shuffled_control) {
    std::fill(swapped.begin(), swapped.begin() + static_cast<long>(options.cases / 2), true);
    std::shuffle(swapped.begin(), swapped.end(), gen.rng());
  }

  const Vector start_vec = gen.basis(kFreeBase);
  std::vector<ImageEmbedding> images;
  std::vector<TextEncoding> texts;
  std::vector<CaptionStructure> structures;
  std::vector<PairwiseCase> cases;
  RetrievalSet retrieval;
  for (std::size_t c = 0; c < options.cases; ++c) {
    const std::size_t a1 = gen.pick(kAttributes.size());
    std::size_t a2 = gen.pick(kAttributes.size() - 1);
    if (a2 >= a1) ++a2;
    const std::size_t o1 = gen.pick(kObjects.size());
    std::size_t o2 = gen.pick(kObjects.size() - 1);
    if (o2 >= o1) ++o2;

    // Image.
    const std::size_t drawn1 = swapped[c] ? a2 : a1;
    const std::size_t drawn2 = swapped[c] ? a1 : a2;
    Matrix patches(2 * kPatchesPerObject + kBackgroundPatches, kDim);
    Eigen::Index row = 0;
    for (Eigen::Index i = 0; i < kPatchesPerObject; ++i) {
      patches.row(row++) = gen.noisy(gen.obj(o1) + gen.attr(drawn1)).transpose();
    }
    for (Eigen::Index i = 0; i < kPatchesPerObject; ++i) {
      patches.row(row++) = gen.noisy(gen.obj(o2) + gen.attr(drawn2)).transpose();
    }
    for (Eigen::Index i = 0; i < kBackgroundPatches; ++i) {
      patches.row(row++) = gen.free_direction().transpose();
    }
    const Vector bag = gen.attr(a1) + gen.attr(a2) + gen.obj(o1) + gen.obj(o2);
    const std::string image_id = fmt::format("img{:04}", c);
    images.emplace_back(image_id, gen.noisy(bag), std::move(patches), std::nullopt);

    // Captions share function-word and special-token vectors.
    const Vector the_vec = gen.noisy(gen.basis(kTheDim));
    const Vector and_vec = gen.noisy(gen.basis(kAndDim));
    const auto caption = [&](const std::string& id, std::size_t first, std::size_t second) {
      const Vector eot = gen.noisy(bag);
      std::vector<Token> tokens = {
          {"<start>", start_vec, false},
          {"the", the_vec, true},
          {kAttributes[first], gen.noisy(gen.attr(first) + gen.obj(o1)), true},
          {kObjects[o1], gen.noisy(gen.obj(o1) + kObjectAttrMix * gen.attr(first)), true},
          {"and", and_vec, true},
          {"the", the_vec, true},
          {kAttributes[second], gen.noisy(gen.attr(second) + gen.obj(o2)), true},
          {kObjects[o2], gen.noisy(gen.obj(o2) + kObjectAttrMix * gen.attr(second)), true},
          {"<end>", eot, false},
      };
      TextEncoding t = encode(id, tokens, eot);
      structures.push_back(structure_of(t, first, o1, second, o2));
      texts.push_back(std::move(t));
    };
    const std::string pos_id = fmt::format("txt{:04}_pos", c);
    const std::string neg_id = fmt::format("txt{:04}_neg", c);
    caption(pos_id, a1, a2);
    caption(neg_id, a2, a1);

    cases.push_back({image_id, pos_id, neg_id});
    retrieval.queries.push_back({pos_id, {image_id}});
    retrieval.gallery.push_back(image_id);
  }

  return Benchmark{std::move(images), std::move(texts),  std::move(structures), std::move(pool),
                   std::move(table),  std::move(cases), std::move(retrieval)};
}

Scorer make_scorer(const Benchmark& bench) {
  std::map<std::string, CaptionStructure> structures;
  for (const auto& s : bench.structures) structures.emplace(s.caption_id, s);
  return Scorer(bundle::index_images(bench.images), bundle::index_texts(bench.texts), structures,
                bench.pool, bench.table);
}

void write(const std::filesystem::path& dir, const Benchmark& bench) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const nlohmann::json provenance = {{"generator", "planted-binding"}, {"space", "synthetic"}};
  bundle::write_images(dir / "images", bench.images, provenance);
  bundle::write_texts(dir / "texts", bench.texts, provenance);
  bundle::write_concept_pool(dir / "pool", bench.pool, provenance);
  bundle::write_phrase_table(dir / "phrases", bench.table, provenance);

  const auto open = [&](const char* name) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    return out;
  };
  {
    auto out = open("pairs.jsonl");
    write_pairs_file(out, bench.structures);
  }
  {
    auto out = open("cases.jsonl");
    write_cases(out, bench.cases);
  }
  {
    auto out = open("retrieval.jsonl");
    write_retrieval(out, bench.retrieval);
  }
  {
    auto out = open("gallery.txt");
    for (const auto& id : bench.retrieval.gallery) out << id << '\n';
  }
}

}  // namespace bindscore::synthetic
