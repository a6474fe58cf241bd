// Copyright 2026 The bindscore Authors
// SPDX-License-Identifier: Apache-2.0

#include "bindscore/harness.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

namespace bindscore {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::kGlobalOnly: return "global-only";
    case Mode::kBaseLocal: return "base-local";
    case Mode::kRefined: return "refined";
    case Mode::kFull: return "full";
  }
  return "?";
}

Mode parse_mode(std::string_view name) {
  for (Mode m : kAllModes) {
    if (to_string(m) == name) return m;
  }
  throw std::invalid_argument("unknown mode '" + std::string(name) +
                              "' (expected global-only, base-local, refined or full)");
}

double select_score(const ScoreReport& r, Mode mode) {
  switch (mode) {
    case Mode::kGlobalOnly: return r.s_global;
    case Mode::kBaseLocal: return r.s_base;
    case Mode::kRefined: return r.s_refine;
    case Mode::kFull: return r.s_final;
  }
  return r.s_final;
}

// ---------------------------------------------------------------------------
// Scorer

Scorer::Scorer(std::map<std::string, ImageEmbedding> images,
               std::map<std::string, TextEncoding> texts,
               const std::map<std::string, CaptionStructure>& structures, ConceptPool pool,
               PhraseEmbeddingTable table)
    : images_(std::move(images)),
      texts_(std::move(texts)),
      pool_(std::move(pool)),
      table_(std::move(table)) {
  if (table_.dim() != pool_.dim()) {
    throw DimensionMismatch("phrase table dim differs from concept pool dim");
  }
  for (const auto& [id, text] : texts_) {
    if (text.dim() != pool_.dim()) {
      throw DimensionMismatch("text " + id + " dim differs from concept pool dim");
    }
    CaptionStructure s;
    if (const auto it = structures.find(id); it != structures.end()) {
      s = resolve_token_spans(it->second, text);
    } else {
      s.caption_id = id;
      s.caption = text.caption();
    }
    dropped_pairs_ += s.dropped_pairs;
    structures_.emplace(id, std::move(s));
  }
}

const ImageEmbedding& Scorer::image(const std::string& id) const {
  const auto it = images_.find(id);
  if (it == images_.end()) throw std::out_of_range("unknown image id '" + id + "'");
  return it->second;
}

const TextEncoding& Scorer::text(const std::string& id) const {
  const auto it = texts_.find(id);
  if (it == texts_.end()) throw std::out_of_range("unknown text id '" + id + "'");
  return it->second;
}

const CaptionStructure& Scorer::structure(const std::string& text_id) const {
  const auto it = structures_.find(text_id);
  if (it == structures_.end()) throw std::out_of_range("unknown text id '" + text_id + "'");
  return it->second;
}

std::vector<std::string> Scorer::image_ids() const {
  std::vector<std::string> ids;
  ids.reserve(images_.size());
  for (const auto& [id, _] : images_) ids.push_back(id);
  return ids;
}

ScoreReport Scorer::score(const std::string& image_id, const std::string& text_id,
                          const ScoreParams& params) const {
  return score_pair(image(image_id), text(text_id), structure(text_id), pool_, table_, params);
}

double Scorer::score(const std::string& image_id, const std::string& text_id,
                     const ScoreParams& params, Mode mode) const {
  switch (mode) {
    case Mode::kGlobalOnly:
      return global_score(text(text_id), image(image_id));
    case Mode::kBaseLocal:
      params.validate();
      return local_score(text(text_id), image(image_id), params);
    default:
      return select_score(score(image_id, text_id, params), mode);
  }
}

// ---------------------------------------------------------------------------
// Parallel execution

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  const auto run = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(workers, n));
  if (threads == 1) {
    run();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(run);
  }

  std::set<PhraseKey> missing;
  std::exception_ptr first;
  for (const auto& e : errors) {
    if (!e) continue;
    try {
      std::rethrow_exception(e);
    } catch (const MissingPhraseError& m) {
      missing.insert(m.keys().begin(), m.keys().end());
    } catch (...) {
      if (!first) first = e;
    }
  }
  if (first) std::rethrow_exception(first);
  if (!missing.empty()) throw MissingPhraseError({missing.begin(), missing.end()});
}

// ---------------------------------------------------------------------------
// Protocols

namespace {

BenchResult tally(std::vector<CaseRecord> records, const ScoreParams& params, Mode mode) {
  BenchResult r;
  r.metric = "pairwise_accuracy";
  r.mode = mode;
  r.params = params;
  r.total = records.size();
  r.correct = static_cast<std::size_t>(
      std::count_if(records.begin(), records.end(), [](const CaseRecord& c) { return c.correct; }));
  r.value = r.total == 0 ? 0.0 : static_cast<double>(r.correct) / static_cast<double>(r.total);
  r.cases = std::move(records);
  return r;
}

CaseRecord make_record(const PairwiseCase& c, double positive, double negative) {
  return CaseRecord{c, positive, negative, positive - negative, positive > negative};
}

}  // namespace

BenchResult pairwise_accuracy(const Scorer& scorer, std::span<const PairwiseCase> cases,
                              const ScoreParams& params, Mode mode, std::size_t workers) {
  params.validate();
  std::vector<CaseRecord> records(cases.size());
  parallel_for(cases.size(), workers, [&](std::size_t i) {
    const PairwiseCase& c = cases[i];
    records[i] = make_record(c, scorer.score(c.image_id, c.positive_text_id, params, mode),
                             scorer.score(c.image_id, c.negative_text_id, params, mode));
  });
  return tally(std::move(records), params, mode);
}

std::vector<BenchResult> retrieval_recall(const Scorer& scorer, const RetrievalSet& set,
                                          const ScoreParams& params, std::span<const int> ks,
                                          std::size_t workers) {
  params.validate();
  if (set.gallery.empty()) throw std::invalid_argument("retrieval: empty gallery");
  if (!std::is_sorted(ks.begin(), ks.end())) {
    throw std::invalid_argument("retrieval: K values must be ascending");
  }
  for (int k : ks) {
    if (k < 1 || static_cast<std::size_t>(k) > set.gallery.size()) {
      throw std::invalid_argument("retrieval: R@" + std::to_string(k) +
                                  " exceeds gallery size " + std::to_string(set.gallery.size()));
    }
  }

  std::vector<std::size_t> ranks(set.queries.size());
  parallel_for(set.queries.size(), workers, [&](std::size_t q) {
    const RetrievalQuery& query = set.queries[q];
    std::vector<std::pair<double, const std::string*>> ranked;
    ranked.reserve(set.gallery.size());
    for (const auto& image_id : set.gallery) {
      ranked.emplace_back(scorer.score(image_id, query.text_id, params).s_final, &image_id);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      return a.first > b.first || (a.first == b.first && *a.second < *b.second);
    });
    const std::set<std::string> gold(query.gold_image_ids.begin(), query.gold_image_ids.end());
    std::size_t rank = 0;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      if (gold.contains(*ranked[i].second)) {
        rank = i + 1;
        break;
      }
    }
    if (rank == 0) throw std::invalid_argument("retrieval: no gold image for " + query.text_id);
    ranks[q] = rank;
  });

  std::vector<BenchResult> out;
  for (int k : ks) {
    BenchResult r;
    r.metric = "recall@" + std::to_string(k);
    r.mode = Mode::kFull;
    r.params = params;
    r.total = set.queries.size();
    for (std::size_t q = 0; q < set.queries.size(); ++q) {
      const bool hit = ranks[q] <= static_cast<std::size_t>(k);
      r.correct += hit ? 1 : 0;
      r.queries.push_back({set.queries[q].text_id, ranks[q], hit});
    }
    r.value = r.total == 0 ? 0.0 : static_cast<double>(r.correct) / static_cast<double>(r.total);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<BenchResult> sweep(const Scorer& scorer, std::span<const PairwiseCase> cases,
                               const ScoreParams& base, std::span<const int> k_values,
                               std::span<const double> omega_values, std::size_t workers) {
  if (k_values.empty() || omega_values.empty()) {
    throw std::invalid_argument("sweep: empty parameter grid");
  }
  std::vector<BenchResult> out;
  for (int k : k_values) {
    ScoreParams params = base;
    params.k = k;
    params.validate();
    // One scoring pass per K; ω only changes the fusion.
    std::vector<std::pair<ScoreReport, ScoreReport>> reports(cases.size());
    parallel_for(cases.size(), workers, [&](std::size_t i) {
      const PairwiseCase& c = cases[i];
      reports[i] = {scorer.score(c.image_id, c.positive_text_id, params),
                    scorer.score(c.image_id, c.negative_text_id, params)};
    });
    for (double omega : omega_values) {
      ScoreParams cell = params;
      cell.omega = omega;
      cell.validate();
      std::vector<CaseRecord> records;
      records.reserve(cases.size());
      for (std::size_t i = 0; i < cases.size(); ++i) {
        const auto& [pos, neg] = reports[i];
        records.push_back(make_record(cases[i], final_score(pos.s_local, pos.s_global, omega),
                                      final_score(neg.s_local, neg.s_global, omega)));
      }
      out.push_back(tally(std::move(records), cell, Mode::kFull));
    }
  }
  return out;
}

std::vector<BenchResult> ablation(const Scorer& scorer, std::span<const PairwiseCase> cases,
                                  const ScoreParams& params, std::size_t workers) {
  params.validate();
  std::vector<std::pair<ScoreReport, ScoreReport>> reports(cases.size());
  parallel_for(cases.size(), workers, [&](std::size_t i) {
    const PairwiseCase& c = cases[i];
    reports[i] = {scorer.score(c.image_id, c.positive_text_id, params),
                  scorer.score(c.image_id, c.negative_text_id, params)};
  });
  std::vector<BenchResult> out;
  for (Mode mode : kAllModes) {
    std::vector<CaseRecord> records;
    records.reserve(cases.size());
    for (std::size_t i = 0; i < cases.size(); ++i) {
      records.push_back(make_record(cases[i], select_score(reports[i].first, mode),
                                    select_score(reports[i].second, mode)));
    }
    out.push_back(tally(std::move(records), params, mode));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Manifests

namespace {

template <typename Fn>
void for_each_json_line(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      fn(json::parse(line));
    } catch (const json::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const FormatError& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

}  // namespace

std::vector<PairwiseCase> load_cases(const std::filesystem::path& path) {
  std::vector<PairwiseCase> out;
  for_each_json_line(path, [&](const json& j) {
    PairwiseCase c{j.at("image_id").get<std::string>(), j.at("positive_text_id").get<std::string>(),
                   j.at("negative_text_id").get<std::string>()};
    if (c.positive_text_id == c.negative_text_id) {
      throw FormatError("positive and negative text ids are equal (" + c.positive_text_id + ")");
    }
    out.push_back(std::move(c));
  });
  return out;
}

RetrievalSet load_retrieval(const std::filesystem::path& path,
                            const std::filesystem::path& gallery_path,
                            const std::vector<std::string>& default_gallery) {
  RetrievalSet set;
  for_each_json_line(path, [&](const json& j) {
    set.queries.push_back({j.at("text_id").get<std::string>(),
                           j.at("gold_image_ids").get<std::vector<std::string>>()});
  });
  if (gallery_path.empty()) {
    set.gallery = default_gallery;
  } else {
    std::ifstream in(gallery_path);
    if (!in) throw FormatError("cannot open " + gallery_path.string());
    std::string line;
    while (std::getline(in, line)) {
      const auto b = line.find_first_not_of(" \t\r");
      if (b == std::string::npos) continue;
      const auto e = line.find_last_not_of(" \t\r");
      set.gallery.push_back(line.substr(b, e - b + 1));
    }
  }
  return set;
}

void validate(const Scorer& scorer, std::span<const PairwiseCase> cases) {
  for (const auto& c : cases) {
    if (!scorer.has_image(c.image_id)) throw FormatError("case references unknown image " + c.image_id);
    for (const auto* t : {&c.positive_text_id, &c.negative_text_id}) {
      if (!scorer.has_text(*t)) throw FormatError("case references unknown text " + *t);
    }
    if (c.positive_text_id == c.negative_text_id) {
      throw FormatError("case with identical positive and negative " + c.positive_text_id);
    }
  }
}

void validate(const Scorer& scorer, const RetrievalSet& set) {
  if (set.gallery.empty()) throw FormatError("retrieval gallery is empty");
  const std::set<std::string> gallery(set.gallery.begin(), set.gallery.end());
  if (gallery.size() != set.gallery.size()) throw FormatError("retrieval gallery has duplicate ids");
  for (const auto& id : set.gallery) {
    if (!scorer.has_image(id)) throw FormatError("gallery references unknown image " + id);
  }
  for (const auto& q : set.queries) {
    if (!scorer.has_text(q.text_id)) throw FormatError("query references unknown text " + q.text_id);
    if (std::none_of(q.gold_image_ids.begin(), q.gold_image_ids.end(),
                     [&](const std::string& g) { return gallery.contains(g); })) {
      throw FormatError("query " + q.text_id + " has no ground-truth image in the gallery");
    }
  }
}

void write_cases(std::ostream& out, std::span<const PairwiseCase> cases) {
  for (const auto& c : cases) {
    out << ordered_json{{"image_id", c.image_id},
                        {"positive_text_id", c.positive_text_id},
                        {"negative_text_id", c.negative_text_id}}
               .dump()
        << '\n';
  }
}

void write_retrieval(std::ostream& out, const RetrievalSet& set) {
  for (const auto& q : set.queries) {
    out << ordered_json{{"text_id", q.text_id}, {"gold_image_ids", q.gold_image_ids}}.dump()
        << '\n';
  }
}

// ---------------------------------------------------------------------------
// Results

void write_results_csv(std::ostream& out, std::span<const BenchResult> results) {
  out << "metric,mode,k,omega,p,include_special_tokens,correct,total,value\n";
  for (const auto& r : results) {
    out << fmt::format("{},{},{},{},{},{},{},{},{}\n", r.metric, to_string(r.mode), r.params.k,
                       r.params.omega, r.params.p, r.params.include_special_tokens ? 1 : 0,
                       r.correct, r.total, r.value);
  }
}

void write_results_jsonl(std::ostream& out, std::span<const BenchResult> results) {
  for (const auto& r : results) {
    out << ordered_json{{"metric", r.metric},
                        {"mode", to_string(r.mode)},
                        {"k", r.params.k},
                        {"omega", r.params.omega},
                        {"p", r.params.p},
                        {"include_special_tokens", r.params.include_special_tokens},
                        {"correct", r.correct},
                        {"total", r.total},
                        {"value", r.value}}
               .dump()
        << '\n';
  }
}

void write_records_jsonl(std::ostream& out, const BenchResult& r) {
  for (const auto& c : r.cases) {
    out << ordered_json{{"metric", r.metric},
                        {"mode", to_string(r.mode)},
                        {"image_id", c.item.image_id},
                        {"positive_text_id", c.item.positive_text_id},
                        {"negative_text_id", c.item.negative_text_id},
                        {"positive_score", c.positive},
                        {"negative_score", c.negative},
                        {"margin", c.margin},
                        {"correct", c.correct}}
               .dump()
        << '\n';
  }
  for (const auto& q : r.queries) {
    out << ordered_json{{"metric", r.metric},
                        {"text_id", q.text_id},
                        {"gold_rank", q.gold_rank},
                        {"hit", q.hit}}
               .dump()
        << '\n';
  }
}

}  // namespace bindscore
