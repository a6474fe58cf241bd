// Copyright 2026 The bindscore Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "bindscore/alignment.hpp"
#include "bindscore/harness.hpp"
#include "bindscore/refinement.hpp"
#include "bindscore/scoring.hpp"
#include "bindscore/synthetic.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

namespace {

using namespace bindscore;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const char* name, const Outcome& o) {
  fmt::print("[{}] {}: {}\n", o.pass ? "PASS" : "FAIL", name, o.detail);
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

// ---------------------------------------------------------------------------
// Top-K pooling against the full-sort oracle.

struct OracleCounter {
  std::size_t checked = 0;
  std::size_t mismatches = 0;

  void check(const Matrix& m, const std::vector<bool>& mask, int k) {
    oracle::Grid g(static_cast<std::size_t>(m.rows()), oracle::Row(static_cast<std::size_t>(m.cols())));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) g[i][j] = m(i, j);
    const double got = aggregate_score(SimilarityMatrix{m}, mask, k);
    const double want = oracle::aggregate(g, mask, k);
    ++checked;
    if (std::memcmp(&got, &want, sizeof(double)) != 0) ++mismatches;
  }
};

constexpr double kGrid[] = {-1.0, -0.5, 0.0, 0.5, 1.0};

// Every matrix of the given shape with entries from kGrid, every K, with the
// all-content mask and (for two or more rows) the mask that drops row 0.
void enumerate_shape(int rows, int cols, OracleCounter& counter) {
  const int cells = rows * cols;
  std::vector<int> digit(static_cast<std::size_t>(cells), 0);
  Matrix m(rows, cols);
  const std::vector<bool> all(static_cast<std::size_t>(rows), true);
  std::vector<bool> tail = all;
  tail[0] = false;
  while (true) {
    for (int c = 0; c < cells; ++c) m.data()[c] = kGrid[digit[static_cast<std::size_t>(c)]];
    for (int k = 1; k <= cols; ++k) {
      counter.check(m, all, k);
      if (rows > 1) counter.check(m, tail, k);
    }
    int c = 0;
    while (c < cells && ++digit[static_cast<std::size_t>(c)] == 5) digit[static_cast<std::size_t>(c++)] = 0;
    if (c == cells) break;
  }
}

std::vector<bool> random_mask(std::mt19937_64& rng, int rows) {
  std::bernoulli_distribution coin(0.7);
  std::vector<bool> mask(static_cast<std::size_t>(rows));
  bool any = false;
  for (auto&& b : mask) any |= (b = coin(rng));
  if (!any) mask[std::uniform_int_distribution<std::size_t>(0, mask.size() - 1)(rng)] = true;
  return mask;
}

Outcome oracle_equivalence() {
  const auto t0 = Clock::now();
  OracleCounter exhaustive;
  std::size_t shapes = 0;
  for (int r = 1; r <= 6; ++r) {
    for (int c = 1; c <= 6; ++c) {
      if (r * c > 9) continue;
      enumerate_shape(r, c, exhaustive);
      ++shapes;
    }
  }

  // Grid-valued matrices of every shape up to 6x6.
  std::mt19937_64 rng(20240917);
  OracleCounter sampled;
  std::uniform_int_distribution<int> pick(0, 4);
  for (int r = 1; r <= 6; ++r) {
    for (int c = 1; c <= 6; ++c) {
      for (int trial = 0; trial < 5000; ++trial) {
        Matrix m(r, c);
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = kGrid[pick(rng)];
        sampled.check(m, random_mask(rng, r), std::uniform_int_distribution<int>(1, c)(rng));
      }
    }
  }

  // 10,000 continuous random matrices up to 12x20.
  OracleCounter continuous;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 10000; ++trial) {
    const int r = std::uniform_int_distribution<int>(1, 12)(rng);
    const int c = std::uniform_int_distribution<int>(1, 20)(rng);
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
    continuous.check(m, random_mask(rng, r), std::uniform_int_distribution<int>(1, c)(rng));
  }

  const double secs = seconds_since(t0);
  const std::size_t bad = exhaustive.mismatches + sampled.mismatches + continuous.mismatches;
  return {bad == 0 && secs < 30.0,
          fmt::format("{} exhaustive checks over {} shapes (all matrices with <= 9 cells), {} "
                      "grid-valued samples up to 6x6, {} random up to 12x20; {} mismatches; {:.2f}s",
                      exhaustive.checked, shapes, sampled.checked, continuous.checked, bad, secs)};
}

// ---------------------------------------------------------------------------

Outcome pooling_monotonicity() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::size_t violations = 0, comparisons = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    Vector row(std::uniform_int_distribution<int>(1, 64)(rng));
    for (auto& x : row) x = u(rng);
    double prev = token_score(row, 1);
    for (int k = 2; k <= row.size(); ++k) {
      const double cur = token_score(row, k);
      ++comparisons;
      if (cur > prev) ++violations;
      prev = cur;
    }
  }
  return {violations == 0,
          fmt::format("1000 rows, {} consecutive-K comparisons, {} violations", comparisons, violations)};
}

// ---------------------------------------------------------------------------

Outcome refinement_identities() {
  std::mt19937_64 rng(11);
  const auto bench = synthetic::make_planted_binding({50, 11, false, 0.05});
  const Scorer scorer = synthetic::make_scorer(bench);

  // (a) zero-pair captions.
  std::size_t a_bad = 0;
  const auto& pool = bench.pool;
  for (int trial = 0; trial < 200; ++trial) {
    const auto text = fixture::plain_text("z", fixture::random_rows(rng, 6, synthetic::kDim),
                                          fixture::random_rows(rng, 1, synthetic::kDim).row(0).transpose());
    const auto& image = bench.images[static_cast<std::size_t>(trial) % bench.images.size()];
    CaptionStructure empty;
    empty.caption_id = text.id();
    empty.caption = text.caption();
    const auto r = score_pair(image, text, empty, pool, bench.table, {});
    if (!(r.s_refine == r.s_base && r.delta == 0.0)) ++a_bad;
  }

  // (b) no-op phrase table.
  PhraseEmbeddingTable noop(pool.dim());
  for (const auto& [key, vec] : bench.table.entries()) noop.insert(key, pool.base(key.object));
  std::size_t b_bad = 0, b_pairs = 0;
  for (const auto& s : bench.structures) {
    const auto& text = scorer.text(s.caption_id);
    const auto& resolved = scorer.structure(s.caption_id);
    for (std::size_t i = 0; i < resolved.pairs.size(); ++i) {
      const auto b = pair_binding_vectors(text, resolved, i, pool, noop, {});
      ++b_pairs;
      if (!(b.positive.array() == 0.0).all() || !(b.negative.array() == 0.0).all()) ++b_bad;
    }
    const auto refined = refine_encoding(text, resolved, pool, noop, {});
    for (const auto& p : resolved.pairs) {
      for (std::size_t t = p.obj_tokens->begin; t < p.obj_tokens->end; ++t) {
        const auto row = static_cast<Eigen::Index>(t);
        if (refined.tokens().row(row) != text.tokens().row(row)) ++b_bad;
      }
    }
  }

  // (c) omega = 1 and (d) omega = 0.
  std::size_t c_bad = 0, d_bad = 0;
  for (const auto& c : bench.cases) {
    for (const auto& text_id : {c.positive_text_id, c.negative_text_id}) {
      const auto one = scorer.score(c.image_id, text_id, {.omega = 1.0});
      const auto zero = scorer.score(c.image_id, text_id, {.omega = 0.0});
      if (one.s_final != one.s_global) ++c_bad;
      if (zero.s_final != zero.s_local) ++d_bad;
    }
  }
  return {a_bad + b_bad + c_bad + d_bad == 0,
          fmt::format("(a) {} bad of 200; (b) {} bad over {} pairs; (c) {} bad; (d) {} bad of {}",
                      a_bad, b_bad, b_pairs, c_bad, d_bad, 2 * bench.cases.size())};
}

// ---------------------------------------------------------------------------

Outcome hand_trace() {
  const auto text = fixture::toy_text();
  const auto s = resolve_token_spans(fixture::toy_structure(), text);
  const auto r = score_pair(fixture::toy_image(), text, s, fixture::toy_pool(), fixture::toy_table(),
                            fixture::toy_params());
  using E = fixture::ToyExpected;
  const double err = std::max({std::abs(r.s_base - E::s_base), std::abs(r.s_refine - E::s_refine),
                               std::abs(r.delta - E::delta), std::abs(r.s_local - E::s_local),
                               std::abs(r.s_global - E::s_global), std::abs(r.s_final - E::s_final)});
  return {err <= 1e-9, fmt::format("max field error {:.3g} (s_final {:.12f})", err, r.s_final)};
}

// ---------------------------------------------------------------------------

Outcome planted_benchmark() {
  const auto t0 = Clock::now();
  const auto bench = synthetic::make_planted_binding({});
  const Scorer scorer = synthetic::make_scorer(bench);

  // Construction check: each positive-caption attribute token is >= 0.9
  // cosine-close to its own object's patches and below 0.9 for every other patch.
  std::size_t construction_bad = 0;
  double min_own = 1.0, max_other = -1.0;
  for (const auto& c : bench.cases) {
    const auto& image = scorer.image(c.image_id);
    const auto& text = scorer.text(c.positive_text_id);
    const auto& pairs = scorer.structure(c.positive_text_id).pairs;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const auto token = text.tokens().row(static_cast<Eigen::Index>(pairs[p].attr_tokens->begin));
      for (Eigen::Index j = 0; j < image.num_patches(); ++j) {
        const double sim = cosine(token.transpose(), image.patches().row(j).transpose());
        const auto first = static_cast<Eigen::Index>(p) * synthetic::kPatchesPerObject;
        const bool own = j >= first && j < first + synthetic::kPatchesPerObject;
        if (own) {
          min_own = std::min(min_own, sim);
          if (sim < 0.9) ++construction_bad;
        } else {
          max_other = std::max(max_other, sim);
          if (sim >= 0.9) ++construction_bad;
        }
      }
    }
  }

  const auto full = pairwise_accuracy(scorer, bench.cases, {}, Mode::kFull);
  synthetic::Options control_options;
  control_options.shuffled_control = true;
  const auto control_bench = synthetic::make_planted_binding(control_options);
  const auto control = pairwise_accuracy(synthetic::make_scorer(control_bench), control_bench.cases,
                                         {}, Mode::kFull);
  const double secs = seconds_since(t0);
  const bool ok = construction_bad == 0 && full.total == 100 && full.correct == 100 &&
                  control.value >= 0.4 && control.value <= 0.6 && secs < 10.0;
  return {ok, fmt::format("attribute-token cosine own >= {:.3f}, other <= {:.3f} ({} violations); "
                          "full {}/{}; control {}/{} = {:.2f}; {:.2f}s",
                          min_own, max_other, construction_bad, full.correct, full.total,
                          control.correct, control.total, control.value, secs)};
}

// ---------------------------------------------------------------------------

void write_run(const Scorer& scorer, const synthetic::Benchmark& bench, std::size_t workers,
               const fs::path& dir) {
  fs::create_directories(dir);
  std::vector<BenchResult> results = ablation(scorer, bench.cases, {}, workers);
  const std::vector<int> ks{1, 3, 5, 8, 10};
  const std::vector<double> omegas{0.0, 0.3, 1.0};
  for (auto& r : sweep(scorer, bench.cases, {}, ks, omegas, workers)) results.push_back(std::move(r));
  const std::vector<int> recall_ks{1, 5, 10};
  for (auto& r : retrieval_recall(scorer, bench.retrieval, {}, recall_ks, workers)) {
    results.push_back(std::move(r));
  }
  std::ofstream csv(dir / "results.csv"), jsonl(dir / "results.jsonl"), records(dir / "records.jsonl");
  write_results_csv(csv, results);
  write_results_jsonl(jsonl, results);
  for (const auto& r : results) write_records_jsonl(records, r);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Outcome determinism() {
  const auto bench = synthetic::make_planted_binding({});
  const Scorer scorer = synthetic::make_scorer(bench);
  const auto root = fs::temp_directory_path() / "bindscore_acceptance_determinism";
  fs::remove_all(root);
  write_run(scorer, bench, 1, root / "w1");
  write_run(scorer, bench, 8, root / "w8");
  std::size_t differing = 0, bytes = 0;
  for (const char* f : {"results.csv", "results.jsonl", "records.jsonl"}) {
    const auto a = slurp(root / "w1" / f);
    bytes += a.size();
    if (a.empty() || a != slurp(root / "w8" / f)) ++differing;
  }
  fs::remove_all(root);
  return {differing == 0,
          fmt::format("3 result files ({} bytes) from 1 and 8 workers; {} differ", bytes, differing)};
}

}  // namespace

int main() {
  report("oracle equivalence (top-K pooling)", oracle_equivalence());
  report("pooling monotonicity", pooling_monotonicity());
  report("refinement identities", refinement_identities());
  report("hand-traced fixture", hand_trace());
  report("planted-binding benchmark", planted_benchmark());
  report("determinism across worker counts", determinism());
  fmt::print("{} criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
