// Copyright 2026 The bindscore Authors
// SPDX-License-Identifier: Apache-2.0

// bindscore: score image-text pairs and run benchmarks over exported
// embedding bundles.
//
// Exit codes:
//   0  success
//   1  unexpected failure
//   2  configuration or input error
//   3  phrase table is missing entries (the needed keys are printed)

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <fmt/ranges.h>
#include <json.hpp>

#include "bindscore/alignment.hpp"
#include "bindscore/bundle.hpp"
#include "bindscore/caption.hpp"
#include "bindscore/embedding.hpp"
#include "bindscore/error.hpp"
#include "bindscore/harness.hpp"
#include "bindscore/refinement.hpp"
#include "bindscore/scoring.hpp"
#include "bindscore/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitMissingPhrases = 3;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string images;
  std::string texts;
  std::string pairs;
  std::string lexicon;
  std::string pool;
  std::string phrases;
  bindscore::ScoreParams params;
  std::size_t workers = 1;
  std::string out;
  bool timestamp = true;
  bool deterministic = true;
  std::string effective_config;  // TOML, recorded next to bench results

  // score / inspect
  std::string image_id;
  std::string text_id;
  bool refined = false;

  // bench
  std::string cases;
  std::string retrieval;
  std::string gallery;
  std::vector<int> ks{1, 5, 10};
  std::vector<int> k_values{1, 3, 5, 8, 10};
  std::vector<double> omega_values{0.3};
  std::string mode = "full";

  // synth
  std::size_t synth_cases = 100;
  std::uint64_t seed = 20240917;
  bool control = false;
  double noise = 0.02;
};

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw ConfigError(std::string("missing required option ") + flag);
}

void require_path(const std::string& value, const char* flag) {
  require(value, flag);
  if (!fs::exists(value)) throw ConfigError(std::string(flag) + ": no such path " + value);
}

std::map<std::string, bindscore::CaptionStructure> load_structures(
    const RunConfig& cfg, const std::map<std::string, bindscore::TextEncoding>& texts) {
  if (!cfg.pairs.empty()) {
    require_path(cfg.pairs, "--pairs");
    return bindscore::load_pairs_file(cfg.pairs);
  }
  std::map<std::string, bindscore::CaptionStructure> out;
  if (cfg.lexicon.empty()) {
    fmt::print(stderr, "note: no --pairs or --lexicon given; captions have no pairs\n");
    return out;
  }
  require_path(cfg.lexicon, "--lexicon");
  const auto lexicon = bindscore::load_lexicon(cfg.lexicon);
  for (const auto& [id, text] : texts) {
    out.emplace(id, bindscore::extract_pairs_heuristic(id, text.caption(), lexicon));
  }
  return out;
}

bindscore::Scorer load_scorer(const RunConfig& cfg) {
  require_path(cfg.images, "--images");
  require_path(cfg.texts, "--texts");
  require_path(cfg.pool, "--pool");
  auto images = bindscore::bundle::index_images(bindscore::bundle::read_images(cfg.images));
  auto texts = bindscore::bundle::index_texts(bindscore::bundle::read_texts(cfg.texts));
  auto structures = load_structures(cfg, texts);
  auto pool = bindscore::bundle::read_concept_pool(cfg.pool);
  bindscore::PhraseEmbeddingTable table(pool.dim());
  if (!cfg.phrases.empty()) {
    require_path(cfg.phrases, "--phrases");
    table = bindscore::bundle::read_phrase_table(cfg.phrases);
  }
  bindscore::Scorer scorer(std::move(images), std::move(texts), structures, std::move(pool),
                           std::move(table));
  if (scorer.dropped_pairs() > 0) {
    fmt::print(stderr, "note: {} pair(s) fall outside the encoded text window and were dropped\n",
               scorer.dropped_pairs());
  }
  return scorer;
}

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ordered_json run_record(const RunConfig& cfg, const std::string& command) {
  ordered_json j;
  j["command"] = command;
  j["images"] = cfg.images;
  j["texts"] = cfg.texts;
  j["pairs"] = cfg.pairs;
  j["lexicon"] = cfg.lexicon;
  j["pool"] = cfg.pool;
  j["phrases"] = cfg.phrases;
  j["k"] = cfg.params.k;
  j["omega"] = cfg.params.omega;
  j["p"] = cfg.params.p;
  j["include_special_tokens"] = cfg.params.include_special_tokens;
  if (cfg.timestamp) j["timestamp"] = iso_timestamp();
  return j;
}

void write_file(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << contents;
}

void print_summary(std::span<const bindscore::BenchResult> results) {
  fmt::print("{:<18} {:<12} {:>3} {:>6} {:>3} {:>14} {:>7}\n", "metric", "mode", "K", "omega", "P",
             "correct/total", "value");
  for (const auto& r : results) {
    fmt::print("{:<18} {:<12} {:>3} {:>6.2f} {:>3} {:>14} {:>7.3f}\n", r.metric,
               bindscore::to_string(r.mode), r.params.k, r.params.omega, r.params.p,
               fmt::format("{}/{}", r.correct, r.total), r.value);
  }
}

void emit_bench(const RunConfig& cfg, const std::string& command,
                std::span<const bindscore::BenchResult> results) {
  print_summary(results);
  if (cfg.out.empty()) return;
  const fs::path dir(cfg.out);
  std::ostringstream csv, jsonl, records;
  bindscore::write_results_csv(csv, results);
  bindscore::write_results_jsonl(jsonl, results);
  for (const auto& r : results) bindscore::write_records_jsonl(records, r);
  write_file(dir / "results.csv", csv.str());
  write_file(dir / "results.jsonl", jsonl.str());
  write_file(dir / "records.jsonl", records.str());
  write_file(dir / "run.json", run_record(cfg, command).dump(2) + "\n");
  write_file(dir / "config.toml", cfg.effective_config);
}

int cmd_score(const RunConfig& cfg) {
  require(cfg.image_id, "--image");
  require(cfg.text_id, "--text");
  const auto scorer = load_scorer(cfg);
  const auto report = scorer.score(cfg.image_id, cfg.text_id, cfg.params);
  const auto text = bindscore::to_json(report).dump(2) + "\n";
  fmt::print("{}", text);
  if (!cfg.out.empty()) write_file(cfg.out, text);
  return kExitOk;
}

int cmd_requests(const RunConfig& cfg) {
  require(cfg.out, "--out");
  require_path(cfg.texts, "--texts");
  require_path(cfg.pool, "--pool");
  const auto texts = bindscore::bundle::index_texts(bindscore::bundle::read_texts(cfg.texts));
  const auto structures = load_structures(cfg, texts);
  std::vector<bindscore::CaptionStructure> list;
  for (const auto& [id, s] : structures) {
    if (texts.contains(id)) list.push_back(s);
  }
  const auto pool = bindscore::bundle::read_concept_pool(cfg.pool);
  const auto n = bindscore::emit_phrase_requests(cfg.out, list, texts, pool, cfg.params.refinement());
  fmt::print("{} phrase request(s) written to {}\n", n, cfg.out);
  return kExitOk;
}

int cmd_inspect(const RunConfig& cfg) {
  require(cfg.image_id, "--image");
  require(cfg.text_id, "--text");
  const auto scorer = load_scorer(cfg);
  const auto& image = scorer.image(cfg.image_id);
  bindscore::TextEncoding text = scorer.text(cfg.text_id);
  if (cfg.refined) {
    text = bindscore::refine_encoding(text, scorer.structure(cfg.text_id), scorer.pool(),
                                      scorer.table(), cfg.params.refinement());
  }
  const auto sim = bindscore::similarity_matrix(text, image);
  const auto mask = bindscore::scoring_mask(text, cfg.params.include_special_tokens);
  std::string csv = "token_index,token_text,phi,patch_indices\n";
  for (const auto& a : bindscore::token_alignments(sim, cfg.params.k)) {
    if (!mask[a.token_index]) continue;
    csv += fmt::format("{},\"{}\",{},{}\n", a.token_index, text.token_texts()[a.token_index],
                       a.token_score, fmt::join(a.patch_indices, " "));
  }
  if (cfg.out.empty()) {
    fmt::print("{}", csv);
  } else {
    write_file(cfg.out, csv);
  }
  return kExitOk;
}

int cmd_pairwise(const RunConfig& cfg) {
  require_path(cfg.cases, "--cases");
  const auto scorer = load_scorer(cfg);
  const auto cases = bindscore::load_cases(cfg.cases);
  bindscore::validate(scorer, cases);
  const std::vector<bindscore::BenchResult> results{bindscore::pairwise_accuracy(
      scorer, cases, cfg.params, bindscore::parse_mode(cfg.mode), cfg.workers)};
  emit_bench(cfg, "bench pairwise", results);
  return kExitOk;
}

int cmd_retrieval(const RunConfig& cfg) {
  require_path(cfg.retrieval, "--retrieval");
  if (!cfg.gallery.empty()) require_path(cfg.gallery, "--gallery");
  const auto scorer = load_scorer(cfg);
  const auto set = bindscore::load_retrieval(cfg.retrieval, cfg.gallery, scorer.image_ids());
  bindscore::validate(scorer, set);
  const auto results = bindscore::retrieval_recall(scorer, set, cfg.params, cfg.ks, cfg.workers);
  emit_bench(cfg, "bench retrieval", results);
  return kExitOk;
}

int cmd_sweep(const RunConfig& cfg) {
  require_path(cfg.cases, "--cases");
  const auto scorer = load_scorer(cfg);
  const auto cases = bindscore::load_cases(cfg.cases);
  bindscore::validate(scorer, cases);
  const auto results =
      bindscore::sweep(scorer, cases, cfg.params, cfg.k_values, cfg.omega_values, cfg.workers);
  emit_bench(cfg, "bench sweep", results);
  return kExitOk;
}

int cmd_ablation(const RunConfig& cfg) {
  require_path(cfg.cases, "--cases");
  const auto scorer = load_scorer(cfg);
  const auto cases = bindscore::load_cases(cfg.cases);
  bindscore::validate(scorer, cases);
  const auto results = bindscore::ablation(scorer, cases, cfg.params, cfg.workers);
  emit_bench(cfg, "bench ablation", results);
  return kExitOk;
}

int cmd_synth(const RunConfig& cfg) {
  require(cfg.out, "--out");
  bindscore::synthetic::Options options;
  options.cases = cfg.synth_cases;
  options.seed = cfg.seed;
  options.shuffled_control = cfg.control;
  options.noise = cfg.noise;
  const auto bench = bindscore::synthetic::make_planted_binding(options);
  bindscore::synthetic::write(cfg.out, bench);
  fmt::print("{} case(s) written to {}\n", bench.cases.size(), cfg.out);
  return kExitOk;
}

void add_resource_options(CLI::App& app, RunConfig& cfg) {
  app.add_option("--images", cfg.images, "Image bundle directory");
  app.add_option("--texts", cfg.texts, "Text bundle directory");
  app.add_option("--pairs", cfg.pairs, "Attribute-object pairs file (JSON lines)");
  app.add_option("--lexicon", cfg.lexicon, "Attribute word list for the built-in extractor");
  app.add_option("--pool", cfg.pool, "Concept pool bundle directory");
  app.add_option("--phrases", cfg.phrases, "Phrase embedding bundle directory");
}

void add_score_options(CLI::App& app, RunConfig& cfg) {
  app.add_option("--k", cfg.params.k, "Top-K patches per token")->capture_default_str();
  app.add_option("--omega", cfg.params.omega, "Global score weight in [0, 1]")
      ->capture_default_str();
  app.add_option("--p-neighbors", cfg.params.p, "Neighbor concepts per object")
      ->capture_default_str();
  app.add_flag("--include-special-tokens", cfg.params.include_special_tokens,
               "Score masked tokens too");
}

// Every option of `app` and its selected subcommands as TOML that --config
// reads back. Flags that only act once (--config, --dump-config) are left out.
void dump_options(const CLI::App& app, const std::string& section, std::string& out) {
  if (!section.empty()) out += fmt::format("\n[{}]\n", section);
  for (const CLI::Option* opt : app.get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "config" || name == "dump-config") continue;
    std::string value;
    if (opt->get_expected_max() == 0) {
      const bool on = opt->count() > 0 ? opt->as<bool>() : opt->get_default_str() == "true";
      value = on ? "true" : "false";
    } else {
      std::vector<std::string> values =
          opt->count() > 0 ? opt->results() : std::vector<std::string>{};
      if (values.empty()) {
        const std::string def = opt->get_default_str();
        if (def.empty()) continue;
        values = {def};
      }
      if (opt->get_expected_max() > 1) {
        std::string joined;
        for (const auto& v : values) {
          const std::string stripped =
              v.size() >= 2 && v.front() == '[' && v.back() == ']' ? v.substr(1, v.size() - 2) : v;
          if (!joined.empty() && !stripped.empty()) joined += ',';
          joined += stripped;
        }
        value = "[" + joined + "]";
      } else {
        const std::string v = opt->count() > 0 ? opt->as<std::string>() : values[0];
        char* end = nullptr;
        std::strtod(v.c_str(), &end);
        const bool numeric = !v.empty() && end == v.c_str() + v.size();
        value = numeric ? v : ordered_json(v).dump();
      }
    }
    out += fmt::format("{}={}\n", name, value);
  }
  for (const CLI::App* sub : app.get_subcommands()) {
    dump_options(*sub, section.empty() ? sub->get_name() : section + "." + sub->get_name(), out);
  }
}

std::string dump_config_toml(const CLI::App& app) {
  std::string out;
  dump_options(app, "", out);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  CLI::App app{"Attribute-binding image-text scoring over exported embeddings", "bindscore"};
  // Later occurrences win, so flags can override a value set earlier on the line.
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.set_config("--config", "", "TOML config file; command-line flags take precedence");
  bool dump_config = false;
  app.add_flag("--dump-config", dump_config, "Print the effective configuration and exit");
  app.add_option("--workers", cfg.workers, "Worker threads")->capture_default_str();
  app.add_option("--out", cfg.out, "Output file or directory");
  app.add_flag("--timestamp,!--no-timestamp", cfg.timestamp, "Record a timestamp in run.json")
      ->default_str("true");
  app.add_flag("--deterministic,!--no-deterministic", cfg.deterministic,
               "Stable output ordering (always on)")
      ->default_str("true");
  add_resource_options(app, cfg);
  add_score_options(app, cfg);
  app.require_subcommand(1);
  app.fallthrough();

  auto* score = app.add_subcommand("score", "Score one image-text pair");
  score->add_option("--image", cfg.image_id, "Image id");
  score->add_option("--text", cfg.text_id, "Text id");

  auto* requests = app.add_subcommand("requests", "Write the phrase embeddings refinement needs");

  auto* inspect = app.add_subcommand("inspect", "Per-token alignment CSV for one pair");
  inspect->add_option("--image", cfg.image_id, "Image id");
  inspect->add_option("--text", cfg.text_id, "Text id");
  inspect->add_flag("--refined", cfg.refined, "Inspect refined token embeddings");

  auto* bench = app.add_subcommand("bench", "Run a benchmark protocol");
  bench->require_subcommand(1);
  bench->fallthrough();
  auto* pairwise = bench->add_subcommand("pairwise", "Positive/negative caption accuracy");
  pairwise->add_option("--cases", cfg.cases, "Case manifest (JSON lines)");
  pairwise->add_option("--mode", cfg.mode, "global-only | base-local | refined | full")
      ->capture_default_str();
  auto* retrieval = bench->add_subcommand("retrieval", "Text-to-image Recall@K");
  retrieval->add_option("--retrieval", cfg.retrieval, "Query manifest (JSON lines)");
  retrieval->add_option("--gallery", cfg.gallery, "Gallery ids, one per line (default: all)");
  retrieval->add_option("--ks", cfg.ks, "Recall cutoffs")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)->delimiter(',')->capture_default_str();
  auto* sweep = bench->add_subcommand("sweep", "Pairwise accuracy over a K x omega grid");
  sweep->add_option("--cases", cfg.cases, "Case manifest (JSON lines)");
  sweep->add_option("--k-values", cfg.k_values, "K grid")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)->delimiter(',')->capture_default_str();
  sweep->add_option("--omega-values", cfg.omega_values, "omega grid")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)
      ->delimiter(',')
      ->capture_default_str();
  auto* ablation = bench->add_subcommand("ablation", "Pairwise accuracy under each score mode");
  ablation->add_option("--cases", cfg.cases, "Case manifest (JSON lines)");

  auto* synth = app.add_subcommand("synth", "Write the planted-binding benchmark");
  synth->add_option("--cases", cfg.synth_cases, "Number of cases")->capture_default_str();
  synth->add_option("--seed", cfg.seed, "Generator seed")->capture_default_str();
  synth->add_flag("--control", cfg.control, "Shuffle patch attributes for half the cases");
  synth->add_option("--noise", cfg.noise, "Per-dimension noise")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  cfg.effective_config = dump_config_toml(app);
  if (dump_config) {
    fmt::print("{}", cfg.effective_config);
    return kExitOk;
  }

  try {
    cfg.params.validate();
    if (cfg.workers == 0) cfg.workers = std::max(1u, std::thread::hardware_concurrency());
    if (*score) return cmd_score(cfg);
    if (*requests) return cmd_requests(cfg);
    if (*inspect) return cmd_inspect(cfg);
    if (*synth) return cmd_synth(cfg);
    if (*pairwise) return cmd_pairwise(cfg);
    if (*retrieval) return cmd_retrieval(cfg);
    if (*sweep) return cmd_sweep(cfg);
    if (*ablation) return cmd_ablation(cfg);
  } catch (const bindscore::MissingPhraseError& e) {
    fmt::print(stderr, "error: phrase table is missing {} entr{}; needed:\n", e.keys().size(),
               e.keys().size() == 1 ? "y" : "ies");
    std::ostringstream lines;
    bindscore::write_phrase_requests(lines, e.keys());
    fmt::print(stderr, "{}", lines.str());
    return kExitMissingPhrases;
  } catch (const ConfigError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitConfig;
  } catch (const bindscore::FormatError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitConfig;
  } catch (const std::logic_error& e) {
    // invalid_argument, out_of_range, domain_error: bad parameters or ids.
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitFailure;
  }
  return kExitFailure;
}
