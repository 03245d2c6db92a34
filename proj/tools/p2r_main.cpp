// Copyright 2026 The p2r Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command line front end. Every command prints a single JSON document on
// stdout on success; errors go to stderr as one JSON line and set the exit
// code to the error kind (1 usage, 2 data, 3 computation, 4 backend).

#include <cstdint>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "p2r/archive.hpp"
#include "p2r/clustering.hpp"
#include "p2r/common.hpp"
#include "p2r/confidence.hpp"
#include "p2r/lambda_search.hpp"
#include "p2r/manifest.hpp"
#include "p2r/parallel.hpp"
#include "p2r/task_arithmetic.hpp"
#include "p2r/tensor.hpp"
#include "p2r/toy.hpp"
#include "p2r/wer.hpp"

namespace {

using nlohmann::json;
using namespace p2r;

constexpr const char* kVersion = "p2r 0.1.0";

bool g_quiet = false;

void print_json(const json& doc) { std::cout << doc.dump(2) << "\n"; }

void note(const std::string& line) {
  if (!g_quiet) std::cerr << line << "\n";
}

TensorMap load_map(const std::string& path, Role role = Role::kUnspecified) {
  TensorMap map = load_archive_file(path);
  map.set_role(role);
  return map;
}

// diff MINUEND SUBTRAHEND --out FILE
void cmd_diff(const std::string& minuend_path,
              const std::string& subtrahend_path, const std::string& out) {
  TensorMap minuend = load_map(minuend_path, Role::kRealFinetuned);
  TensorMap subtrahend = load_map(subtrahend_path, Role::kPseudoFinetuned);
  TaskVector vec = diff(minuend, subtrahend);
  save_archive_file(vec.map(), out);
  VectorStats stats = vector_stats(vec);
  print_json({{"out", out},
              {"tensors", vec.map().entries().size()},
              {"elements", vec.map().total_elements()},
              {"l2_norm", stats.l2_norm_a}});
}

// apply BASE VECTOR --lambda L [--allow-negative] --out FILE
void cmd_apply(const std::string& base_path, const std::string& vector_path,
               double lambda, bool allow_negative, const std::string& out) {
  TensorMap base = load_map(base_path);
  TaskVector vec = TaskVector::from_map(load_map(vector_path));
  ScalingFactor factor = ScalingFactor::checked(lambda, allow_negative);
  TensorMap corrected = apply(base, vec, factor);
  save_archive_file(corrected, out);
  print_json({{"out", out},
              {"lambda", lambda},
              {"tensors", corrected.entries().size()},
              {"elements", corrected.total_elements()}});
}

// average V1 V2 ... --out FILE
void cmd_average(const std::vector<std::string>& paths,
                 const std::string& out) {
  std::vector<TaskVector> vectors;
  vectors.reserve(paths.size());
  for (const std::string& path : paths) {
    vectors.push_back(TaskVector::from_map(load_map(path)));
  }
  TaskVector mean = average(vectors);
  save_archive_file(mean.map(), out);
  VectorStats stats = vector_stats(mean);
  print_json({{"out", out},
              {"inputs", paths.size()},
              {"tensors", mean.map().entries().size()},
              {"l2_norm", stats.l2_norm_a}});
}

// stats A [B]
void cmd_stats(const std::string& a_path,
               const std::optional<std::string>& b_path) {
  TaskVector a = TaskVector::from_map(load_map(a_path));
  json doc;
  if (b_path.has_value()) {
    TaskVector b = TaskVector::from_map(load_map(*b_path));
    VectorStats stats = vector_stats(a, &b);
    doc = {{"l2_norm", stats.l2_norm_a},
           {"l2_norm_other", stats.l2_norm_b.value()},
           {"cosine",
            stats.cosine.has_value() ? json(*stats.cosine) : json(nullptr)},
           {"cosine_undefined", stats.cosine_undefined},
           {"tensors", a.map().entries().size()},
           {"elements", a.map().total_elements()}};
  } else {
    VectorStats stats = vector_stats(a);
    doc = {{"l2_norm", stats.l2_norm_a},
           {"tensors", a.map().entries().size()},
           {"elements", a.map().total_elements()}};
  }
  print_json(doc);
}

// wer --ref FILE --hyp FILE [--no-normalize] [--allow-missing]
void cmd_wer(const std::string& ref_path, const std::string& hyp_path,
             bool no_normalize, bool allow_missing) {
  ManifestLoadOptions options;
  options.check_logprob_alignment = false;
  std::vector<UtteranceRecord> refs = load_manifest_file(ref_path, options);
  std::vector<UtteranceRecord> hyps = load_manifest_file(hyp_path, options);

  std::map<std::string, const UtteranceRecord*> hyp_by_id;
  for (const UtteranceRecord& rec : hyps) hyp_by_id[rec.id] = &rec;

  std::vector<UtteranceRecord> joined;
  std::vector<std::string> missing;
  for (const UtteranceRecord& ref : refs) {
    if (!ref.reference.has_value()) {
      throw_data("reference manifest entry '" + ref.id +
                 "' has no 'reference' field");
    }
    auto it = hyp_by_id.find(ref.id);
    if (it == hyp_by_id.end()) {
      missing.push_back(ref.id);
      continue;
    }
    if (!it->second->hypothesis.has_value()) {
      throw_data("hypothesis manifest entry '" + ref.id +
                 "' has no 'hypothesis' field");
    }
    UtteranceRecord rec;
    rec.id = ref.id;
    rec.reference = ref.reference;
    rec.hypothesis = it->second->hypothesis;
    joined.push_back(std::move(rec));
  }
  if (!missing.empty() && !allow_missing) {
    throw_data("hypothesis manifest is missing " +
               std::to_string(missing.size()) +
               " reference id(s), first '" + missing.front() +
               "' (pass --allow-missing to score the intersection)");
  }
  if (joined.empty()) throw_data("no overlapping utterance ids to score");

  NormalizeConfig normalize;
  if (no_normalize) {
    normalize.lowercase = false;
    normalize.strip_punctuation = false;
  }
  WerReport report = corpus_wer(joined, normalize);
  print_json({{"corpus_wer", report.corpus_wer},
              {"substitutions", report.corpus.substitutions},
              {"deletions", report.corpus.deletions},
              {"insertions", report.corpus.insertions},
              {"hits", report.corpus.hits},
              {"ref_words", report.corpus.ref_len},
              {"utterances", joined.size()},
              {"skipped", missing.size()}});
}

// filter-conf --manifest FILE --level Q2 --out FILE
void cmd_filter_conf(const std::string& manifest_path,
                     const std::string& level_text, const std::string& out) {
  QuartileLevel level = parse_quartile_level(level_text);
  std::vector<UtteranceRecord> records = load_manifest_file(manifest_path);

  std::vector<ConfidenceRecord> scored;
  scored.reserve(records.size());
  for (const UtteranceRecord& rec : records) {
    scored.push_back(confidence_score(rec));
  }
  FilterResult result = quartile_filter(scored, level);

  std::map<std::string, const UtteranceRecord*> by_id;
  for (const UtteranceRecord& rec : records) by_id[rec.id] = &rec;
  std::vector<UtteranceRecord> kept;
  kept.reserve(result.kept_ids.size());
  for (const std::string& id : result.kept_ids) kept.push_back(*by_id.at(id));
  save_manifest_file(kept, out);

  note(json({{"threshold", result.threshold},
             {"kept", result.kept_ids.size()},
             {"total", result.total},
             {"keep_rate", result.keep_rate()}})
           .dump());
  print_json({{"out", out},
              {"level", level_text},
              {"threshold", result.threshold},
              {"kept", result.kept_ids.size()},
              {"total", result.total},
              {"keep_rate", result.keep_rate()}});
}

// cluster --embeddings FILE --k K [--seed S] --out FILE
void cmd_cluster(const std::string& embeddings_path, int k,
                 std::uint64_t seed, const std::string& out) {
  EmbeddingSet embeddings = load_embeddings_file(embeddings_path);
  ClusterAssignment assignment = kmeans(embeddings, k, seed);
  write_text_file(out, assignment_to_json(assignment));

  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
  for (int label : assignment.labels) {
    sizes[static_cast<std::size_t>(label)] += 1;
  }
  std::size_t empty = 0;
  for (std::size_t size : sizes) {
    if (size == 0) empty += 1;
  }
  print_json({{"out", out},
              {"k", k},
              {"seed", seed},
              {"inertia", assignment.inertia},
              {"cluster_sizes", sizes},
              {"empty_clusters", empty}});
}

// cluster split --assign FILE --manifest FILE --out-dir DIR
void cmd_cluster_split(const std::string& assign_path,
                       const std::string& manifest_path,
                       const std::string& out_dir) {
  ClusterAssignment assignment = load_assignment_file(assign_path);
  ManifestLoadOptions options;
  options.check_logprob_alignment = false;
  std::vector<UtteranceRecord> records =
      load_manifest_file(manifest_path, options);

  std::vector<std::vector<UtteranceRecord>> buckets(
      static_cast<std::size_t>(assignment.k));
  for (const UtteranceRecord& rec : records) {
    buckets[static_cast<std::size_t>(assignment.label_of(rec.id))].push_back(
        rec);
  }

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw_data("cannot create directory '" + out_dir + "'");

  json files = json::array();
  for (std::size_t c = 0; c < buckets.size(); ++c) {
    std::filesystem::path path =
        std::filesystem::path(out_dir) /
        ("cluster_" + std::to_string(c) + ".jsonl");
    save_manifest_file(buckets[c], path);
    files.push_back({{"cluster", c},
                     {"path", path.string()},
                     {"utterances", buckets[c].size()}});
  }
  print_json({{"out_dir", out_dir},
              {"k", assignment.k},
              {"files", std::move(files)}});
}

// search-lambda --base A --vector V --dev REFS (--hyp-dir D | --cmd T) ...
void cmd_search_lambda(const std::string& base_path,
                       const std::string& vector_path,
                       const std::string& dev_path,
                       const std::optional<std::string>& hyp_dir,
                       const std::optional<std::string>& cmd,
                       const std::optional<std::string>& grid_text,
                       bool allow_negative) {
  TensorMap base = load_map(base_path);
  TaskVector vec = TaskVector::from_map(load_map(vector_path));
  ManifestLoadOptions options;
  options.check_logprob_alignment = false;
  std::vector<UtteranceRecord> dev = load_manifest_file(dev_path, options);

  std::shared_ptr<TranscriptionBackend> backend;
  if (hyp_dir.has_value()) {
    backend = std::make_shared<PrecomputedBackend>(*hyp_dir);
  } else {
    backend = std::make_shared<CommandBackend>(*cmd);
  }

  LambdaGrid grid = grid_text.has_value() ? LambdaGrid::parse(*grid_text)
                                          : LambdaGrid::default_grid();
  auto evaluate =
      checkpoint_evaluator(base, vec, dev, backend, allow_negative);
  LambdaSearchResult result = grid_search(grid, evaluate);

  json trace = json::array();
  for (const auto& [lambda, wer] : result.evaluated) {
    trace.push_back({{"lambda", lambda}, {"wer", wer}});
  }
  print_json({{"chosen_lambda", result.chosen_lambda},
              {"chosen_wer", result.chosen_wer},
              {"evaluated", std::move(trace)}});
}

toy::ToyRunConfig resolve_toy_config(const std::optional<std::string>& path,
                                     const std::optional<std::uint64_t>& seed) {
  toy::ToyRunConfig config;
  if (path.has_value()) {
    config = toy::run_config_from_json(read_text_file(*path), *path);
  } else {
    config = toy::default_run_config();
    if (!seed.has_value()) {
      throw_usage("without --config, --seed is required");
    }
  }
  if (seed.has_value()) config.world.master_seed = *seed;
  return config;
}

void write_or_print(const std::optional<std::string>& out,
                    const std::string& text, const json& summary) {
  if (out.has_value()) {
    write_text_file(*out, text);
    print_json(summary);
  } else {
    std::cout << text << "\n";
  }
}

// toy run [--config F] [--seed S] [--seeds N] [--out F] [--emit-manifests D]
void cmd_toy_run(const std::optional<std::string>& config_path,
                 const std::optional<std::uint64_t>& seed, int n_seeds,
                 const std::optional<std::string>& out,
                 const std::optional<std::string>& manifest_dir, int k) {
  toy::ToyRunConfig config = resolve_toy_config(config_path, seed);

  if (manifest_dir.has_value()) {
    toy::ToyWorld world = toy::generate_world(config.world);
    toy::emit_manifests(world, config.experiment, *manifest_dir);
    note("wrote manifests to " + *manifest_dir);
  }

  if (n_seeds > 1) {
    if (k != 1) throw_usage("--seeds currently supports --k 1 only");
    toy::MultiSeedReport report = toy::run_seeds(config, n_seeds);
    std::string text = toy::multi_seed_report_to_json(report);
    write_or_print(
        out, text,
        {{"out", out.value_or("")},
         {"runs", report.summary.runs},
         {"mean_relative_reduction", report.summary.mean_relative_reduction},
         {"nonnegative_reductions", report.summary.nonnegative_reductions}});
    return;
  }

  toy::ToyWorld world = toy::generate_world(config.world);
  toy::ExperimentReport report =
      k == 1 ? toy::run_pseudo2real(world, config.experiment)
             : toy::run_pseudo2real_sc(world, config.experiment, k);
  std::string text = toy::report_to_json(report);
  write_or_print(out, text,
                 {{"out", out.value_or("")},
                  {"chosen_lambda", report.chosen_lambda},
                  {"wer_pseudo", report.wer_pseudo},
                  {"wer_corrected", report.wer_corrected},
                  {"relative_reduction", report.relative_reduction}});
}

void cmd_toy_sweep_lambda(const std::optional<std::string>& config_path,
                          const std::optional<std::uint64_t>& seed,
                          const std::optional<std::string>& out) {
  toy::ToyRunConfig config = resolve_toy_config(config_path, seed);
  toy::ToyWorld world = toy::generate_world(config.world);
  std::vector<toy::LambdaSweepPoint> points =
      toy::sweep_lambda(world, config.experiment);
  std::string text = toy::lambda_sweep_to_json(points);
  write_or_print(out, text,
                 {{"out", out.value_or("")}, {"points", points.size()}});
}

void cmd_toy_sweep_k(const std::optional<std::string>& config_path,
                     const std::optional<std::uint64_t>& seed,
                     const std::vector<int>& ks,
                     const std::optional<std::string>& out) {
  toy::ToyRunConfig config = resolve_toy_config(config_path, seed);
  toy::ToyWorld world = toy::generate_world(config.world);
  std::vector<toy::KSweepPoint> points =
      toy::sweep_k(world, config.experiment, ks);
  std::string text = toy::k_sweep_to_json(points);
  write_or_print(out, text,
                 {{"out", out.value_or("")}, {"points", points.size()}});
}

void cmd_toy_default_config() {
  std::cout << toy::run_config_to_json(toy::default_run_config()) << "\n";
}

int run(int argc, char** argv) {
  CLI::App app{"Parameter-space correction toolkit for label-quality domain "
               "adaptation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));
  int threads = 1;
  app.add_flag("--quiet", g_quiet, "Suppress progress notes on stderr");
  app.add_option("--threads", threads, "Worker threads (never affects results)")
      ->check(CLI::PositiveNumber);

  // diff
  std::string diff_minuend, diff_subtrahend, diff_out;
  CLI::App* diff_cmd = app.add_subcommand(
      "diff", "Subtract two checkpoints into a correction vector");
  diff_cmd->add_option("minuend", diff_minuend, "Archive trained on real labels")
      ->required();
  diff_cmd
      ->add_option("subtrahend", diff_subtrahend,
                   "Archive trained on pseudo labels")
      ->required();
  diff_cmd->add_option("--out", diff_out, "Output archive path")->required();

  // apply
  std::string apply_base, apply_vector, apply_out;
  double apply_lambda = 0.0;
  bool apply_allow_negative = false;
  CLI::App* apply_cmd = app.add_subcommand(
      "apply", "Add a scaled correction vector to a checkpoint");
  apply_cmd->add_option("base", apply_base, "Checkpoint archive to correct")
      ->required();
  apply_cmd->add_option("vector", apply_vector, "Correction vector archive")
      ->required();
  apply_cmd->add_option("--lambda", apply_lambda, "Scaling factor")
      ->required();
  apply_cmd->add_flag("--allow-negative", apply_allow_negative,
                      "Permit negative scaling factors");
  apply_cmd->add_option("--out", apply_out, "Output archive path")->required();

  // average
  std::vector<std::string> average_inputs;
  std::string average_out;
  CLI::App* average_cmd = app.add_subcommand(
      "average", "Average correction vectors elementwise");
  average_cmd
      ->add_option("vectors", average_inputs, "Correction vector archives")
      ->required()
      ->expected(-1);
  average_cmd->add_option("--out", average_out, "Output archive path")
      ->required();

  // stats
  std::string stats_a;
  std::optional<std::string> stats_b;
  CLI::App* stats_cmd = app.add_subcommand(
      "stats", "Norms of one archive, plus cosine against a second");
  stats_cmd->add_option("a", stats_a, "Archive")->required();
  stats_cmd->add_option("b", stats_b, "Second archive for cosine similarity");

  // wer
  std::string wer_ref, wer_hyp;
  bool wer_no_normalize = false, wer_allow_missing = false;
  CLI::App* wer_cmd =
      app.add_subcommand("wer", "Score a hypothesis manifest against references");
  wer_cmd->add_option("--ref", wer_ref, "Reference manifest (JSONL)")
      ->required();
  wer_cmd->add_option("--hyp", wer_hyp, "Hypothesis manifest (JSONL)")
      ->required();
  wer_cmd->add_flag("--no-normalize", wer_no_normalize,
                    "Compare text verbatim (keep case and punctuation)");
  wer_cmd->add_flag("--allow-missing", wer_allow_missing,
                    "Score the id intersection instead of failing");

  // filter-conf
  std::string filter_manifest, filter_level = "Q2", filter_out;
  CLI::App* filter_cmd = app.add_subcommand(
      "filter-conf",
      "Keep utterances at or above a confidence quartile threshold");
  filter_cmd
      ->add_option("--manifest", filter_manifest,
                   "Manifest with hypotheses and word_logprobs")
      ->required();
  filter_cmd->add_option("--level", filter_level,
                         "Quartile threshold: Q1, Q2, or Q3");
  filter_cmd->add_option("--out", filter_out, "Filtered manifest path")
      ->required();

  // cluster (+ split)
  std::string cluster_embeddings, cluster_out;
  int cluster_k = 0;
  std::uint64_t cluster_seed = 0;
  CLI::App* cluster_cmd = app.add_subcommand(
      "cluster", "K-means over speaker embeddings");
  cluster_cmd
      ->add_option("--embeddings", cluster_embeddings,
                   "Embedding manifest (JSONL)");
  cluster_cmd->add_option("--k", cluster_k, "Number of clusters");
  cluster_cmd->add_option("--seed", cluster_seed, "Clustering seed");
  cluster_cmd->add_option("--out", cluster_out, "Assignment JSON path");

  std::string split_assign, split_manifest, split_out_dir;
  CLI::App* split_cmd = cluster_cmd->add_subcommand(
      "split", "Partition a manifest by a cluster assignment");
  split_cmd->add_option("--assign", split_assign, "Assignment JSON")
      ->required();
  split_cmd->add_option("--manifest", split_manifest, "Manifest to partition")
      ->required();
  split_cmd->add_option("--out-dir", split_out_dir, "Output directory")
      ->required();

  // search-lambda
  std::string search_base, search_vector, search_dev;
  std::optional<std::string> search_hyp_dir, search_cmd_tpl, search_grid;
  bool search_allow_negative = false;
  CLI::App* search_cmd = app.add_subcommand(
      "search-lambda",
      "Grid-search the scaling factor against dev WER");
  search_cmd->add_option("--base", search_base, "Checkpoint archive to correct")
      ->required();
  search_cmd->add_option("--vector", search_vector, "Correction vector archive")
      ->required();
  search_cmd
      ->add_option("--dev", search_dev, "Dev reference manifest (JSONL)")
      ->required();
  search_cmd->add_option("--hyp-dir", search_hyp_dir,
                         "Directory of precomputed hyp_<lambda>.jsonl files");
  search_cmd->add_option(
      "--cmd", search_cmd_tpl,
      "Transcriber command with {checkpoint} and {manifest} placeholders");
  search_cmd->add_option("--grid", search_grid,
                         "Grid as start:stop:step (default 0.1:1.0:0.1)");
  search_cmd->add_flag("--allow-negative", search_allow_negative,
                       "Permit negative scaling factors");

  // toy
  CLI::App* toy_cmd = app.add_subcommand(
      "toy", "Synthetic end-to-end experiments");
  toy_cmd->require_subcommand(1);

  std::optional<std::string> toy_config;
  std::optional<std::uint64_t> toy_seed;
  std::optional<std::string> toy_out, toy_manifest_dir;
  int toy_n_seeds = 1, toy_k = 1;
  CLI::App* toy_run_cmd = toy_cmd->add_subcommand(
      "run", "Run the correction workflow on a generated world");
  toy_run_cmd->add_option("--config", toy_config, "Run config JSON path");
  toy_run_cmd->add_option("--seed", toy_seed,
                          "Master seed (overrides the config's)");
  toy_run_cmd->add_option("--seeds", toy_n_seeds,
                          "Number of derived-seed repetitions")
      ->check(CLI::PositiveNumber);
  toy_run_cmd->add_option("--k", toy_k,
                          "Speaker clusters (1 = plain correction)")
      ->check(CLI::PositiveNumber);
  toy_run_cmd->add_option("--out", toy_out, "Report JSON path");
  toy_run_cmd->add_option("--emit-manifests", toy_manifest_dir,
                          "Also write the world's manifests to a directory");

  std::optional<std::string> sweep_config, sweep_out;
  std::optional<std::uint64_t> sweep_seed;
  CLI::App* sweep_lambda_cmd = toy_cmd->add_subcommand(
      "sweep-lambda", "Score every grid lambda on dev and target test");
  sweep_lambda_cmd->add_option("--config", sweep_config, "Run config JSON path");
  sweep_lambda_cmd->add_option("--seed", sweep_seed,
                               "Master seed (overrides the config's)");
  sweep_lambda_cmd->add_option("--out", sweep_out, "Sweep JSON path");

  std::optional<std::string> sweepk_config, sweepk_out;
  std::optional<std::uint64_t> sweepk_seed;
  std::vector<int> sweepk_ks{1, 2, 4, 8};
  CLI::App* sweep_k_cmd = toy_cmd->add_subcommand(
      "sweep-k", "Run the clustered variant across cluster counts");
  sweep_k_cmd->add_option("--config", sweepk_config, "Run config JSON path");
  sweep_k_cmd->add_option("--seed", sweepk_seed,
                          "Master seed (overrides the config's)");
  sweep_k_cmd->add_option("--ks", sweepk_ks, "Cluster counts to try")
      ->delimiter(',');
  sweep_k_cmd->add_option("--out", sweepk_out, "Sweep JSON path");

  CLI::App* default_config_cmd = toy_cmd->add_subcommand(
      "default-config", "Print the default run config JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help and --version exit 0; real parse failures are usage errors.
    int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ErrorKind::kUsage);
  }

  try {
    set_thread_count(threads);
    if (diff_cmd->parsed()) {
      cmd_diff(diff_minuend, diff_subtrahend, diff_out);
    } else if (apply_cmd->parsed()) {
      cmd_apply(apply_base, apply_vector, apply_lambda, apply_allow_negative,
                apply_out);
    } else if (average_cmd->parsed()) {
      cmd_average(average_inputs, average_out);
    } else if (stats_cmd->parsed()) {
      cmd_stats(stats_a, stats_b);
    } else if (wer_cmd->parsed()) {
      cmd_wer(wer_ref, wer_hyp, wer_no_normalize, wer_allow_missing);
    } else if (filter_cmd->parsed()) {
      cmd_filter_conf(filter_manifest, filter_level, filter_out);
    } else if (cluster_cmd->parsed()) {
      if (split_cmd->parsed()) {
        cmd_cluster_split(split_assign, split_manifest, split_out_dir);
      } else {
        if (cluster_embeddings.empty() || cluster_k == 0 ||
            cluster_out.empty()) {
          throw_usage("cluster requires --embeddings, --k, and --out");
        }
        cmd_cluster(cluster_embeddings, cluster_k, cluster_seed, cluster_out);
      }
    } else if (search_cmd->parsed()) {
      if (search_hyp_dir.has_value() == search_cmd_tpl.has_value()) {
        throw_usage("search-lambda needs exactly one of --hyp-dir or --cmd");
      }
      cmd_search_lambda(search_base, search_vector, search_dev, search_hyp_dir,
                        search_cmd_tpl, search_grid, search_allow_negative);
    } else if (toy_cmd->parsed()) {
      if (toy_run_cmd->parsed()) {
        cmd_toy_run(toy_config, toy_seed, toy_n_seeds, toy_out,
                    toy_manifest_dir, toy_k);
      } else if (sweep_lambda_cmd->parsed()) {
        cmd_toy_sweep_lambda(sweep_config, sweep_seed, sweep_out);
      } else if (sweep_k_cmd->parsed()) {
        cmd_toy_sweep_k(sweepk_config, sweepk_seed, sweepk_ks, sweepk_out);
      } else if (default_config_cmd->parsed()) {
        cmd_toy_default_config();
      }
    }
  } catch (const LambdaSearchError& e) {
    json trace = json::array();
    for (const auto& [lambda, wer] : e.partial_trace()) {
      trace.push_back({{"lambda", lambda}, {"wer", wer}});
    }
    json doc = {{"error",
                 {{"kind", error_kind_name(e.kind())},
                  {"message", e.what()},
                  {"failed_lambda", e.failed_lambda()},
                  {"partial_trace", std::move(trace)}}}};
    std::cerr << doc.dump() << "\n";
    return static_cast<int>(e.kind());
  } catch (const Error& e) {
    json doc = {{"error",
                 {{"kind", error_kind_name(e.kind())},
                  {"message", e.what()}}}};
    std::cerr << doc.dump() << "\n";
    return static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    json doc = {{"error",
                 {{"kind", "computation"}, {"message", e.what()}}}};
    std::cerr << doc.dump() << "\n";
    return static_cast<int>(ErrorKind::kComputation);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
