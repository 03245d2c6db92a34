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

#include "p2r/toy.hpp"

#include <set>

#include "json.hpp"

#include "p2r/clustering.hpp"
#include "p2r/common.hpp"
#include "p2r/lambda_search.hpp"
#include "p2r/manifest.hpp"
#include "p2r/parallel.hpp"
#include "p2r/rng.hpp"
#include "p2r/wer.hpp"

namespace p2r::toy {

namespace {

using nlohmann::json;

constexpr std::uint64_t kSeedClustering = 50;
constexpr std::uint64_t kSeedMultiRun = 6;

std::vector<ToyUtterance> gather(const ToyWorld& world,
                                 std::span<const std::string> accents,
                                 Split split) {
  std::vector<ToyUtterance> pool;
  for (const std::string& accent : accents) {
    const auto& utts = world.utterances(accent, split);
    pool.insert(pool.end(), utts.begin(), utts.end());
  }
  return pool;
}

std::vector<std::vector<int>> teacher_labels(
    const ToyModel& teacher, std::span<const ToyUtterance> utterances) {
  std::vector<std::vector<int>> labels;
  labels.reserve(utterances.size());
  for (const ToyUtterance& utt : utterances) {
    labels.push_back(greedy_decode(teacher, utt).words);
  }
  return labels;
}

double score_model(const ToyModel& model,
                   std::span<const ToyUtterance> utterances) {
  std::vector<UtteranceRecord> records;
  records.reserve(utterances.size());
  for (const ToyUtterance& utt : utterances) {
    UtteranceRecord rec;
    rec.id = utt.id;
    rec.reference = words_to_text(utt.words);
    rec.hypothesis = words_to_text(greedy_decode(model, utt).words);
    records.push_back(std::move(rec));
  }
  return corpus_wer(records).corpus_wer;
}

// Everything independent of the clustering choice: base models, pools, and
// teacher labels. Built once and shared across k values.
struct BaseState {
  ToyModel pretrained;
  ToyModel source_real;
  ToyModel source_pseudo;
  ToyModel target_pseudo;
  ToyModel target_topline;
  std::vector<ToyUtterance> source_train, source_dev;
  std::vector<ToyUtterance> target_train, target_test;
  std::vector<std::vector<int>> source_pseudo_labels;
  std::vector<std::vector<int>> target_pseudo_labels;
};

void validate_experiment(const ToyWorld& world, const ExperimentConfig& cfg) {
  if (world.accent_index(cfg.pretrain_accent) < 0) {
    throw_data("pretrain accent '" + cfg.pretrain_accent +
               "' is not in the world");
  }
  if (cfg.source_accents.empty()) throw_data("no source accents configured");
  if (cfg.target_accents.empty()) throw_data("no target accents configured");
  for (const std::string& a : cfg.source_accents) {
    if (world.accent_index(a) < 0) {
      throw_data("source accent '" + a + "' is not in the world");
    }
  }
  for (const std::string& a : cfg.target_accents) {
    if (world.accent_index(a) < 0) {
      throw_data("target accent '" + a + "' is not in the world");
    }
  }
}

BaseState build_base(const ToyWorld& world, const ExperimentConfig& cfg) {
  validate_experiment(world, cfg);
  BaseState base;

  std::vector<std::string> pretrain{cfg.pretrain_accent};
  std::vector<ToyUtterance> pretrain_train =
      gather(world, pretrain, Split::kTrain);
  if (pretrain_train.empty()) throw_data("pretrain train split is empty");

  base.source_train = gather(world, cfg.source_accents, Split::kTrain);
  base.source_dev = gather(world, cfg.source_accents, Split::kDev);
  base.target_train = gather(world, cfg.target_accents, Split::kTrain);
  base.target_test = gather(world, cfg.target_accents, Split::kTest);
  if (base.source_train.empty()) throw_data("source train split is empty");
  if (base.source_dev.empty()) throw_data("source dev split is empty");
  if (base.target_train.empty()) throw_data("target train split is empty");
  if (base.target_test.empty()) throw_data("target test split is empty");

  ToyModel zero =
      ToyModel::zeros(world.config.vocab_size, world.config.feature_dim);
  base.pretrained = train(zero, pretrain_train, cfg.pretrain);

  base.source_pseudo_labels =
      teacher_labels(base.pretrained, base.source_train);
  base.target_pseudo_labels =
      teacher_labels(base.pretrained, base.target_train);

  base.source_real = train(base.pretrained, base.source_train, cfg.train);
  base.source_pseudo = train(base.pretrained, base.source_train, cfg.train,
                             base.source_pseudo_labels);
  base.target_pseudo = train(base.pretrained, base.target_train, cfg.train,
                             base.target_pseudo_labels);
  base.target_topline = train(base.pretrained, base.target_train, cfg.train);
  return base;
}

LambdaGrid experiment_grid(const ExperimentConfig& cfg) {
  if (cfg.lambda_grid.empty()) return LambdaGrid::default_grid();
  return LambdaGrid::from_values(cfg.lambda_grid);
}

TaskVector plain_correction(const BaseState& base) {
  TensorMap real = base.source_real.to_map(Role::kRealFinetuned);
  TensorMap pseudo = base.source_pseudo.to_map(Role::kPseudoFinetuned);
  return diff(real, pseudo);
}

// One correction vector per non-empty speaker cluster, averaged. Clusters
// that end up empty contribute nothing; clusters_used reports how many
// were averaged.
TaskVector sc_correction(const ToyWorld& world, const ExperimentConfig& cfg,
                         const BaseState& base, int k, int* clusters_used,
                         std::vector<int>* labels_out) {
  EmbeddingSet embeddings;
  embeddings.dim = static_cast<std::size_t>(world.config.feature_dim);
  for (const ToyUtterance& utt : base.source_train) {
    embeddings.ids.push_back(utt.id);
    embeddings.vectors.push_back(utterance_embedding(utt));
  }
  ClusterAssignment assignment =
      kmeans(embeddings, k, derive_seed(world.config.master_seed,
                                        {kSeedClustering}));
  if (labels_out != nullptr) *labels_out = assignment.labels;

  std::vector<TaskVector> corrections;
  for (int c = 0; c < k; ++c) {
    std::vector<ToyUtterance> cluster_utts;
    std::vector<std::vector<int>> cluster_pseudo;
    for (std::size_t i = 0; i < base.source_train.size(); ++i) {
      if (assignment.labels[i] == c) {
        cluster_utts.push_back(base.source_train[i]);
        cluster_pseudo.push_back(base.source_pseudo_labels[i]);
      }
    }
    if (cluster_utts.empty()) continue;
    ToyModel real = train(base.pretrained, cluster_utts, cfg.train);
    ToyModel pseudo =
        train(base.pretrained, cluster_utts, cfg.train, cluster_pseudo);
    corrections.push_back(diff(real.to_map(Role::kRealFinetuned),
                               pseudo.to_map(Role::kPseudoFinetuned)));
  }
  if (clusters_used != nullptr) {
    *clusters_used = static_cast<int>(corrections.size());
  }
  return average(corrections);
}

double accent_wer(const ToyWorld& world, const ToyModel& model,
                  const std::string& accent, Split split) {
  return score_model(model, world.utterances(accent, split));
}

ExperimentReport run_with_correction(const ToyWorld& world,
                                     const ExperimentConfig& cfg,
                                     const BaseState& base,
                                     const TaskVector& correction,
                                     int clusters, int clusters_used,
                                     PipelineArtifacts* artifacts) {
  LambdaGrid grid = experiment_grid(cfg);

  // The scaling is tuned on source dev, the only split with references,
  // by scoring the corrected target model itself there. The curve is
  // U-shaped: small lambda leaves teacher mistakes in place, large lambda
  // drags the target model past the shared correction into source-specific
  // territory.
  TensorMap target_pseudo_map =
      base.target_pseudo.to_map(Role::kPseudoFinetuned);
  auto evaluate = [&](double lambda) -> double {
    ScalingFactor factor =
        ScalingFactor::checked(lambda, cfg.allow_negative_lambda);
    ToyModel corrected =
        ToyModel::from_map(apply(target_pseudo_map, correction, factor));
    return score_model(corrected, base.source_dev);
  };
  LambdaSearchResult search = grid_search(grid, evaluate);

  ScalingFactor chosen =
      ScalingFactor::checked(search.chosen_lambda, cfg.allow_negative_lambda);
  ToyModel corrected =
      ToyModel::from_map(apply(target_pseudo_map, correction, chosen));

  ExperimentReport report;
  report.master_seed = world.config.master_seed;
  report.clusters = clusters;
  report.clusters_used = clusters_used;
  report.chosen_lambda = search.chosen_lambda;
  report.chosen_dev_wer = search.chosen_wer;
  report.dev_trace = search.evaluated;
  report.wer_pretrained = score_model(base.pretrained, base.target_test);
  report.wer_pseudo = score_model(base.target_pseudo, base.target_test);
  report.wer_corrected = score_model(corrected, base.target_test);
  report.wer_topline = score_model(base.target_topline, base.target_test);
  report.relative_reduction =
      report.wer_pseudo > 0.0
          ? (report.wer_pseudo - report.wer_corrected) / report.wer_pseudo
          : 0.0;
  for (const std::string& accent : cfg.target_accents) {
    AccentWers wers;
    wers.pretrained = accent_wer(world, base.pretrained, accent, Split::kTest);
    wers.pseudo = accent_wer(world, base.target_pseudo, accent, Split::kTest);
    wers.corrected = accent_wer(world, corrected, accent, Split::kTest);
    wers.topline = accent_wer(world, base.target_topline, accent, Split::kTest);
    report.per_target_accent.emplace_back(accent, wers);
  }

  if (artifacts != nullptr) {
    artifacts->pretrained = base.pretrained;
    artifacts->source_real = base.source_real;
    artifacts->source_pseudo = base.source_pseudo;
    artifacts->target_pseudo = base.target_pseudo;
    artifacts->target_corrected = corrected;
    artifacts->target_topline = base.target_topline;
    artifacts->correction = correction;
  }
  return report;
}

}  // namespace

ExperimentReport run_pseudo2real(const ToyWorld& world,
                                 const ExperimentConfig& config,
                                 PipelineArtifacts* artifacts) {
  BaseState base = build_base(world, config);
  TaskVector correction = plain_correction(base);
  return run_with_correction(world, config, base, correction, 1, 1, artifacts);
}

ExperimentReport run_pseudo2real_sc(const ToyWorld& world,
                                    const ExperimentConfig& config, int k,
                                    PipelineArtifacts* artifacts) {
  BaseState base = build_base(world, config);
  int clusters_used = 0;
  std::vector<int> labels;
  TaskVector correction =
      sc_correction(world, config, base, k, &clusters_used, &labels);
  ExperimentReport report = run_with_correction(world, config, base,
                                                correction, k, clusters_used,
                                                artifacts);
  if (artifacts != nullptr) artifacts->source_cluster_labels = labels;
  return report;
}

std::vector<LambdaSweepPoint> sweep_lambda(const ToyWorld& world,
                                           const ExperimentConfig& config) {
  BaseState base = build_base(world, config);
  TaskVector correction = plain_correction(base);
  LambdaGrid grid = experiment_grid(config);

  // Both columns score the same corrected target model: dev_wer on source
  // dev (the selection signal) and target_wer on target test (the outcome).
  TensorMap target_pseudo_map =
      base.target_pseudo.to_map(Role::kPseudoFinetuned);

  std::vector<LambdaSweepPoint> points;
  points.reserve(grid.values.size());
  for (double lambda : grid.values) {
    ScalingFactor factor =
        ScalingFactor::checked(lambda, config.allow_negative_lambda);
    ToyModel corrected =
        ToyModel::from_map(apply(target_pseudo_map, correction, factor));
    LambdaSweepPoint point;
    point.lambda = lambda;
    point.dev_wer = score_model(corrected, base.source_dev);
    point.target_wer = score_model(corrected, base.target_test);
    points.push_back(point);
  }
  return points;
}

std::vector<KSweepPoint> sweep_k(const ToyWorld& world,
                                 const ExperimentConfig& config,
                                 std::span<const int> ks) {
  if (ks.empty()) throw_usage("k sweep needs at least one k");
  BaseState base = build_base(world, config);

  std::vector<KSweepPoint> points;
  points.reserve(ks.size());
  for (int k : ks) {
    int clusters_used = 0;
    TaskVector correction =
        k == 1 ? plain_correction(base)
               : sc_correction(world, config, base, k, &clusters_used, nullptr);
    if (k == 1) clusters_used = 1;
    ExperimentReport report = run_with_correction(
        world, config, base, correction, k, clusters_used, nullptr);
    KSweepPoint point;
    point.k = k;
    point.clusters_used = clusters_used;
    point.chosen_lambda = report.chosen_lambda;
    point.wer_corrected = report.wer_corrected;
    points.push_back(point);
  }
  return points;
}

ToyRunConfig default_run_config() {
  // Calibrated demonstration regime. The teacher is given the same brief
  // budget as the students, so part of every teacher mistake is generic
  // under-training; the supervised source fine-tune recovers that signal
  // and the correction carries it to any accent. Source accents are
  // shifted harder than target accents: that keeps the correction large
  // enough that lambda near 1 overshoots on the target (the U-shape),
  // while the milder target shift keeps the shared component dominant.
  ToyRunConfig cfg;
  cfg.world.vocab_size = 32;
  cfg.world.feature_dim = 16;
  cfg.world.utterance_len = 8;
  cfg.world.speakers_per_accent = 6;
  cfg.world.utterances_per_speaker = {8, 3, 4};
  cfg.world.speaker_offset_scale = 0.15;
  cfg.world.frame_noise = 0.3;
  cfg.world.master_seed = 0;
  cfg.world.accents = {
      {"base", 0.0, 0.0},   {"south", 0.22, 0.22}, {"west", 0.22, 0.22},
      {"north", 0.14, 0.14}, {"east", 0.14, 0.14},
  };
  cfg.experiment.pretrain_accent = "base";
  cfg.experiment.source_accents = {"south", "west"};
  cfg.experiment.target_accents = {"north", "east"};
  cfg.experiment.lambda_grid = LambdaGrid::default_grid().values;
  cfg.experiment.pretrain.learning_rate = 0.1;
  cfg.experiment.pretrain.steps = 120;
  cfg.experiment.train.learning_rate = 0.1;
  cfg.experiment.train.steps = 120;
  cfg.experiment.allow_negative_lambda = false;
  return cfg;
}

namespace {

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                std::string_view source, const char* where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* key : allowed) {
      if (it.key() == key) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      throw_data(std::string(source) + ": unknown key '" + it.key() +
                 "' in " + where);
    }
  }
}

double get_number(const json& obj, const char* key, double fallback,
                  std::string_view source) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_number()) {
    throw_data(std::string(source) + ": '" + key + "' must be a number");
  }
  return obj.at(key).get<double>();
}

int get_int(const json& obj, const char* key, int fallback,
            std::string_view source) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_number_integer()) {
    throw_data(std::string(source) + ": '" + key + "' must be an integer");
  }
  return obj.at(key).get<int>();
}

}  // namespace

ToyRunConfig run_config_from_json(std::string_view text,
                                  std::string_view source_name) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw_data(std::string(source_name) + ": invalid JSON: " + e.what());
  }
  if (!root.is_object()) {
    throw_data(std::string(source_name) + ": config must be a JSON object");
  }
  check_keys(root, {"world", "experiment"}, source_name, "config");

  ToyRunConfig cfg = default_run_config();

  if (root.contains("world")) {
    const json& w = root["world"];
    if (!w.is_object()) {
      throw_data(std::string(source_name) + ": 'world' must be an object");
    }
    check_keys(w,
               {"vocab_size", "feature_dim", "utterance_len",
                "speakers_per_accent", "utterances_per_speaker",
                "speaker_offset_scale", "frame_noise", "accents",
                "master_seed"},
               source_name, "world");
    cfg.world.vocab_size =
        get_int(w, "vocab_size", cfg.world.vocab_size, source_name);
    cfg.world.feature_dim =
        get_int(w, "feature_dim", cfg.world.feature_dim, source_name);
    cfg.world.utterance_len =
        get_int(w, "utterance_len", cfg.world.utterance_len, source_name);
    cfg.world.speakers_per_accent = get_int(
        w, "speakers_per_accent", cfg.world.speakers_per_accent, source_name);
    cfg.world.speaker_offset_scale = get_number(
        w, "speaker_offset_scale", cfg.world.speaker_offset_scale, source_name);
    cfg.world.frame_noise =
        get_number(w, "frame_noise", cfg.world.frame_noise, source_name);
    if (w.contains("master_seed")) {
      if (!w["master_seed"].is_number_unsigned() &&
          !w["master_seed"].is_number_integer()) {
        throw_data(std::string(source_name) +
                   ": 'master_seed' must be a non-negative integer");
      }
      if (w["master_seed"].is_number_integer() &&
          w["master_seed"].get<long long>() < 0) {
        throw_data(std::string(source_name) + ": 'master_seed' must be >= 0");
      }
      cfg.world.master_seed = w["master_seed"].get<std::uint64_t>();
    }
    if (w.contains("utterances_per_speaker")) {
      const json& s = w["utterances_per_speaker"];
      if (!s.is_object()) {
        throw_data(std::string(source_name) +
                   ": 'utterances_per_speaker' must be an object");
      }
      check_keys(s, {"train", "dev", "test"}, source_name,
                 "utterances_per_speaker");
      cfg.world.utterances_per_speaker.train = get_int(
          s, "train", cfg.world.utterances_per_speaker.train, source_name);
      cfg.world.utterances_per_speaker.dev =
          get_int(s, "dev", cfg.world.utterances_per_speaker.dev, source_name);
      cfg.world.utterances_per_speaker.test = get_int(
          s, "test", cfg.world.utterances_per_speaker.test, source_name);
    }
    if (w.contains("accents")) {
      if (!w["accents"].is_array()) {
        throw_data(std::string(source_name) + ": 'accents' must be an array");
      }
      cfg.world.accents.clear();
      for (const json& a : w["accents"]) {
        if (!a.is_object() || !a.contains("name") || !a["name"].is_string()) {
          throw_data(std::string(source_name) +
                     ": each accent needs a string 'name'");
        }
        check_keys(a, {"name", "perturbation_scale", "bias_scale"},
                   source_name, "accent");
        AccentSpec spec;
        spec.name = a["name"].get<std::string>();
        spec.perturbation_scale =
            get_number(a, "perturbation_scale", 0.0, source_name);
        spec.bias_scale = get_number(a, "bias_scale", 0.0, source_name);
        cfg.world.accents.push_back(std::move(spec));
      }
    }
  }

  if (root.contains("experiment")) {
    const json& e = root["experiment"];
    if (!e.is_object()) {
      throw_data(std::string(source_name) + ": 'experiment' must be an object");
    }
    check_keys(e,
               {"pretrain_accent", "source_accents", "target_accents",
                "lambda_grid", "learning_rate", "steps",
                "pretrain_learning_rate", "pretrain_steps",
                "allow_negative_lambda"},
               source_name, "experiment");
    if (e.contains("pretrain_accent")) {
      if (!e["pretrain_accent"].is_string()) {
        throw_data(std::string(source_name) +
                   ": 'pretrain_accent' must be a string");
      }
      cfg.experiment.pretrain_accent = e["pretrain_accent"].get<std::string>();
    }
    auto read_accent_list = [&](const char* key,
                                std::vector<std::string>& out) {
      if (!e.contains(key)) return;
      if (!e[key].is_array()) {
        throw_data(std::string(source_name) + ": '" + key +
                   "' must be an array of strings");
      }
      out.clear();
      for (const json& v : e[key]) {
        if (!v.is_string()) {
          throw_data(std::string(source_name) + ": '" + key +
                     "' must be an array of strings");
        }
        out.push_back(v.get<std::string>());
      }
    };
    read_accent_list("source_accents", cfg.experiment.source_accents);
    read_accent_list("target_accents", cfg.experiment.target_accents);
    if (e.contains("lambda_grid")) {
      if (!e["lambda_grid"].is_array()) {
        throw_data(std::string(source_name) +
                   ": 'lambda_grid' must be an array of numbers");
      }
      cfg.experiment.lambda_grid.clear();
      for (const json& v : e["lambda_grid"]) {
        if (!v.is_number()) {
          throw_data(std::string(source_name) +
                     ": 'lambda_grid' must be an array of numbers");
        }
        cfg.experiment.lambda_grid.push_back(v.get<double>());
      }
    }
    cfg.experiment.train.learning_rate = get_number(
        e, "learning_rate", cfg.experiment.train.learning_rate, source_name);
    cfg.experiment.train.steps =
        get_int(e, "steps", cfg.experiment.train.steps, source_name);
    cfg.experiment.pretrain.learning_rate =
        get_number(e, "pretrain_learning_rate",
                   cfg.experiment.pretrain.learning_rate, source_name);
    cfg.experiment.pretrain.steps = get_int(
        e, "pretrain_steps", cfg.experiment.pretrain.steps, source_name);
    if (e.contains("allow_negative_lambda")) {
      if (!e["allow_negative_lambda"].is_boolean()) {
        throw_data(std::string(source_name) +
                   ": 'allow_negative_lambda' must be a boolean");
      }
      cfg.experiment.allow_negative_lambda =
          e["allow_negative_lambda"].get<bool>();
    }
  }
  return cfg;
}

std::string run_config_to_json(const ToyRunConfig& config) {
  json accents = json::array();
  for (const AccentSpec& a : config.world.accents) {
    accents.push_back({{"name", a.name},
                       {"perturbation_scale", a.perturbation_scale},
                       {"bias_scale", a.bias_scale}});
  }
  json root = {
      {"world",
       {{"vocab_size", config.world.vocab_size},
        {"feature_dim", config.world.feature_dim},
        {"utterance_len", config.world.utterance_len},
        {"speakers_per_accent", config.world.speakers_per_accent},
        {"utterances_per_speaker",
         {{"train", config.world.utterances_per_speaker.train},
          {"dev", config.world.utterances_per_speaker.dev},
          {"test", config.world.utterances_per_speaker.test}}},
        {"speaker_offset_scale", config.world.speaker_offset_scale},
        {"frame_noise", config.world.frame_noise},
        {"accents", std::move(accents)},
        {"master_seed", config.world.master_seed}}},
      {"experiment",
       {{"pretrain_accent", config.experiment.pretrain_accent},
        {"source_accents", config.experiment.source_accents},
        {"target_accents", config.experiment.target_accents},
        {"lambda_grid", config.experiment.lambda_grid},
        {"learning_rate", config.experiment.train.learning_rate},
        {"steps", config.experiment.train.steps},
        {"pretrain_learning_rate", config.experiment.pretrain.learning_rate},
        {"pretrain_steps", config.experiment.pretrain.steps},
        {"allow_negative_lambda", config.experiment.allow_negative_lambda}}}};
  return root.dump(2);
}

MultiSeedReport run_seeds(const ToyRunConfig& config, int n_seeds) {
  if (n_seeds < 1) throw_usage("need at least one seed");
  MultiSeedReport report;
  report.per_seed.resize(static_cast<std::size_t>(n_seeds));

  parallel_for(static_cast<std::size_t>(n_seeds), [&](std::size_t i) {
    ToyWorldConfig world_cfg = config.world;
    world_cfg.master_seed =
        derive_seed(config.world.master_seed, {kSeedMultiRun, i});
    ToyWorld world = generate_world(world_cfg);
    report.per_seed[i] = run_pseudo2real(world, config.experiment);
  });

  MultiSeedSummary& s = report.summary;
  s.runs = n_seeds;
  for (const ExperimentReport& r : report.per_seed) {
    s.mean_pretrained += r.wer_pretrained;
    s.mean_pseudo += r.wer_pseudo;
    s.mean_corrected += r.wer_corrected;
    s.mean_topline += r.wer_topline;
    s.mean_relative_reduction += r.relative_reduction;
    // Compared directly so a run whose pseudo WER is already zero only
    // counts as non-negative when the correction did not make it worse.
    if (r.wer_corrected <= r.wer_pseudo) s.nonnegative_reductions += 1;
  }
  double n = static_cast<double>(n_seeds);
  s.mean_pretrained /= n;
  s.mean_pseudo /= n;
  s.mean_corrected /= n;
  s.mean_topline /= n;
  s.mean_relative_reduction /= n;
  return report;
}

namespace {

json report_json(const ExperimentReport& r) {
  json trace = json::array();
  for (const auto& [lambda, wer] : r.dev_trace) {
    trace.push_back({lambda, wer});
  }
  json per_accent = json::object();
  for (const auto& [accent, wers] : r.per_target_accent) {
    per_accent[accent] = {{"pretrained", wers.pretrained},
                          {"pseudo", wers.pseudo},
                          {"corrected", wers.corrected},
                          {"topline", wers.topline}};
  }
  return {{"master_seed", r.master_seed},
          {"clusters", r.clusters},
          {"clusters_used", r.clusters_used},
          {"chosen_lambda", r.chosen_lambda},
          {"chosen_dev_wer", r.chosen_dev_wer},
          {"dev_trace", std::move(trace)},
          {"wer",
           {{"pretrained", r.wer_pretrained},
            {"pseudo", r.wer_pseudo},
            {"corrected", r.wer_corrected},
            {"topline", r.wer_topline}}},
          {"relative_reduction", r.relative_reduction},
          {"per_target_accent", std::move(per_accent)}};
}

}  // namespace

std::string report_to_json(const ExperimentReport& report) {
  return report_json(report).dump(2);
}

std::string multi_seed_report_to_json(const MultiSeedReport& report) {
  json runs = json::array();
  for (const ExperimentReport& r : report.per_seed) {
    runs.push_back(report_json(r));
  }
  const MultiSeedSummary& s = report.summary;
  json root = {{"runs", std::move(runs)},
               {"summary",
                {{"runs", s.runs},
                 {"nonnegative_reductions", s.nonnegative_reductions},
                 {"mean_pretrained", s.mean_pretrained},
                 {"mean_pseudo", s.mean_pseudo},
                 {"mean_corrected", s.mean_corrected},
                 {"mean_topline", s.mean_topline},
                 {"mean_relative_reduction", s.mean_relative_reduction}}}};
  return root.dump(2);
}

std::string lambda_sweep_to_json(std::span<const LambdaSweepPoint> points) {
  json arr = json::array();
  for (const LambdaSweepPoint& p : points) {
    arr.push_back({{"lambda", p.lambda},
                   {"dev_wer", p.dev_wer},
                   {"target_wer", p.target_wer}});
  }
  return json{{"points", std::move(arr)}}.dump(2);
}

std::string k_sweep_to_json(std::span<const KSweepPoint> points) {
  json arr = json::array();
  for (const KSweepPoint& p : points) {
    arr.push_back({{"k", p.k},
                   {"clusters_used", p.clusters_used},
                   {"chosen_lambda", p.chosen_lambda},
                   {"wer_corrected", p.wer_corrected}});
  }
  return json{{"points", std::move(arr)}}.dump(2);
}

void emit_manifests(const ToyWorld& world, const ExperimentConfig& config,
                    const std::filesystem::path& dir) {
  validate_experiment(world, config);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw_data("cannot create directory '" + dir.string() + "'");

  std::vector<std::string> accents;
  std::set<std::string> seen;
  auto add_accent = [&](const std::string& a) {
    if (seen.insert(a).second) accents.push_back(a);
  };
  add_accent(config.pretrain_accent);
  for (const std::string& a : config.source_accents) add_accent(a);
  for (const std::string& a : config.target_accents) add_accent(a);

  for (const std::string& accent : accents) {
    for (Split split : {Split::kTrain, Split::kDev, Split::kTest}) {
      const auto& utts = world.utterances(accent, split);
      if (utts.empty()) continue;
      std::vector<UtteranceRecord> records;
      records.reserve(utts.size());
      for (const ToyUtterance& utt : utts) {
        UtteranceRecord rec;
        rec.id = utt.id;
        rec.reference = words_to_text(utt.words);
        rec.speaker = utt.speaker;
        records.push_back(std::move(rec));
      }
      save_manifest_file(records, dir / ("refs_" + accent + "_" +
                                         split_name(split) + ".jsonl"));
    }
  }

  std::vector<std::string> pretrain{config.pretrain_accent};
  std::vector<ToyUtterance> pretrain_train =
      gather(world, pretrain, Split::kTrain);
  if (pretrain_train.empty()) throw_data("pretrain train split is empty");
  ToyModel zero =
      ToyModel::zeros(world.config.vocab_size, world.config.feature_dim);
  // Same budget as the pipeline's teacher, so the emitted hypotheses are
  // the pseudo labels the experiment actually trains on.
  ToyModel teacher = train(zero, pretrain_train, config.pretrain);

  std::set<std::string> adapt_accents(config.source_accents.begin(),
                                      config.source_accents.end());
  adapt_accents.insert(config.target_accents.begin(),
                       config.target_accents.end());
  for (const std::string& accent : accents) {
    if (adapt_accents.find(accent) == adapt_accents.end()) continue;
    const auto& utts = world.utterances(accent, Split::kTrain);
    if (utts.empty()) continue;
    std::vector<UtteranceRecord> records;
    records.reserve(utts.size());
    for (const ToyUtterance& utt : utts) {
      Decode decoded = greedy_decode(teacher, utt);
      UtteranceRecord rec;
      rec.id = utt.id;
      rec.hypothesis = words_to_text(decoded.words);
      rec.word_logprobs = decoded.logprobs;
      rec.speaker = utt.speaker;
      records.push_back(std::move(rec));
    }
    save_manifest_file(records, dir / ("pseudo_" + accent + "_train.jsonl"));
  }

  EmbeddingSet embeddings;
  embeddings.dim = static_cast<std::size_t>(world.config.feature_dim);
  std::vector<ToyUtterance> source_train =
      gather(world, config.source_accents, Split::kTrain);
  for (const ToyUtterance& utt : source_train) {
    embeddings.ids.push_back(utt.id);
    embeddings.vectors.push_back(utterance_embedding(utt));
  }
  write_text_file(dir / "embeddings_source_train.jsonl",
                  embeddings_to_jsonl(embeddings));
}

}  // namespace p2r::toy
