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

#ifndef P2R_TOY_HPP_
#define P2R_TOY_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "p2r/task_arithmetic.hpp"
#include "p2r/tensor.hpp"

// Synthetic end-to-end testbed: a linear "recognizer" over vocabulary-sized
// frame sequences, with accent shifts, speaker offsets, and frame noise.
// Small enough that the full correction workflow (pretrain, fine-tune on
// real and pseudo labels, correct, evaluate) runs in seconds and every step
// is exactly reproducible from one master seed.
namespace p2r::toy {

struct AccentSpec {
  std::string name;
  // Std dev of the entries of E in the accent transform A = I + E.
  double perturbation_scale = 0.0;
  // Std dev of the accent's additive bias.
  double bias_scale = 0.0;
};

// Utterances generated per speaker for each split.
struct SplitSizes {
  int train = 8;
  int dev = 3;
  int test = 4;
};

struct ToyWorldConfig {
  int vocab_size = 32;
  int feature_dim = 16;
  int utterance_len = 8;
  int speakers_per_accent = 6;
  SplitSizes utterances_per_speaker;
  double speaker_offset_scale = 0.2;
  double frame_noise = 0.3;
  std::vector<AccentSpec> accents;
  std::uint64_t master_seed = 0;
};

enum class Split { kTrain = 0, kDev = 1, kTest = 2 };
const char* split_name(Split split);

struct ToyUtterance {
  std::string id;       // "<accent>/<speaker>/<split>/<index>"
  std::string accent;
  std::string speaker;
  std::vector<int> words;     // ground truth, utterance_len entries
  std::vector<float> frames;  // utterance_len x feature_dim, row-major
};

// Frame t of an utterance is A_a * p(w_t) + b_a + o_s + noise, computed in
// f64 and stored in f32. Prototypes, transforms, offsets, and noise are all
// drawn from seeds derived from the master seed, so any subset of the world
// regenerates identically regardless of evaluation order.
struct ToyWorld {
  ToyWorldConfig config;
  std::vector<double> prototypes;  // vocab_size x feature_dim, row-major

  struct AccentParams {
    std::vector<double> transform;  // feature_dim x feature_dim, row-major
    std::vector<double> bias;       // feature_dim
  };
  std::vector<AccentParams> accent_params;  // parallel to config.accents

  // data[accent_index][split]
  std::vector<std::array<std::vector<ToyUtterance>, 3>> data;

  int accent_index(std::string_view name) const;  // -1 when absent
  const std::vector<ToyUtterance>& utterances(std::string_view accent,
                                              Split split) const;
};

ToyWorld generate_world(const ToyWorldConfig& config);

// Linear per-frame classifier: logits = W x + b.
struct ToyModel {
  int vocab_size = 0;
  int feature_dim = 0;
  std::vector<float> weights;  // vocab_size x feature_dim, row-major
  std::vector<float> bias;     // vocab_size

  static ToyModel zeros(int vocab_size, int feature_dim);
  // {"W": [V, d], "b": [V]}
  TensorMap to_map(Role role = Role::kUnspecified) const;
  static ToyModel from_map(const TensorMap& map);
};

struct TrainParams {
  double learning_rate = 0.1;
  int steps = 200;
};

struct TrainDiagnostics {
  // Mean per-frame cross-entropy before each update step.
  std::vector<double> loss_history;
};

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad_weights;
  std::vector<double> grad_bias;
};

// Mean per-frame softmax cross-entropy and its analytic gradient at f64
// parameters (w: V x d, b: V). labels_override, when non-empty, must be
// parallel to data and replaces each utterance's ground-truth words.
LossGrad loss_and_grad(std::span<const double> w, std::span<const double> b,
                       int vocab_size, int feature_dim,
                       std::span<const ToyUtterance> data,
                       std::span<const std::vector<int>> labels_override = {});

// Full-batch gradient descent from `init`. Internal state is f64; the
// result is narrowed to f32 once at the end. steps == 0 returns init
// bit-exactly. Throws kComputation with the step index if the loss goes
// non-finite.
ToyModel train(const ToyModel& init, std::span<const ToyUtterance> data,
               const TrainParams& params,
               std::span<const std::vector<int>> labels_override = {},
               TrainDiagnostics* diagnostics = nullptr);

struct Decode {
  std::vector<int> words;
  std::vector<double> logprobs;  // log-softmax of each chosen word
};

// Per-frame argmax; ties resolve to the lowest word id.
Decode greedy_decode(const ToyModel& model, const ToyUtterance& utterance);

// "w<id>" tokens joined with single spaces.
std::string words_to_text(std::span<const int> words);

// Mean frame vector, the utterance's speaker embedding.
std::vector<double> utterance_embedding(const ToyUtterance& utterance);

struct ExperimentConfig {
  std::string pretrain_accent;
  std::vector<std::string> source_accents;
  std::vector<std::string> target_accents;
  std::vector<double> lambda_grid;  // defaults to the standard ten-point grid
  // Pretraining runs to convergence so the teacher is as good as its data
  // allows; the adaptation fine-tunes (train) are deliberately brief, which
  // is what leaves a correctable gap between real and pseudo students.
  TrainParams pretrain{0.5, 200};
  TrainParams train;
  bool allow_negative_lambda = false;
};

struct AccentWers {
  double pretrained = 0.0;
  double pseudo = 0.0;
  double corrected = 0.0;
  double topline = 0.0;
};

struct ExperimentReport {
  std::uint64_t master_seed = 0;
  int clusters = 1;       // requested cluster count (1 = plain correction)
  int clusters_used = 1;  // non-empty clusters contributing to the average
  double chosen_lambda = 0.0;
  double chosen_dev_wer = 0.0;
  std::vector<std::pair<double, double>> dev_trace;  // (lambda, source dev WER)
  // Pooled over all target accents' test sets.
  double wer_pretrained = 0.0;
  double wer_pseudo = 0.0;
  double wer_corrected = 0.0;
  double wer_topline = 0.0;
  // (pseudo - corrected) / pseudo; 0 when pseudo is 0.
  double relative_reduction = 0.0;
  std::vector<std::pair<std::string, AccentWers>> per_target_accent;
};

// Intermediate checkpoints and the correction vector, for tests and
// manifest emission.
struct PipelineArtifacts {
  ToyModel pretrained;
  ToyModel source_real;
  ToyModel source_pseudo;
  ToyModel target_pseudo;
  ToyModel target_corrected;
  ToyModel target_topline;
  TaskVector correction;
  std::vector<int> source_cluster_labels;  // per source-train utterance; SC only
};

// The full correction workflow on a generated world: pretrain on the
// pretrain accent, fine-tune on source real/pseudo labels, take the
// parameter difference, pick lambda on source dev, correct the target
// pseudo-label model, and score target test. The topline fine-tunes on
// target ground truth.
ExperimentReport run_pseudo2real(const ToyWorld& world,
                                 const ExperimentConfig& config,
                                 PipelineArtifacts* artifacts = nullptr);

// Speaker-clustered variant: k-means over source-train utterance
// embeddings, one correction vector per non-empty cluster, applied as the
// scaled average. k = 1 reproduces run_pseudo2real exactly.
ExperimentReport run_pseudo2real_sc(const ToyWorld& world,
                                    const ExperimentConfig& config, int k,
                                    PipelineArtifacts* artifacts = nullptr);

struct LambdaSweepPoint {
  double lambda = 0.0;
  double target_wer = 0.0;  // corrected target model on target test
  double dev_wer = 0.0;     // corrected source model on source dev
};

// Scores every grid lambda on the target side (no argmin), exposing the
// shape of WER as a function of the correction strength.
std::vector<LambdaSweepPoint> sweep_lambda(const ToyWorld& world,
                                           const ExperimentConfig& config);

struct KSweepPoint {
  int k = 0;
  int clusters_used = 0;
  double chosen_lambda = 0.0;
  double wer_corrected = 0.0;
};

std::vector<KSweepPoint> sweep_k(const ToyWorld& world,
                                 const ExperimentConfig& config,
                                 std::span<const int> ks);

struct ToyRunConfig {
  ToyWorldConfig world;
  ExperimentConfig experiment;
};

// Calibrated defaults: five accents (one clean pretrain accent, two
// source, two target) with matched perturbation scales.
ToyRunConfig default_run_config();

ToyRunConfig run_config_from_json(std::string_view text,
                                  std::string_view source_name = "<config>");
std::string run_config_to_json(const ToyRunConfig& config);

struct MultiSeedSummary {
  int runs = 0;
  int nonnegative_reductions = 0;
  double mean_pretrained = 0.0;
  double mean_pseudo = 0.0;
  double mean_corrected = 0.0;
  double mean_topline = 0.0;
  double mean_relative_reduction = 0.0;
};

struct MultiSeedReport {
  std::vector<ExperimentReport> per_seed;
  MultiSeedSummary summary;
};

// Runs the experiment n_seeds times with per-run master seeds derived from
// the config's master seed. Runs are independent and execute in parallel
// without affecting results.
MultiSeedReport run_seeds(const ToyRunConfig& config, int n_seeds);

std::string report_to_json(const ExperimentReport& report);
std::string multi_seed_report_to_json(const MultiSeedReport& report);
std::string lambda_sweep_to_json(std::span<const LambdaSweepPoint> points);
std::string k_sweep_to_json(std::span<const KSweepPoint> points);

// Writes JSONL manifests for the generated world into a directory:
// reference manifests per accent and split, teacher pseudo-label
// hypotheses (with word log probabilities) for source/target train, and
// source-train utterance embeddings. These feed the file-based commands.
void emit_manifests(const ToyWorld& world, const ExperimentConfig& config,
                    const std::filesystem::path& dir);

}  // namespace p2r::toy

#endif  // P2R_TOY_HPP_
