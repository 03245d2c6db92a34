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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "p2r/common.hpp"
#include "p2r/manifest.hpp"
#include "p2r/rng.hpp"
#include "p2r/task_arithmetic.hpp"
#include "p2r/toy.hpp"
#include "p2r/wer.hpp"

using namespace p2r;
using namespace p2r::toy;

namespace {

template <typename F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::kUsage;
}

// Small world: fast to train, still has distinct accents and speakers.
ToyWorldConfig small_world() {
  ToyWorldConfig cfg;
  cfg.vocab_size = 8;
  cfg.feature_dim = 6;
  cfg.utterance_len = 4;
  cfg.speakers_per_accent = 2;
  cfg.utterances_per_speaker = {3, 2, 2};
  cfg.speaker_offset_scale = 0.15;
  cfg.frame_noise = 0.25;
  cfg.accents = {{"base", 0.0, 0.0},
                 {"south", 0.3, 0.3},
                 {"west", 0.3, 0.3},
                 {"north", 0.3, 0.3},
                 {"east", 0.3, 0.3}};
  cfg.master_seed = 12345;
  return cfg;
}

ExperimentConfig small_experiment() {
  ExperimentConfig cfg;
  cfg.pretrain_accent = "base";
  cfg.source_accents = {"south", "west"};
  cfg.target_accents = {"north", "east"};
  cfg.train.learning_rate = 0.5;
  cfg.train.steps = 80;
  return cfg;
}

bool models_bit_equal(const ToyModel& a, const ToyModel& b) {
  if (a.vocab_size != b.vocab_size || a.feature_dim != b.feature_dim) {
    return false;
  }
  for (std::size_t i = 0; i < a.weights.size(); ++i) {
    if (std::bit_cast<std::uint32_t>(a.weights[i]) !=
        std::bit_cast<std::uint32_t>(b.weights[i])) {
      return false;
    }
  }
  for (std::size_t i = 0; i < a.bias.size(); ++i) {
    if (std::bit_cast<std::uint32_t>(a.bias[i]) !=
        std::bit_cast<std::uint32_t>(b.bias[i])) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("world generation is deterministic and well formed") {
  ToyWorldConfig cfg = small_world();
  ToyWorld w1 = generate_world(cfg);
  ToyWorld w2 = generate_world(cfg);

  REQUIRE(w1.data.size() == 5);
  for (const auto& accent_data : w1.data) {
    CHECK(accent_data[0].size() == 2 * 3);  // speakers x train utts
    CHECK(accent_data[1].size() == 2 * 2);
    CHECK(accent_data[2].size() == 2 * 2);
  }

  const auto& train = w1.utterances("south", Split::kTrain);
  CHECK(train[0].id == "south/spk0/train/0");
  CHECK(train[0].accent == "south");
  CHECK(train[0].speaker == "south_spk0");
  CHECK(train[0].words.size() == 4);
  CHECK(train[0].frames.size() == 4 * 6);
  for (int word : train[0].words) {
    CHECK(word >= 0);
    CHECK(word < 8);
  }
  for (float f : train[0].frames) CHECK(std::isfinite(f));

  // Bitwise identical regeneration.
  for (std::size_t a = 0; a < w1.data.size(); ++a) {
    for (int s = 0; s < 3; ++s) {
      REQUIRE(w1.data[a][s].size() == w2.data[a][s].size());
      for (std::size_t u = 0; u < w1.data[a][s].size(); ++u) {
        CHECK(w1.data[a][s][u].words == w2.data[a][s][u].words);
        for (std::size_t f = 0; f < w1.data[a][s][u].frames.size(); ++f) {
          CHECK(std::bit_cast<std::uint32_t>(w1.data[a][s][u].frames[f]) ==
                std::bit_cast<std::uint32_t>(w2.data[a][s][u].frames[f]));
        }
      }
    }
  }

  // A different master seed moves the data.
  cfg.master_seed = 999;
  ToyWorld w3 = generate_world(cfg);
  CHECK(w3.utterances("south", Split::kTrain)[0].frames !=
        w1.utterances("south", Split::kTrain)[0].frames);
}

TEST_CASE("world config validation") {
  ToyWorldConfig cfg = small_world();
  cfg.vocab_size = 1;
  CHECK(kind_of([&] { (void)generate_world(cfg); }) == ErrorKind::kUsage);
  cfg = small_world();
  cfg.accents.clear();
  CHECK(kind_of([&] { (void)generate_world(cfg); }) == ErrorKind::kUsage);
  cfg = small_world();
  cfg.accents[1].name = "south";
  cfg.accents[2].name = "south";  // duplicate
  CHECK(kind_of([&] { (void)generate_world(cfg); }) == ErrorKind::kUsage);
  cfg = small_world();
  cfg.accents[0].name = "bad name!";
  CHECK(kind_of([&] { (void)generate_world(cfg); }) == ErrorKind::kUsage);
  cfg = small_world();
  cfg.frame_noise = -0.1;
  CHECK(kind_of([&] { (void)generate_world(cfg); }) == ErrorKind::kUsage);
}

TEST_CASE("accent lookup") {
  ToyWorld world = generate_world(small_world());
  CHECK(world.accent_index("south") == 1);
  CHECK(world.accent_index("nope") == -1);
  CHECK(kind_of([&] {
          (void)world.utterances("nope", Split::kTrain);
        }) == ErrorKind::kData);
}

TEST_CASE("gradients match central finite differences") {
  ToyWorld world = generate_world(small_world());
  std::vector<ToyUtterance> data = world.utterances("south", Split::kTrain);

  Rng rng(777);
  const int V = 8, d = 6;
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> w(V * d), b(V);
    for (double& x : w) x = 0.4 * rng.normal();
    for (double& x : b) x = 0.4 * rng.normal();

    LossGrad lg = loss_and_grad(w, b, V, d, data);
    REQUIRE(lg.grad_weights.size() == w.size());
    REQUIRE(lg.grad_bias.size() == b.size());

    const double h = 1e-6;
    auto check_one = [&](std::vector<double>& params, std::size_t i,
                         double analytic) {
      double keep = params[i];
      params[i] = keep + h;
      double up = loss_and_grad(w, b, V, d, data).loss;
      params[i] = keep - h;
      double down = loss_and_grad(w, b, V, d, data).loss;
      params[i] = keep;
      double numeric = (up - down) / (2 * h);
      double scale = std::max({1e-8, std::fabs(numeric), std::fabs(analytic)});
      CHECK(std::fabs(numeric - analytic) / scale < 1e-4);
    };
    for (std::size_t i = 0; i < w.size(); i += 7) {
      check_one(w, i, lg.grad_weights[i]);
    }
    for (std::size_t i = 0; i < b.size(); ++i) {
      check_one(b, i, lg.grad_bias[i]);
    }
  }
}

TEST_CASE("training basics") {
  ToyWorld world = generate_world(small_world());
  std::vector<ToyUtterance> data = world.utterances("south", Split::kTrain);
  ToyModel init = ToyModel::zeros(8, 6);

  SUBCASE("zero steps returns the initializer bit exactly") {
    TrainParams params;
    params.steps = 0;
    ToyModel out = train(init, data, params);
    CHECK(models_bit_equal(out, init));
  }
  SUBCASE("training is deterministic") {
    TrainParams params;
    params.steps = 50;
    ToyModel a = train(init, data, params);
    ToyModel b = train(init, data, params);
    CHECK(models_bit_equal(a, b));
  }
  SUBCASE("loss decreases from the random start") {
    TrainParams params;
    params.steps = 60;
    TrainDiagnostics diag;
    (void)train(init, data, params, {}, &diag);
    REQUIRE(diag.loss_history.size() == 60);
    CHECK(diag.loss_history.front() == doctest::Approx(std::log(8.0)));
    CHECK(diag.loss_history.back() < 0.5 * diag.loss_history.front());
  }
  SUBCASE("bad parameters and labels are rejected") {
    TrainParams params;
    params.learning_rate = -1.0;
    CHECK(kind_of([&] { (void)train(init, data, params); }) ==
          ErrorKind::kUsage);
    params = {};
    params.steps = -1;
    CHECK(kind_of([&] { (void)train(init, data, params); }) ==
          ErrorKind::kUsage);

    std::vector<std::vector<int>> short_labels(data.size() - 1);
    CHECK(kind_of([&] {
            (void)train(init, data, TrainParams{}, short_labels);
          }) == ErrorKind::kUsage);

    std::vector<std::vector<int>> bad_labels(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      bad_labels[i] = data[i].words;
    }
    bad_labels[0][0] = 8;  // out of vocabulary
    CHECK(kind_of([&] {
            (void)train(init, data, TrainParams{}, bad_labels);
          }) == ErrorKind::kData);
  }
  SUBCASE("empty data is a data error") {
    CHECK(kind_of([&] {
            (void)train(init, std::vector<ToyUtterance>{}, TrainParams{});
          }) == ErrorKind::kData);
  }
}

TEST_CASE("greedy decode breaks ties toward the lowest word id") {
  ToyModel zeros = ToyModel::zeros(8, 6);
  ToyUtterance utt;
  utt.words = {3, 1};
  utt.frames = std::vector<float>(2 * 6, 0.5f);
  Decode decoded = greedy_decode(zeros, utt);
  CHECK(decoded.words == std::vector<int>{0, 0});  // all logits equal
  REQUIRE(decoded.logprobs.size() == 2);
  CHECK(decoded.logprobs[0] == doctest::Approx(-std::log(8.0)));
}

TEST_CASE("decode log probabilities are log softmax values") {
  ToyModel model = ToyModel::zeros(3, 2);
  model.weights = {1.0f, 0.0f, 0.0f, 0.0f, 0.0f, 0.0f};  // word 0 likes x0
  ToyUtterance utt;
  utt.words = {0};
  utt.frames = {2.0f, 0.0f};
  Decode decoded = greedy_decode(model, utt);
  CHECK(decoded.words == std::vector<int>{0});
  // logits = {2, 0, 0}: logprob = -log(1 + 2 exp(-2)).
  CHECK(decoded.logprobs[0] ==
        doctest::Approx(-std::log(1.0 + 2.0 * std::exp(-2.0))));
}

TEST_CASE("words render as spaced tokens") {
  CHECK(words_to_text(std::vector<int>{1, 5, 0}) == "w1 w5 w0");
  CHECK(words_to_text(std::vector<int>{}) == "");
}

TEST_CASE("model map round trip") {
  ToyWorld world = generate_world(small_world());
  ToyModel trained = train(ToyModel::zeros(8, 6),
                           world.utterances("base", Split::kTrain),
                           TrainParams{0.5, 30});
  TensorMap map = trained.to_map(Role::kPretrained);
  CHECK(map.role() == Role::kPretrained);
  CHECK(map.at("W").shape == std::vector<std::uint64_t>{8, 6});
  CHECK(map.at("b").shape == std::vector<std::uint64_t>{8});
  ToyModel back = ToyModel::from_map(map);
  CHECK(models_bit_equal(back, trained));

  TensorMap bad;
  bad.set("W", Tensor{{8, 6}, std::vector<float>(48, 0.0f)});
  CHECK(kind_of([&] { (void)ToyModel::from_map(bad); }) == ErrorKind::kData);
}

TEST_CASE("utterance embedding is the frame mean") {
  ToyUtterance utt;
  utt.frames = {1.0f, 2.0f, 3.0f, 5.0f};  // two frames, dim 2
  utt.words = {0, 0};
  std::vector<double> emb = utterance_embedding(utt);
  REQUIRE(emb.size() == 2);
  CHECK(emb[0] == doctest::Approx(2.0));
  CHECK(emb[1] == doctest::Approx(3.5));
}

TEST_CASE("full correction workflow produces a coherent report") {
  ToyWorld world = generate_world(small_world());
  PipelineArtifacts artifacts;
  ExperimentReport report =
      run_pseudo2real(world, small_experiment(), &artifacts);

  CHECK(report.master_seed == 12345);
  CHECK(report.clusters == 1);
  CHECK(report.clusters_used == 1);
  REQUIRE(report.dev_trace.size() == 10);
  bool found = false;
  for (const auto& [lambda, wer] : report.dev_trace) {
    if (lambda == report.chosen_lambda) {
      found = true;
      CHECK(wer == report.chosen_dev_wer);
    }
    CHECK(wer >= 0.0);
  }
  CHECK(found);
  for (const auto& [lambda, wer] : report.dev_trace) {
    CHECK(report.chosen_dev_wer <= wer);
  }
  CHECK(report.wer_pretrained >= 0.0);
  CHECK(report.wer_pseudo >= 0.0);
  CHECK(report.wer_corrected >= 0.0);
  CHECK(report.wer_topline >= 0.0);
  REQUIRE(report.per_target_accent.size() == 2);
  CHECK(report.per_target_accent[0].first == "north");
  CHECK(report.per_target_accent[1].first == "east");

  // Pooled target WER sits between the per accent extremes.
  double lo = std::min(report.per_target_accent[0].second.corrected,
                       report.per_target_accent[1].second.corrected);
  double hi = std::max(report.per_target_accent[0].second.corrected,
                       report.per_target_accent[1].second.corrected);
  CHECK(report.wer_corrected >= lo - 1e-12);
  CHECK(report.wer_corrected <= hi + 1e-12);

  // Artifacts are populated and structurally compatible.
  CHECK(artifacts.pretrained.vocab_size == 8);
  CHECK(artifacts.correction.map().size() == 2);
  CHECK(!artifacts.correction.map().at("W").data.empty());

  // Rerunning reproduces the identical report.
  ExperimentReport again = run_pseudo2real(world, small_experiment());
  CHECK(again.chosen_lambda == report.chosen_lambda);
  CHECK(again.wer_corrected == report.wer_corrected);
  CHECK(again.wer_pseudo == report.wer_pseudo);
}

TEST_CASE("pretraining and fine tuning budgets route independently") {
  ToyWorld world = generate_world(small_world());

  SUBCASE("zero pretraining steps leave the teacher at its init") {
    ExperimentConfig cfg = small_experiment();
    cfg.pretrain.steps = 0;
    PipelineArtifacts artifacts;
    (void)run_pseudo2real(world, cfg, &artifacts);
    CHECK(models_bit_equal(artifacts.pretrained, ToyModel::zeros(8, 6)));
  }
  SUBCASE("zero fine tuning steps leave every student at the teacher") {
    ExperimentConfig cfg = small_experiment();
    cfg.train.steps = 0;
    PipelineArtifacts artifacts;
    ExperimentReport report = run_pseudo2real(world, cfg, &artifacts);
    CHECK(models_bit_equal(artifacts.source_real, artifacts.pretrained));
    CHECK(models_bit_equal(artifacts.source_pseudo, artifacts.pretrained));
    CHECK(models_bit_equal(artifacts.target_pseudo, artifacts.pretrained));
    for (const auto& [name, tensor] : artifacts.correction.map().entries()) {
      for (float x : tensor.data) CHECK(x == 0.0f);
    }
    CHECK(report.wer_corrected == report.wer_pseudo);
  }
}

TEST_CASE("single cluster variant reproduces the plain workflow bit for bit") {
  ToyWorld world = generate_world(small_world());
  PipelineArtifacts plain_artifacts, sc_artifacts;
  ExperimentReport plain =
      run_pseudo2real(world, small_experiment(), &plain_artifacts);
  ExperimentReport sc =
      run_pseudo2real_sc(world, small_experiment(), 1, &sc_artifacts);

  CHECK(sc.clusters == 1);
  CHECK(sc.clusters_used == 1);
  CHECK(sc.chosen_lambda == plain.chosen_lambda);
  CHECK(sc.chosen_dev_wer == plain.chosen_dev_wer);
  CHECK(sc.wer_corrected == plain.wer_corrected);
  CHECK(sc.wer_pseudo == plain.wer_pseudo);

  const TensorMap& a = plain_artifacts.correction.map();
  const TensorMap& b = sc_artifacts.correction.map();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& da = a.entries()[i].second.data;
    const auto& db = b.entries()[i].second.data;
    REQUIRE(da.size() == db.size());
    for (std::size_t j = 0; j < da.size(); ++j) {
      CHECK(std::bit_cast<std::uint32_t>(da[j]) ==
            std::bit_cast<std::uint32_t>(db[j]));
    }
  }
  CHECK(sc_artifacts.source_cluster_labels.size() ==
        world.utterances("south", Split::kTrain).size() +
            world.utterances("west", Split::kTrain).size());
}

TEST_CASE("clustered variant with several clusters still searches the grid") {
  ToyWorld world = generate_world(small_world());
  ExperimentReport report = run_pseudo2real_sc(world, small_experiment(), 3);
  CHECK(report.clusters == 3);
  CHECK(report.clusters_used >= 1);
  CHECK(report.clusters_used <= 3);
  CHECK(report.dev_trace.size() == 10);
}

TEST_CASE("a noiseless matched world yields a zero correction") {
  // No accent shift, no speaker offsets, no frame noise: pseudo labels
  // from the teacher are perfect, so real and pseudo fine-tuning coincide
  // and the parameter difference is exactly zero.
  ToyWorldConfig cfg = small_world();
  cfg.speaker_offset_scale = 0.0;
  cfg.frame_noise = 0.0;
  for (AccentSpec& accent : cfg.accents) {
    accent.perturbation_scale = 0.0;
    accent.bias_scale = 0.0;
  }
  cfg.master_seed = 7;
  ToyWorld world = generate_world(cfg);

  ExperimentConfig exp = small_experiment();
  exp.train.steps = 150;

  // Precondition: the teacher transcribes the source train split without
  // error. If this fails the config above no longer exercises the
  // zero-correction case and must be re-tuned, not papered over.
  ToyModel teacher = train(ToyModel::zeros(cfg.vocab_size, cfg.feature_dim),
                           world.utterances("base", Split::kTrain),
                           exp.train);
  for (const std::string& accent : exp.source_accents) {
    for (const ToyUtterance& utt : world.utterances(accent, Split::kTrain)) {
      REQUIRE(greedy_decode(teacher, utt).words == utt.words);
    }
  }

  PipelineArtifacts artifacts;
  ExperimentReport report = run_pseudo2real(world, exp, &artifacts);
  for (const auto& [name, tensor] : artifacts.correction.map().entries()) {
    for (float v : tensor.data) {
      CHECK(v == 0.0f);
    }
  }
  CHECK(report.wer_corrected == report.wer_pseudo);
  CHECK(report.relative_reduction == 0.0);
}

TEST_CASE("lambda sweep covers the grid and matches the search trace") {
  ToyWorld world = generate_world(small_world());
  std::vector<LambdaSweepPoint> points =
      sweep_lambda(world, small_experiment());
  REQUIRE(points.size() == 10);

  ExperimentReport report = run_pseudo2real(world, small_experiment());
  for (std::size_t i = 0; i < points.size(); ++i) {
    CHECK(points[i].lambda == report.dev_trace[i].first);
    CHECK(points[i].dev_wer == report.dev_trace[i].second);
    CHECK(points[i].target_wer >= 0.0);
  }
}

TEST_CASE("cluster count sweep shares the world and reports every k") {
  ToyWorld world = generate_world(small_world());
  std::vector<int> ks{1, 2, 3};
  std::vector<KSweepPoint> points = sweep_k(world, small_experiment(), ks);
  REQUIRE(points.size() == 3);
  CHECK(points[0].k == 1);
  CHECK(points[0].clusters_used == 1);
  // k = 1 row equals the plain run.
  ExperimentReport plain = run_pseudo2real(world, small_experiment());
  CHECK(points[0].chosen_lambda == plain.chosen_lambda);
  CHECK(points[0].wer_corrected == plain.wer_corrected);
  for (const KSweepPoint& p : points) {
    CHECK(p.clusters_used >= 1);
    CHECK(p.clusters_used <= p.k);
  }
  CHECK(kind_of([&] {
          (void)sweep_k(world, small_experiment(), std::vector<int>{});
        }) == ErrorKind::kUsage);
}

TEST_CASE("experiment config validation") {
  ToyWorld world = generate_world(small_world());
  ExperimentConfig exp = small_experiment();
  exp.pretrain_accent = "nope";
  CHECK(kind_of([&] { (void)run_pseudo2real(world, exp); }) ==
        ErrorKind::kData);
  exp = small_experiment();
  exp.source_accents = {};
  CHECK(kind_of([&] { (void)run_pseudo2real(world, exp); }) ==
        ErrorKind::kData);
  exp = small_experiment();
  exp.target_accents = {"south", "missing"};
  CHECK(kind_of([&] { (void)run_pseudo2real(world, exp); }) ==
        ErrorKind::kData);
}

TEST_CASE("run config json round trip and validation") {
  ToyRunConfig defaults = default_run_config();
  std::string text = run_config_to_json(defaults);
  ToyRunConfig back = run_config_from_json(text);
  CHECK(run_config_to_json(back) == text);
  CHECK(back.world.vocab_size == defaults.world.vocab_size);
  CHECK(back.experiment.source_accents == defaults.experiment.source_accents);
  CHECK(back.experiment.lambda_grid == defaults.experiment.lambda_grid);
  CHECK(back.experiment.pretrain.learning_rate ==
        defaults.experiment.pretrain.learning_rate);
  CHECK(back.experiment.pretrain.steps == defaults.experiment.pretrain.steps);

  SUBCASE("partial configs inherit defaults") {
    ToyRunConfig partial =
        run_config_from_json(R"({"world":{"vocab_size":16}})");
    CHECK(partial.world.vocab_size == 16);
    CHECK(partial.world.feature_dim == defaults.world.feature_dim);
    CHECK(partial.experiment.pretrain_accent ==
          defaults.experiment.pretrain_accent);
  }
  SUBCASE("unknown keys are rejected") {
    CHECK(kind_of([] {
            (void)run_config_from_json(R"({"wrold":{}})");
          }) == ErrorKind::kData);
    CHECK(kind_of([] {
            (void)run_config_from_json(R"({"world":{"vocab":16}})");
          }) == ErrorKind::kData);
    CHECK(kind_of([] {
            (void)run_config_from_json(
                R"({"experiment":{"lambda":"0.5"}})");
          }) == ErrorKind::kData);
  }
  SUBCASE("type errors are rejected") {
    CHECK(kind_of([] {
            (void)run_config_from_json(R"({"world":{"vocab_size":"big"}})");
          }) == ErrorKind::kData);
    CHECK(kind_of([] { (void)run_config_from_json("[1,2]"); }) ==
          ErrorKind::kData);
    CHECK(kind_of([] { (void)run_config_from_json("{nope"); }) ==
          ErrorKind::kData);
  }
}

TEST_CASE("multi seed runs summarize per seed reports") {
  ToyRunConfig config;
  config.world = small_world();
  config.experiment = small_experiment();
  MultiSeedReport report = run_seeds(config, 3);
  REQUIRE(report.per_seed.size() == 3);
  CHECK(report.summary.runs == 3);

  // Seeds are derived, distinct, and independent of the outer order.
  CHECK(report.per_seed[0].master_seed != report.per_seed[1].master_seed);
  CHECK(report.per_seed[1].master_seed != report.per_seed[2].master_seed);

  double mean_corrected = 0.0;
  int nonneg = 0;
  for (const ExperimentReport& r : report.per_seed) {
    mean_corrected += r.wer_corrected;
    if (r.wer_corrected <= r.wer_pseudo) nonneg += 1;
  }
  mean_corrected /= 3.0;
  CHECK(report.summary.mean_corrected == doctest::Approx(mean_corrected));
  CHECK(report.summary.nonnegative_reductions == nonneg);

  CHECK(kind_of([&] { (void)run_seeds(config, 0); }) == ErrorKind::kUsage);
}

TEST_CASE("report serialization includes the essentials") {
  ToyWorld world = generate_world(small_world());
  ExperimentReport report = run_pseudo2real(world, small_experiment());
  std::string text = report_to_json(report);
  CHECK(text.find("chosen_lambda") != std::string::npos);
  CHECK(text.find("dev_trace") != std::string::npos);
  CHECK(text.find("relative_reduction") != std::string::npos);
  CHECK(text.find("north") != std::string::npos);
}

TEST_CASE("emitted manifests parse back and stay aligned") {
  ToyWorld world = generate_world(small_world());
  std::filesystem::path dir =
      std::filesystem::temp_directory_path() / "p2r_test_emit";
  std::filesystem::remove_all(dir);
  emit_manifests(world, small_experiment(), dir);

  // Reference manifests for every configured accent and split.
  for (const char* accent : {"base", "south", "west", "north", "east"}) {
    for (const char* split : {"train", "dev", "test"}) {
      std::filesystem::path p =
          dir / ("refs_" + std::string(accent) + "_" + split + ".jsonl");
      CAPTURE(p.string());
      REQUIRE(std::filesystem::exists(p));
      std::vector<UtteranceRecord> records = load_manifest_file(p);
      CHECK(!records.empty());
      CHECK(records[0].reference.has_value());
      CHECK(records[0].speaker.has_value());
    }
  }

  // Pseudo-label manifests carry aligned word log probabilities; the
  // default loader verifies the token count.
  for (const char* accent : {"south", "west", "north", "east"}) {
    std::filesystem::path p =
        dir / ("pseudo_" + std::string(accent) + "_train.jsonl");
    REQUIRE(std::filesystem::exists(p));
    std::vector<UtteranceRecord> records = load_manifest_file(p);
    CHECK(records.size() == 6);  // 2 speakers x 3 train utterances
    for (const UtteranceRecord& rec : records) {
      REQUIRE(rec.word_logprobs.has_value());
      for (double lp : rec.word_logprobs.value()) {
        CHECK(lp <= 0.0);
      }
    }
  }
  CHECK(!std::filesystem::exists(dir / "pseudo_base_train.jsonl"));

  // The emitted hypotheses are exactly the pipeline teacher's pseudo
  // labels, so file-based reruns see the same data as the experiment.
  PipelineArtifacts artifacts;
  (void)run_pseudo2real(world, small_experiment(), &artifacts);
  std::vector<UtteranceRecord> south =
      load_manifest_file(dir / "pseudo_south_train.jsonl");
  const auto& south_utts = world.utterances("south", Split::kTrain);
  REQUIRE(south.size() == south_utts.size());
  for (std::size_t i = 0; i < south.size(); ++i) {
    CHECK(south[i].id == south_utts[i].id);
    CHECK(south[i].hypothesis.value() ==
          words_to_text(greedy_decode(artifacts.pretrained,
                                      south_utts[i]).words));
  }

  EmbeddingSet embeddings =
      load_embeddings_file(dir / "embeddings_source_train.jsonl");
  CHECK(embeddings.dim == 6);
  CHECK(embeddings.size() == 12);  // two source accents x 2 spk x 3 utts

  std::filesystem::remove_all(dir);
}
