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

#include <cmath>
#include <set>

#include "p2r/common.hpp"
#include "p2r/kernels.hpp"
#include "p2r/rng.hpp"

namespace p2r::toy {

namespace {

// Seed-path tags for the independent random streams of a world.
constexpr std::uint64_t kSeedPrototypes = 1;
constexpr std::uint64_t kSeedAccent = 2;
constexpr std::uint64_t kSeedSpeaker = 3;
constexpr std::uint64_t kSeedUtterance = 4;

bool valid_name(const std::string& name) {
  if (name.empty()) return false;
  for (char c : name) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
              (c >= '0' && c <= '9') || c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

void validate_config(const ToyWorldConfig& cfg) {
  if (cfg.vocab_size < 2) throw_usage("toy world needs vocab_size >= 2");
  if (cfg.feature_dim < 1) throw_usage("toy world needs feature_dim >= 1");
  if (cfg.utterance_len < 1) throw_usage("toy world needs utterance_len >= 1");
  if (cfg.speakers_per_accent < 1) {
    throw_usage("toy world needs speakers_per_accent >= 1");
  }
  if (cfg.utterances_per_speaker.train < 0 ||
      cfg.utterances_per_speaker.dev < 0 ||
      cfg.utterances_per_speaker.test < 0) {
    throw_usage("utterances_per_speaker entries must be >= 0");
  }
  if (!(cfg.speaker_offset_scale >= 0.0) ||
      !std::isfinite(cfg.speaker_offset_scale)) {
    throw_usage("speaker_offset_scale must be finite and >= 0");
  }
  if (!(cfg.frame_noise >= 0.0) || !std::isfinite(cfg.frame_noise)) {
    throw_usage("frame_noise must be finite and >= 0");
  }
  if (cfg.accents.empty()) throw_usage("toy world needs at least one accent");
  std::set<std::string> names;
  for (const AccentSpec& a : cfg.accents) {
    if (!valid_name(a.name)) {
      throw_usage("accent name '" + a.name +
                 "' must be non-empty and use only [A-Za-z0-9_-]");
    }
    if (!names.insert(a.name).second) {
      throw_usage("duplicate accent name '" + a.name + "'");
    }
    if (!(a.perturbation_scale >= 0.0) || !std::isfinite(a.perturbation_scale)) {
      throw_usage("accent '" + a.name +
                 "': perturbation_scale must be finite and >= 0");
    }
    if (!(a.bias_scale >= 0.0) || !std::isfinite(a.bias_scale)) {
      throw_usage("accent '" + a.name + "': bias_scale must be finite and >= 0");
    }
  }
}

int split_size(const SplitSizes& sizes, Split split) {
  switch (split) {
    case Split::kTrain: return sizes.train;
    case Split::kDev: return sizes.dev;
    case Split::kTest: return sizes.test;
  }
  return 0;
}

}  // namespace

const char* split_name(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kTest: return "test";
  }
  return "?";
}

int ToyWorld::accent_index(std::string_view name) const {
  for (std::size_t i = 0; i < config.accents.size(); ++i) {
    if (config.accents[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

const std::vector<ToyUtterance>& ToyWorld::utterances(std::string_view accent,
                                                      Split split) const {
  int idx = accent_index(accent);
  if (idx < 0) {
    throw_data("unknown accent '" + std::string(accent) + "'");
  }
  return data[static_cast<std::size_t>(idx)][static_cast<std::size_t>(split)];
}

ToyWorld generate_world(const ToyWorldConfig& config) {
  validate_config(config);
  const auto& kern = kernels::active_kernels();
  ToyWorld world;
  world.config = config;

  int V = config.vocab_size;
  int d = config.feature_dim;
  int L = config.utterance_len;

  {
    Rng rng(derive_seed(config.master_seed, {kSeedPrototypes}));
    world.prototypes.resize(static_cast<std::size_t>(V) * d);
    for (double& p : world.prototypes) p = rng.normal();
  }

  world.accent_params.resize(config.accents.size());
  for (std::size_t a = 0; a < config.accents.size(); ++a) {
    const AccentSpec& spec = config.accents[a];
    Rng rng(derive_seed(config.master_seed, {kSeedAccent, a}));
    auto& params = world.accent_params[a];
    params.transform.resize(static_cast<std::size_t>(d) * d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        double e = rng.normal() * spec.perturbation_scale;
        params.transform[static_cast<std::size_t>(i) * d + j] =
            (i == j ? 1.0 : 0.0) + e;
      }
    }
    params.bias.resize(d);
    for (double& b : params.bias) b = rng.normal() * spec.bias_scale;
  }

  world.data.resize(config.accents.size());
  for (std::size_t a = 0; a < config.accents.size(); ++a) {
    const AccentSpec& spec = config.accents[a];
    const auto& params = world.accent_params[a];
    for (int s = 0; s < config.speakers_per_accent; ++s) {
      std::vector<double> offset(d);
      {
        Rng rng(derive_seed(config.master_seed,
                            {kSeedSpeaker, a, static_cast<std::uint64_t>(s)}));
        for (double& o : offset) {
          o = rng.normal() * config.speaker_offset_scale;
        }
      }
      for (Split split : {Split::kTrain, Split::kDev, Split::kTest}) {
        int count = split_size(config.utterances_per_speaker, split);
        for (int u = 0; u < count; ++u) {
          Rng rng(derive_seed(config.master_seed,
                              {kSeedUtterance, a, static_cast<std::uint64_t>(s),
                               static_cast<std::uint64_t>(split),
                               static_cast<std::uint64_t>(u)}));
          ToyUtterance utt;
          utt.accent = spec.name;
          utt.speaker = spec.name + "_spk" + std::to_string(s);
          utt.id = spec.name + "/spk" + std::to_string(s) + "/" +
                   split_name(split) + "/" + std::to_string(u);
          utt.words.resize(L);
          for (int& w : utt.words) {
            w = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(V)));
          }
          std::vector<double> noise(static_cast<std::size_t>(L) * d);
          for (double& x : noise) x = rng.normal() * config.frame_noise;

          utt.frames.resize(static_cast<std::size_t>(L) * d);
          for (int t = 0; t < L; ++t) {
            const double* proto =
                world.prototypes.data() +
                static_cast<std::size_t>(utt.words[t]) * d;
            for (int i = 0; i < d; ++i) {
              double x = kern.dot_f64(
                  params.transform.data() + static_cast<std::size_t>(i) * d,
                  proto, static_cast<std::size_t>(d));
              x += params.bias[i];
              x += offset[i];
              x += noise[static_cast<std::size_t>(t) * d + i];
              utt.frames[static_cast<std::size_t>(t) * d + i] =
                  static_cast<float>(x);
            }
          }
          world.data[a][static_cast<std::size_t>(split)].push_back(
              std::move(utt));
        }
      }
    }
  }
  return world;
}

}  // namespace p2r::toy
