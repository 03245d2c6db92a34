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

#include "p2r/common.hpp"
#include "p2r/kernels.hpp"

namespace p2r::toy {

namespace {

// Widens f32 frame t of an utterance into scratch.
void widen_frame(const ToyUtterance& utt, int t, int d,
                 std::vector<double>& scratch) {
  const float* src = utt.frames.data() + static_cast<std::size_t>(t) * d;
  for (int i = 0; i < d; ++i) scratch[i] = static_cast<double>(src[i]);
}

void check_labels(std::span<const ToyUtterance> data,
                  std::span<const std::vector<int>> labels_override,
                  int vocab_size) {
  if (labels_override.empty()) return;
  if (labels_override.size() != data.size()) {
    throw_usage("labels_override must be parallel to the data");
  }
  for (std::size_t u = 0; u < data.size(); ++u) {
    if (labels_override[u].size() != data[u].words.size()) {
      throw_usage("labels_override[" + std::to_string(u) +
                  "] length does not match the utterance");
    }
    for (int w : labels_override[u]) {
      if (w < 0 || w >= vocab_size) {
        throw_data("label word id " + std::to_string(w) +
                   " outside vocabulary of size " + std::to_string(vocab_size));
      }
    }
  }
}

}  // namespace

ToyModel ToyModel::zeros(int vocab_size, int feature_dim) {
  ToyModel m;
  m.vocab_size = vocab_size;
  m.feature_dim = feature_dim;
  m.weights.assign(static_cast<std::size_t>(vocab_size) * feature_dim, 0.0f);
  m.bias.assign(static_cast<std::size_t>(vocab_size), 0.0f);
  return m;
}

TensorMap ToyModel::to_map(Role role) const {
  TensorMap map;
  Tensor w;
  w.shape = {static_cast<std::uint64_t>(vocab_size),
             static_cast<std::uint64_t>(feature_dim)};
  w.data = weights;
  map.set("W", std::move(w));
  Tensor b;
  b.shape = {static_cast<std::uint64_t>(vocab_size)};
  b.data = bias;
  map.set("b", std::move(b));
  map.set_role(role);
  return map;
}

ToyModel ToyModel::from_map(const TensorMap& map) {
  const Tensor& w = map.at("W");
  const Tensor& b = map.at("b");
  if (w.shape.size() != 2 || b.shape.size() != 1 || w.shape[0] != b.shape[0]) {
    throw_data("map does not hold a {W: [V, d], b: [V]} model");
  }
  if (w.shape[0] > 1u << 20 || w.shape[1] > 1u << 20) {
    throw_data("model dimensions out of range");
  }
  ToyModel m;
  m.vocab_size = static_cast<int>(w.shape[0]);
  m.feature_dim = static_cast<int>(w.shape[1]);
  m.weights = w.data;
  m.bias = b.data;
  return m;
}

LossGrad loss_and_grad(std::span<const double> w, std::span<const double> b,
                       int vocab_size, int feature_dim,
                       std::span<const ToyUtterance> data,
                       std::span<const std::vector<int>> labels_override) {
  int V = vocab_size;
  int d = feature_dim;
  if (w.size() != static_cast<std::size_t>(V) * d ||
      b.size() != static_cast<std::size_t>(V)) {
    throw_usage("parameter sizes do not match vocab_size x feature_dim");
  }
  check_labels(data, labels_override, V);

  const auto& kern = kernels::active_kernels();
  LossGrad out;
  out.grad_weights.assign(w.size(), 0.0);
  out.grad_bias.assign(b.size(), 0.0);

  std::vector<double> x(d);
  std::vector<double> logits(V);
  std::vector<double> prob(V);
  double loss_sum = 0.0;
  std::uint64_t frames = 0;

  for (std::size_t u = 0; u < data.size(); ++u) {
    const ToyUtterance& utt = data[u];
    const std::vector<int>& labels =
        labels_override.empty() ? utt.words : labels_override[u];
    int L = static_cast<int>(labels.size());
    for (int t = 0; t < L; ++t) {
      widen_frame(utt, t, d, x);
      for (int v = 0; v < V; ++v) {
        logits[v] = kern.dot_f64(w.data() + static_cast<std::size_t>(v) * d,
                                 x.data(), static_cast<std::size_t>(d)) +
                    b[static_cast<std::size_t>(v)];
      }
      double max_logit = logits[0];
      for (int v = 1; v < V; ++v) {
        if (logits[v] > max_logit) max_logit = logits[v];
      }
      double sum_exp = 0.0;
      for (int v = 0; v < V; ++v) sum_exp += std::exp(logits[v] - max_logit);
      double log_denom = max_logit + std::log(sum_exp);

      int y = labels[static_cast<std::size_t>(t)];
      loss_sum += log_denom - logits[y];

      for (int v = 0; v < V; ++v) {
        prob[v] = std::exp(logits[v] - log_denom);
        double coeff = prob[v] - (v == y ? 1.0 : 0.0);
        out.grad_bias[static_cast<std::size_t>(v)] += coeff;
        kern.axpy_f64(
            out.grad_weights.data() + static_cast<std::size_t>(v) * d,
            x.data(), coeff, static_cast<std::size_t>(d));
      }
      ++frames;
    }
  }

  if (frames == 0) throw_data("no training frames");
  double inv = static_cast<double>(frames);
  out.loss = loss_sum / inv;
  kern.div_f64(out.grad_weights.data(), out.grad_weights.data(), inv,
               out.grad_weights.size());
  kern.div_f64(out.grad_bias.data(), out.grad_bias.data(), inv,
               out.grad_bias.size());
  return out;
}

ToyModel train(const ToyModel& init, std::span<const ToyUtterance> data,
               const TrainParams& params,
               std::span<const std::vector<int>> labels_override,
               TrainDiagnostics* diagnostics) {
  if (params.steps < 0) throw_usage("steps must be >= 0");
  if (!std::isfinite(params.learning_rate) || params.learning_rate <= 0.0) {
    throw_usage("learning_rate must be finite and positive");
  }
  if (params.steps == 0) return init;

  const auto& kern = kernels::active_kernels();
  int V = init.vocab_size;
  int d = init.feature_dim;
  std::vector<double> w(init.weights.begin(), init.weights.end());
  std::vector<double> b(init.bias.begin(), init.bias.end());

  for (int step = 0; step < params.steps; ++step) {
    LossGrad lg = loss_and_grad(w, b, V, d, data, labels_override);
    if (!std::isfinite(lg.loss)) {
      throw_computation("training diverged at step " + std::to_string(step));
    }
    if (diagnostics != nullptr) diagnostics->loss_history.push_back(lg.loss);
    kern.axpy_f64(w.data(), lg.grad_weights.data(), -params.learning_rate,
                  w.size());
    kern.axpy_f64(b.data(), lg.grad_bias.data(), -params.learning_rate,
                  b.size());
  }

  ToyModel out;
  out.vocab_size = V;
  out.feature_dim = d;
  out.weights.resize(w.size());
  out.bias.resize(b.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    out.weights[i] = static_cast<float>(w[i]);
  }
  for (std::size_t i = 0; i < b.size(); ++i) {
    out.bias[i] = static_cast<float>(b[i]);
  }
  return out;
}

Decode greedy_decode(const ToyModel& model, const ToyUtterance& utterance) {
  const auto& kern = kernels::active_kernels();
  int V = model.vocab_size;
  int d = model.feature_dim;
  if (static_cast<int>(utterance.frames.size()) % d != 0) {
    throw_data("utterance frame size does not match model feature_dim");
  }
  int L = static_cast<int>(utterance.frames.size()) / d;

  std::vector<double> wd(model.weights.begin(), model.weights.end());
  std::vector<double> bd(model.bias.begin(), model.bias.end());
  std::vector<double> x(d);
  std::vector<double> logits(V);

  Decode out;
  out.words.reserve(L);
  out.logprobs.reserve(L);
  for (int t = 0; t < L; ++t) {
    widen_frame(utterance, t, d, x);
    for (int v = 0; v < V; ++v) {
      logits[v] = kern.dot_f64(wd.data() + static_cast<std::size_t>(v) * d,
                               x.data(), static_cast<std::size_t>(d)) +
                  bd[static_cast<std::size_t>(v)];
    }
    int best = 0;
    for (int v = 1; v < V; ++v) {
      if (logits[v] > logits[best]) best = v;  // ties keep the lowest id
    }
    double max_logit = logits[best];
    double sum_exp = 0.0;
    for (int v = 0; v < V; ++v) sum_exp += std::exp(logits[v] - max_logit);
    out.words.push_back(best);
    out.logprobs.push_back(-std::log(sum_exp));
  }
  return out;
}

std::string words_to_text(std::span<const int> words) {
  std::string text;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i > 0) text += ' ';
    text += 'w';
    text += std::to_string(words[i]);
  }
  return text;
}

std::vector<double> utterance_embedding(const ToyUtterance& utterance) {
  const auto& kern = kernels::active_kernels();
  if (utterance.frames.empty()) throw_data("utterance has no frames");
  std::size_t d = utterance.words.empty()
                      ? utterance.frames.size()
                      : utterance.frames.size() / utterance.words.size();
  std::size_t L = utterance.frames.size() / d;
  std::vector<double> mean(d, 0.0);
  for (std::size_t t = 0; t < L; ++t) {
    kern.accum_f64(mean.data(), utterance.frames.data() + t * d, d);
  }
  kern.div_f64(mean.data(), mean.data(), static_cast<double>(L), d);
  return mean;
}

}  // namespace p2r::toy
