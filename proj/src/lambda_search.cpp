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

#include "p2r/lambda_search.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <unordered_map>

#include <sys/wait.h>
#include <unistd.h>

#include "p2r/archive.hpp"
#include "p2r/manifest.hpp"

namespace p2r {

namespace {

// One-decimal formatting used for precomputed hypothesis file names.
std::string format_lambda_1dp(double lambda) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", lambda);
  return buf;
}

void validate_grid(const std::vector<double>& values) {
  if (values.empty()) throw_usage("lambda grid is empty");
  for (double v : values) {
    if (!std::isfinite(v)) throw_usage("lambda grid holds a non-finite value");
  }
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (!(values[i] > values[i - 1])) {
      throw_usage("lambda grid must be strictly ascending");
    }
  }
}

// Replaces every occurrence of `key` in `text` with `value`.
std::string substitute(std::string text, std::string_view key,
                       std::string_view value) {
  std::size_t pos = 0;
  while ((pos = text.find(key, pos)) != std::string::npos) {
    text.replace(pos, key.size(), value);
    pos += value.size();
  }
  return text;
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  out += "'";
  return out;
}

}  // namespace

LambdaGrid LambdaGrid::default_grid() {
  LambdaGrid grid;
  for (int i = 1; i <= 10; ++i) {
    grid.values.push_back(static_cast<double>(i) / 10.0);
  }
  return grid;
}

LambdaGrid LambdaGrid::parse(std::string_view text) {
  std::string s(text);
  double start = 0.0, stop = 0.0, step = 0.0;
  char extra = 0;
  if (std::sscanf(s.c_str(), "%lf:%lf:%lf%c", &start, &stop, &step, &extra) != 3) {
    throw_usage("grid must have the form start:stop:step, got '" + s + "'");
  }
  if (!std::isfinite(start) || !std::isfinite(stop) || !std::isfinite(step)) {
    throw_usage("grid bounds must be finite");
  }
  if (step <= 0.0) throw_usage("grid step must be positive");
  if (start > stop) throw_usage("grid start must not exceed stop");

  std::vector<double> values;
  // Count-based construction avoids a drifting running sum; the half-step
  // slack keeps an endpoint that lands on the grid inside it.
  long count = static_cast<long>(std::floor((stop - start) / step + 0.5e-9)) + 1;
  for (long i = 0; i < count; ++i) {
    double v = start + static_cast<double>(i) * step;
    if (v > stop + step * 1e-9) break;
    values.push_back(std::round(v * 1e10) / 1e10);
  }
  return from_values(std::move(values));
}

LambdaGrid LambdaGrid::from_values(std::vector<double> values) {
  validate_grid(values);
  LambdaGrid grid;
  grid.values = std::move(values);
  return grid;
}

LambdaSearchResult grid_search(
    const LambdaGrid& grid, const std::function<double(double)>& evaluate) {
  validate_grid(grid.values);
  LambdaSearchResult result;
  result.evaluated.reserve(grid.values.size());

  for (double lambda : grid.values) {
    double wer = 0.0;
    try {
      wer = evaluate(lambda);
    } catch (const Error& e) {
      throw LambdaSearchError(
          e.kind(),
          "lambda search failed at lambda=" + std::to_string(lambda) +
              " after " + std::to_string(result.evaluated.size()) +
              " completed evaluation(s): " + e.what(),
          std::move(result.evaluated), lambda);
    }
    if (!std::isfinite(wer) || wer < 0.0) {
      throw LambdaSearchError(
          ErrorKind::kComputation,
          "evaluator returned an invalid WER at lambda=" +
              std::to_string(lambda),
          std::move(result.evaluated), lambda);
    }
    result.evaluated.emplace_back(lambda, wer);
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < result.evaluated.size(); ++i) {
    // Strict comparison: ties stay with the smaller lambda.
    if (result.evaluated[i].second < result.evaluated[best].second) best = i;
  }
  result.chosen_lambda = result.evaluated[best].first;
  result.chosen_wer = result.evaluated[best].second;
  return result;
}

PrecomputedBackend::PrecomputedBackend(std::filesystem::path dir)
    : dir_(std::move(dir)) {}

std::vector<UtteranceRecord> PrecomputedBackend::transcribe(
    const TensorMap* checkpoint, double lambda,
    std::span<const UtteranceRecord> dev) {
  (void)checkpoint;
  (void)dev;
  std::filesystem::path file =
      dir_ / ("hyp_" + format_lambda_1dp(lambda) + ".jsonl");
  std::error_code ec;
  if (!std::filesystem::exists(file, ec)) {
    throw_backend("no precomputed hypotheses for lambda=" +
                  format_lambda_1dp(lambda) + ": '" + file.string() +
                  "' not found");
  }
  ManifestLoadOptions options;
  options.check_logprob_alignment = false;
  return load_manifest_file(file, options);
}

CommandBackend::CommandBackend(std::string command_template)
    : template_(std::move(command_template)) {
  if (template_.find("{checkpoint}") == std::string::npos ||
      template_.find("{manifest}") == std::string::npos) {
    throw_usage(
        "command template must contain {checkpoint} and {manifest} "
        "placeholders");
  }
}

CommandBackend::~CommandBackend() {
  if (!workdir_.empty()) {
    std::error_code ec;
    std::filesystem::remove_all(workdir_, ec);
  }
}

std::vector<UtteranceRecord> CommandBackend::transcribe(
    const TensorMap* checkpoint, double lambda,
    std::span<const UtteranceRecord> dev) {
  if (checkpoint == nullptr) {
    throw_backend("command backend needs a corrected checkpoint");
  }
  if (workdir_.empty()) {
    std::string tmpl =
        (std::filesystem::temp_directory_path() / "p2r-backend-XXXXXX")
            .string();
    std::vector<char> buf(tmpl.begin(), tmpl.end());
    buf.push_back('\0');
    if (mkdtemp(buf.data()) == nullptr) {
      throw_backend("cannot create backend working directory");
    }
    workdir_ = std::filesystem::path(buf.data());

    // The dev manifest is constant across lambdas: id (and speaker) only,
    // never references.
    std::vector<UtteranceRecord> ids;
    ids.reserve(dev.size());
    for (const UtteranceRecord& r : dev) {
      UtteranceRecord stripped;
      stripped.id = r.id;
      stripped.speaker = r.speaker;
      ids.push_back(std::move(stripped));
    }
    manifest_path_ = workdir_ / "dev_manifest.jsonl";
    save_manifest_file(ids, manifest_path_);
  }

  std::filesystem::path ckpt_path =
      workdir_ / ("checkpoint_" + std::to_string(calls_++) + ".tva");
  save_archive_file(*checkpoint, ckpt_path);

  std::string cmd = template_;
  cmd = substitute(std::move(cmd), "{checkpoint}", shell_quote(ckpt_path.string()));
  cmd = substitute(std::move(cmd), "{manifest}", shell_quote(manifest_path_.string()));

  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) {
    std::filesystem::remove(ckpt_path);
    throw_backend("cannot launch backend command");
  }
  std::string output;
  char chunk[4096];
  std::size_t got = 0;
  while ((got = fread(chunk, 1, sizeof(chunk), pipe)) > 0) {
    output.append(chunk, got);
  }
  int status = pclose(pipe);
  std::error_code ec;
  std::filesystem::remove(ckpt_path, ec);

  if (status == -1) {
    throw_backend("backend command could not be reaped");
  }
  if (WIFSIGNALED(status)) {
    throw_backend("backend command killed by signal " +
                  std::to_string(WTERMSIG(status)));
  }
  if (WIFEXITED(status) && WEXITSTATUS(status) != 0) {
    throw_backend("backend command exited with status " +
                  std::to_string(WEXITSTATUS(status)) + " at lambda=" +
                  std::to_string(lambda));
  }

  ManifestLoadOptions options;
  options.check_logprob_alignment = false;
  return parse_manifest(output, options, "<backend stdout>");
}

std::function<double(double)> checkpoint_evaluator(
    TensorMap base, TaskVector vec, std::vector<UtteranceRecord> dev_refs,
    std::shared_ptr<TranscriptionBackend> backend, bool allow_negative_lambda,
    NormalizeConfig normalize) {
  if (backend == nullptr) throw_usage("no transcription backend given");
  if (dev_refs.empty()) {
    throw_data("lambda search needs a non-empty dev reference set");
  }
  for (const UtteranceRecord& r : dev_refs) {
    if (!r.reference.has_value()) {
      throw_data("dev utterance '" + r.id + "' has no reference");
    }
  }
  if (backend->needs_checkpoint()) {
    require_compat(base, vec.map(), "lambda search");
  }

  auto shared_base = std::make_shared<TensorMap>(std::move(base));
  auto shared_vec = std::make_shared<TaskVector>(std::move(vec));
  auto shared_dev = std::make_shared<std::vector<UtteranceRecord>>(
      std::move(dev_refs));

  return [shared_base, shared_vec, shared_dev, backend, allow_negative_lambda,
          normalize](double lambda) -> double {
    ScalingFactor factor =
        ScalingFactor::checked(lambda, allow_negative_lambda);

    std::vector<UtteranceRecord> hyps;
    if (backend->needs_checkpoint()) {
      TensorMap corrected = apply(*shared_base, *shared_vec, factor);
      hyps = backend->transcribe(&corrected, lambda, *shared_dev);
    } else {
      hyps = backend->transcribe(nullptr, lambda, *shared_dev);
    }

    std::unordered_map<std::string_view, const UtteranceRecord*> by_id;
    by_id.reserve(hyps.size());
    for (const UtteranceRecord& h : hyps) by_id.emplace(h.id, &h);

    std::vector<UtteranceRecord> joined;
    joined.reserve(shared_dev->size());
    for (const UtteranceRecord& ref : *shared_dev) {
      auto it = by_id.find(ref.id);
      if (it == by_id.end() || !it->second->hypothesis.has_value()) {
        throw_backend("backend returned no hypothesis for id '" + ref.id +
                      "'");
      }
      UtteranceRecord r;
      r.id = ref.id;
      r.reference = ref.reference;
      r.hypothesis = it->second->hypothesis;
      joined.push_back(std::move(r));
    }
    return corpus_wer(joined, normalize).corpus_wer;
  };
}

}  // namespace p2r
