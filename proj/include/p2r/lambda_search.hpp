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

#ifndef P2R_LAMBDA_SEARCH_HPP_
#define P2R_LAMBDA_SEARCH_HPP_

#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "p2r/common.hpp"
#include "p2r/task_arithmetic.hpp"
#include "p2r/wer.hpp"

namespace p2r {

// Candidate scaling factors, strictly ascending, all finite.
struct LambdaGrid {
  std::vector<double> values;

  // {0.1, 0.2, ..., 1.0}, each value i/10 so the doubles equal the plain
  // decimal literals.
  static LambdaGrid default_grid();

  // "start:stop:step" with step > 0 and start <= stop, endpoint included
  // when it lands on the grid. Values are snapped to 10 decimal places so
  // accumulated representation error does not leak into output.
  static LambdaGrid parse(std::string_view text);

  static LambdaGrid from_values(std::vector<double> values);
};

struct LambdaSearchResult {
  double chosen_lambda = 0.0;
  double chosen_wer = 0.0;
  // Every evaluated (lambda, wer) pair, in ascending lambda order.
  std::vector<std::pair<double, double>> evaluated;
};

// Raised when an evaluation fails mid-search; carries the completed part
// of the trace. kind() preserves the underlying failure's kind.
class LambdaSearchError : public Error {
 public:
  LambdaSearchError(ErrorKind kind, const std::string& message,
                    std::vector<std::pair<double, double>> partial,
                    double failed_lambda)
      : Error(kind, message),
        partial_(std::move(partial)),
        failed_lambda_(failed_lambda) {}

  const std::vector<std::pair<double, double>>& partial_trace() const {
    return partial_;
  }
  double failed_lambda() const { return failed_lambda_; }

 private:
  std::vector<std::pair<double, double>> partial_;
  double failed_lambda_;
};

// Evaluates every grid point exactly once, in ascending order, and picks
// the minimum WER; ties go to the smallest lambda. The evaluator must
// return a finite, non-negative WER.
LambdaSearchResult grid_search(
    const LambdaGrid& grid, const std::function<double(double)>& evaluate);

// Produces hypotheses for the dev manifest at a given lambda. `checkpoint`
// is the corrected model, or nullptr when needs_checkpoint() is false.
class TranscriptionBackend {
 public:
  virtual ~TranscriptionBackend() = default;
  virtual bool needs_checkpoint() const = 0;
  virtual std::vector<UtteranceRecord> transcribe(
      const TensorMap* checkpoint, double lambda,
      std::span<const UtteranceRecord> dev) = 0;
};

// Reads hyp_<lambda>.jsonl from a directory, lambda formatted with one
// decimal digit (hyp_0.3.jsonl). No checkpoints are built.
class PrecomputedBackend final : public TranscriptionBackend {
 public:
  explicit PrecomputedBackend(std::filesystem::path dir);
  bool needs_checkpoint() const override { return false; }
  std::vector<UtteranceRecord> transcribe(
      const TensorMap* checkpoint, double lambda,
      std::span<const UtteranceRecord> dev) override;

 private:
  std::filesystem::path dir_;
};

// Runs a shell command per lambda. The template must contain {checkpoint}
// and {manifest}; they are replaced with paths to a corrected-checkpoint
// archive and an id-only JSONL manifest of the dev set. The command must
// write hypothesis JSONL to stdout and exit 0; anything else is a kBackend
// error.
class CommandBackend final : public TranscriptionBackend {
 public:
  explicit CommandBackend(std::string command_template);
  ~CommandBackend() override;
  bool needs_checkpoint() const override { return true; }
  std::vector<UtteranceRecord> transcribe(
      const TensorMap* checkpoint, double lambda,
      std::span<const UtteranceRecord> dev) override;

 private:
  std::string template_;
  std::filesystem::path workdir_;  // created lazily, removed in dtor
  std::filesystem::path manifest_path_;
  int calls_ = 0;
};

// Binds base checkpoint, correction vector, dev references, and a backend
// into the lambda -> dev WER function used by grid_search. Hypotheses are
// joined to references by id; a missing or hypothesis-less id is a
// kBackend error.
std::function<double(double)> checkpoint_evaluator(
    TensorMap base, TaskVector vec, std::vector<UtteranceRecord> dev_refs,
    std::shared_ptr<TranscriptionBackend> backend,
    bool allow_negative_lambda = false, NormalizeConfig normalize = {});

}  // namespace p2r

#endif  // P2R_LAMBDA_SEARCH_HPP_
