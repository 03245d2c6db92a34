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

#ifndef P2R_WER_HPP_
#define P2R_WER_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace p2r {

// Text normalization applied before scoring unless disabled: lowercase
// (ASCII range only; bytes >= 0x80 pass through unchanged), strip the
// punctuation set . , ! ? ; : " ' ( ) [ ] { } with '-' replaced by a
// space, then split on whitespace with empty tokens dropped.
struct NormalizeConfig {
  bool lowercase = true;
  bool strip_punctuation = true;
};

std::vector<std::string> normalize_text(std::string_view text,
                                        const NormalizeConfig& config = {});

struct EditCounts {
  std::uint64_t substitutions = 0;
  std::uint64_t deletions = 0;
  std::uint64_t insertions = 0;
  std::uint64_t hits = 0;
  std::uint64_t ref_len = 0;

  std::uint64_t total_edits() const {
    return substitutions + deletions + insertions;
  }
};

enum class EditOp { kHit, kSubstitute, kDelete, kInsert };

struct AlignStep {
  EditOp op;
  // Token positions; -1 when the side does not participate (insertions
  // have no ref index, deletions no hyp index).
  int ref_index = -1;
  int hyp_index = -1;
};

struct Alignment {
  EditCounts counts;
  std::vector<AlignStep> steps;
};

// Minimum-edit alignment with unit costs. Among minimal-edit alignments the
// hit count is maximized, which pins the substitution/deletion/insertion
// split uniquely and makes it symmetric under swapping ref and hyp (totals
// equal, deletions and insertions exchanged). Remaining ties in the
// backtrace prefer substitution/hit, then deletion, then insertion, so the
// step trace is reproducible too.
EditCounts align(std::span<const std::string> ref,
                 std::span<const std::string> hyp);
Alignment align_trace(std::span<const std::string> ref,
                      std::span<const std::string> hyp);

// Per-utterance rate: edits / max(ref_len, 1). May exceed 1.
double utterance_wer(const EditCounts& counts);

// One scored utterance unit. reference/hypothesis are raw (unnormalized)
// text; word_logprobs, when present, are per-word log probabilities of the
// hypothesis and must match its normalized token count.
struct UtteranceRecord {
  std::string id;
  std::optional<std::string> reference;
  std::optional<std::string> hypothesis;
  std::optional<std::vector<double>> word_logprobs;
  std::optional<std::string> speaker;
};

struct UtteranceScore {
  std::string id;
  EditCounts counts;
  double wer = 0.0;
};

struct WerReport {
  std::vector<UtteranceScore> per_utterance;
  EditCounts corpus;
  // Pooled edits / pooled reference length; not the mean of per-utterance
  // rates. May exceed 1.
  double corpus_wer = 0.0;
};

// Scores a corpus. Every record must carry both reference and hypothesis;
// the pooled reference length must be positive. Throws kData otherwise.
WerReport corpus_wer(std::span<const UtteranceRecord> records,
                     const NormalizeConfig& config = {});

}  // namespace p2r

#endif  // P2R_WER_HPP_
