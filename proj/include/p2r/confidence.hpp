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

#ifndef P2R_CONFIDENCE_HPP_
#define P2R_CONFIDENCE_HPP_

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "p2r/wer.hpp"

namespace p2r {

struct ConfidenceRecord {
  std::string id;
  double score = 0.0;  // mean word log probability
};

// Mean of the record's word_logprobs. Throws kData when word_logprobs is
// absent or empty.
ConfidenceRecord confidence_score(const UtteranceRecord& record);

// Quartile cut points for pseudo-label filtering. Q1 keeps the most
// (everything at or above the 25th percentile), Q3 the least.
enum class QuartileLevel { kQ1 = 1, kQ2 = 2, kQ3 = 3 };

// Accepts "Q1"/"Q2"/"Q3" (case-insensitive); throws kUsage otherwise.
QuartileLevel parse_quartile_level(std::string_view text);
const char* quartile_level_name(QuartileLevel level);

// Quantile with linear interpolation between closest ranks: with n sorted
// values, rank h = (n - 1) * p; the result interpolates between the values
// at floor(h) and floor(h) + 1.
double quantile_linear(std::span<const double> sorted_values, double p);

struct FilterResult {
  double threshold = 0.0;
  std::vector<std::string> kept_ids;  // input order
  std::size_t total = 0;

  double keep_rate() const {
    return total == 0 ? 0.0
                      : static_cast<double>(kept_ids.size()) /
                            static_cast<double>(total);
  }
};

// Keeps records with score >= the level's quantile of the score
// distribution. Higher levels keep subsets of lower levels. Throws kData
// on an empty input.
FilterResult quartile_filter(std::span<const ConfidenceRecord> records,
                             QuartileLevel level);

}  // namespace p2r

#endif  // P2R_CONFIDENCE_HPP_
