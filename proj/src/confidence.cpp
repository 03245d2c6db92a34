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

#include "p2r/confidence.hpp"

#include <algorithm>
#include <cmath>

#include "p2r/common.hpp"

namespace p2r {

ConfidenceRecord confidence_score(const UtteranceRecord& record) {
  if (!record.word_logprobs.has_value() || record.word_logprobs->empty()) {
    throw_data("utterance '" + record.id + "' has no word log probabilities");
  }
  double sum = 0.0;
  for (double lp : *record.word_logprobs) sum += lp;
  double mean = sum / static_cast<double>(record.word_logprobs->size());
  if (!std::isfinite(mean)) {
    throw_computation("utterance '" + record.id +
                      "': non-finite confidence score");
  }
  return {record.id, mean};
}

QuartileLevel parse_quartile_level(std::string_view text) {
  std::string t(text);
  for (char& c : t) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  }
  if (t == "Q1") return QuartileLevel::kQ1;
  if (t == "Q2") return QuartileLevel::kQ2;
  if (t == "Q3") return QuartileLevel::kQ3;
  throw_usage("quartile level must be Q1, Q2, or Q3, got '" +
              std::string(text) + "'");
}

const char* quartile_level_name(QuartileLevel level) {
  switch (level) {
    case QuartileLevel::kQ1: return "Q1";
    case QuartileLevel::kQ2: return "Q2";
    case QuartileLevel::kQ3: return "Q3";
  }
  return "?";
}

double quantile_linear(std::span<const double> sorted_values, double p) {
  if (sorted_values.empty()) {
    throw_data("quantile of an empty value set is undefined");
  }
  if (!(p >= 0.0 && p <= 1.0)) {
    throw_usage("quantile fraction must lie in [0, 1]");
  }
  std::size_t n = sorted_values.size();
  double h = static_cast<double>(n - 1) * p;
  std::size_t lo = static_cast<std::size_t>(h);
  if (lo >= n - 1) return sorted_values[n - 1];
  double frac = h - static_cast<double>(lo);
  return sorted_values[lo] +
         frac * (sorted_values[lo + 1] - sorted_values[lo]);
}

FilterResult quartile_filter(std::span<const ConfidenceRecord> records,
                             QuartileLevel level) {
  if (records.empty()) {
    throw_data("cannot filter an empty record set");
  }
  std::vector<double> scores;
  scores.reserve(records.size());
  for (const ConfidenceRecord& r : records) scores.push_back(r.score);
  std::sort(scores.begin(), scores.end());

  double p = static_cast<double>(static_cast<int>(level)) / 4.0;
  FilterResult result;
  result.threshold = quantile_linear(scores, p);
  result.total = records.size();
  for (const ConfidenceRecord& r : records) {
    if (r.score >= result.threshold) result.kept_ids.push_back(r.id);
  }
  return result;
}

}  // namespace p2r
