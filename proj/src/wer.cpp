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

#include "p2r/wer.hpp"

#include <algorithm>

#include "p2r/common.hpp"

namespace p2r {

namespace {

bool is_stripped_punct(char c) {
  switch (c) {
    case '.': case ',': case '!': case '?': case ';': case ':':
    case '"': case '\'': case '(': case ')': case '[': case ']':
    case '{': case '}':
      return true;
    default:
      return false;
  }
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

}  // namespace

std::vector<std::string> normalize_text(std::string_view text,
                                        const NormalizeConfig& config) {
  std::string buf;
  buf.reserve(text.size());
  for (char c : text) {
    if (config.strip_punctuation) {
      if (c == '-') {
        buf.push_back(' ');
        continue;
      }
      if (is_stripped_punct(c)) continue;
    }
    if (config.lowercase && c >= 'A' && c <= 'Z') {
      c = static_cast<char>(c - 'A' + 'a');
    }
    buf.push_back(c);
  }
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < buf.size()) {
    while (i < buf.size() && is_space(buf[i])) ++i;
    std::size_t start = i;
    while (i < buf.size() && !is_space(buf[i])) ++i;
    if (i > start) tokens.emplace_back(buf.substr(start, i - start));
  }
  return tokens;
}

Alignment align_trace(std::span<const std::string> ref,
                      std::span<const std::string> hyp) {
  std::size_t R = ref.size();
  std::size_t H = hyp.size();
  // Full (cost, hits) matrices; utterances are sentence-sized, so quadratic
  // space is fine and the backtrace needs it anyway. Minimizing edits alone
  // leaves the substitution/deletion/insertion split ambiguous; maximizing
  // hits among minimal-edit alignments pins it uniquely (the lengths, the
  // edit total, and the hit count determine all four counts), and a unique
  // split is automatically symmetric under swapping ref and hyp.
  std::vector<std::uint32_t> cost((R + 1) * (H + 1));
  std::vector<std::uint32_t> hits((R + 1) * (H + 1));
  auto c_at = [&](std::size_t i, std::size_t j) -> std::uint32_t& {
    return cost[i * (H + 1) + j];
  };
  auto h_at = [&](std::size_t i, std::size_t j) -> std::uint32_t& {
    return hits[i * (H + 1) + j];
  };
  for (std::size_t i = 0; i <= R; ++i) c_at(i, 0) = static_cast<std::uint32_t>(i);
  for (std::size_t j = 0; j <= H; ++j) c_at(0, j) = static_cast<std::uint32_t>(j);
  for (std::size_t i = 1; i <= R; ++i) {
    for (std::size_t j = 1; j <= H; ++j) {
      bool eq = ref[i - 1] == hyp[j - 1];
      std::uint32_t c_diag = c_at(i - 1, j - 1) + (eq ? 0 : 1);
      std::uint32_t h_diag = h_at(i - 1, j - 1) + (eq ? 1 : 0);
      std::uint32_t c_del = c_at(i - 1, j) + 1;
      std::uint32_t c_ins = c_at(i, j - 1) + 1;
      std::uint32_t c = std::min(c_diag, std::min(c_del, c_ins));
      std::uint32_t h = 0;
      if (c_diag == c) h = std::max(h, h_diag);
      if (c_del == c) h = std::max(h, h_at(i - 1, j));
      if (c_ins == c) h = std::max(h, h_at(i, j - 1));
      c_at(i, j) = c;
      h_at(i, j) = h;
    }
  }

  // Remaining ties (same cost, same hits) prefer substitution/hit, then
  // deletion, then insertion, so traces are reproducible.
  Alignment out;
  out.counts.ref_len = R;
  std::size_t i = R, j = H;
  while (i > 0 || j > 0) {
    bool eq = i > 0 && j > 0 && ref[i - 1] == hyp[j - 1];
    if (i > 0 && j > 0 &&
        c_at(i, j) == c_at(i - 1, j - 1) + (eq ? 0 : 1) &&
        h_at(i, j) == h_at(i - 1, j - 1) + (eq ? 1 : 0)) {
      out.steps.push_back({eq ? EditOp::kHit : EditOp::kSubstitute,
                           static_cast<int>(i - 1), static_cast<int>(j - 1)});
      if (eq) {
        ++out.counts.hits;
      } else {
        ++out.counts.substitutions;
      }
      --i;
      --j;
    } else if (i > 0 && c_at(i, j) == c_at(i - 1, j) + 1 &&
               h_at(i, j) == h_at(i - 1, j)) {
      out.steps.push_back({EditOp::kDelete, static_cast<int>(i - 1), -1});
      ++out.counts.deletions;
      --i;
    } else {
      out.steps.push_back({EditOp::kInsert, -1, static_cast<int>(j - 1)});
      ++out.counts.insertions;
      --j;
    }
  }
  std::reverse(out.steps.begin(), out.steps.end());
  return out;
}

EditCounts align(std::span<const std::string> ref,
                 std::span<const std::string> hyp) {
  return align_trace(ref, hyp).counts;
}

double utterance_wer(const EditCounts& counts) {
  std::uint64_t denom = counts.ref_len > 0 ? counts.ref_len : 1;
  return static_cast<double>(counts.total_edits()) /
         static_cast<double>(denom);
}

WerReport corpus_wer(std::span<const UtteranceRecord> records,
                     const NormalizeConfig& config) {
  if (records.empty()) {
    throw_data("corpus scoring requires at least one utterance");
  }
  WerReport report;
  report.per_utterance.reserve(records.size());
  for (const UtteranceRecord& rec : records) {
    if (!rec.reference.has_value()) {
      throw_data("utterance '" + rec.id + "' has no reference");
    }
    if (!rec.hypothesis.has_value()) {
      throw_data("utterance '" + rec.id + "' has no hypothesis");
    }
    std::vector<std::string> ref = normalize_text(*rec.reference, config);
    std::vector<std::string> hyp = normalize_text(*rec.hypothesis, config);
    EditCounts counts = align(ref, hyp);
    report.per_utterance.push_back({rec.id, counts, utterance_wer(counts)});
    report.corpus.substitutions += counts.substitutions;
    report.corpus.deletions += counts.deletions;
    report.corpus.insertions += counts.insertions;
    report.corpus.hits += counts.hits;
    report.corpus.ref_len += counts.ref_len;
  }
  if (report.corpus.ref_len == 0) {
    throw_data("corpus has no reference words after normalization");
  }
  report.corpus_wer = static_cast<double>(report.corpus.total_edits()) /
                      static_cast<double>(report.corpus.ref_len);
  return report;
}

}  // namespace p2r
