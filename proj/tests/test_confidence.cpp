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

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "p2r/common.hpp"
#include "p2r/confidence.hpp"
#include "p2r/rng.hpp"

using namespace p2r;

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

std::vector<ConfidenceRecord> scored(std::vector<double> scores) {
  std::vector<ConfidenceRecord> records;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    records.push_back({"u" + std::to_string(i), scores[i]});
  }
  return records;
}

// True when `small` appears within `big` in order (both are in input order,
// so subset implies subsequence).
bool is_subsequence(const std::vector<std::string>& small,
                    const std::vector<std::string>& big) {
  std::size_t j = 0;
  for (const std::string& id : small) {
    while (j < big.size() && big[j] != id) ++j;
    if (j == big.size()) return false;
    ++j;
  }
  return true;
}

}  // namespace

TEST_CASE("confidence is the mean word log probability") {
  UtteranceRecord rec;
  rec.id = "u";
  rec.hypothesis = "a b c";
  rec.word_logprobs = std::vector<double>{-1.0, -2.0, -3.0};
  ConfidenceRecord c = confidence_score(rec);
  CHECK(c.id == "u");
  CHECK(c.score == doctest::Approx(-2.0));
}

TEST_CASE("confidence requires word log probabilities") {
  UtteranceRecord rec;
  rec.id = "u";
  rec.hypothesis = "a";
  CHECK(kind_of([&] { (void)confidence_score(rec); }) == ErrorKind::kData);
  rec.word_logprobs = std::vector<double>{};
  CHECK(kind_of([&] { (void)confidence_score(rec); }) == ErrorKind::kData);
}

TEST_CASE("quantile interpolates linearly between closest ranks") {
  std::vector<double> sorted = {1, 2, 3, 4, 5, 6, 7, 8};
  // h = (n-1) p = 7 * 0.5 = 3.5 -> halfway between 4 and 5.
  CHECK(quantile_linear(sorted, 0.5) == doctest::Approx(4.5));
  CHECK(quantile_linear(sorted, 0.0) == doctest::Approx(1.0));
  CHECK(quantile_linear(sorted, 1.0) == doctest::Approx(8.0));
  // h = 7 * 0.25 = 1.75 -> 2 + 0.75 * (3 - 2).
  CHECK(quantile_linear(sorted, 0.25) == doctest::Approx(2.75));

  std::vector<double> four = {1, 2, 3, 4};
  // h = 3 * 0.75 = 2.25 -> 3 + 0.25 * (4 - 3).
  CHECK(quantile_linear(four, 0.75) == doctest::Approx(3.25));

  std::vector<double> one = {7.0};
  CHECK(quantile_linear(one, 0.5) == doctest::Approx(7.0));
}

TEST_CASE("median filter on eight scores keeps the top half") {
  std::vector<ConfidenceRecord> records =
      scored({1, 2, 3, 4, 5, 6, 7, 8});
  FilterResult r = quartile_filter(records, QuartileLevel::kQ2);
  CHECK(r.threshold == doctest::Approx(4.5));
  CHECK(r.kept_ids ==
        std::vector<std::string>{"u4", "u5", "u6", "u7"});  // scores 5..8
  CHECK(r.total == 8);
  CHECK(r.keep_rate() == doctest::Approx(0.5));
}

TEST_CASE("upper quartile filter on four scores keeps only the top") {
  std::vector<ConfidenceRecord> records = scored({1, 2, 3, 4});
  FilterResult r = quartile_filter(records, QuartileLevel::kQ3);
  CHECK(r.threshold == doctest::Approx(3.25));
  CHECK(r.kept_ids == std::vector<std::string>{"u3"});  // only score 4
  CHECK(r.keep_rate() == doctest::Approx(0.25));
}

TEST_CASE("kept ids preserve input order") {
  std::vector<ConfidenceRecord> records = scored({8, 1, 7, 2, 6, 3, 5, 4});
  FilterResult r = quartile_filter(records, QuartileLevel::kQ2);
  // Threshold 4.5; scores 8, 7, 6, 5 survive in their original positions.
  CHECK(r.kept_ids == std::vector<std::string>{"u0", "u2", "u4", "u6"});
}

TEST_CASE("threshold comparison is at or above") {
  // All scores equal: the quantile equals the score, everything is kept.
  std::vector<ConfidenceRecord> records = scored({-3, -3, -3, -3});
  for (QuartileLevel level :
       {QuartileLevel::kQ1, QuartileLevel::kQ2, QuartileLevel::kQ3}) {
    FilterResult r = quartile_filter(records, level);
    CHECK(r.kept_ids.size() == 4);
  }
}

TEST_CASE("higher levels keep subsets of lower levels") {
  Rng rng(404);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> scores(1 + rng.uniform_index(40));
    for (double& s : scores) {
      s = -5.0 * rng.uniform();
    }
    std::vector<ConfidenceRecord> records = scored(scores);
    FilterResult q1 = quartile_filter(records, QuartileLevel::kQ1);
    FilterResult q2 = quartile_filter(records, QuartileLevel::kQ2);
    FilterResult q3 = quartile_filter(records, QuartileLevel::kQ3);
    CHECK(q1.threshold <= q2.threshold);
    CHECK(q2.threshold <= q3.threshold);
    CHECK(q3.kept_ids.size() <= q2.kept_ids.size());
    CHECK(q2.kept_ids.size() <= q1.kept_ids.size());
    CHECK(is_subsequence(q2.kept_ids, q1.kept_ids));
    CHECK(is_subsequence(q3.kept_ids, q2.kept_ids));
    // Quartile cut keeps at least roughly the expected share.
    CHECK(q1.kept_ids.size() >= records.size() / 4);
  }
}

TEST_CASE("filter rejects empty input") {
  CHECK(kind_of([] {
          (void)quartile_filter(std::vector<ConfidenceRecord>{},
                                QuartileLevel::kQ2);
        }) == ErrorKind::kData);
}

TEST_CASE("level parsing is case insensitive and strict") {
  CHECK(parse_quartile_level("Q1") == QuartileLevel::kQ1);
  CHECK(parse_quartile_level("q2") == QuartileLevel::kQ2);
  CHECK(parse_quartile_level("Q3") == QuartileLevel::kQ3);
  CHECK(std::string(quartile_level_name(QuartileLevel::kQ2)) == "Q2");
  CHECK(kind_of([] { (void)parse_quartile_level("Q4"); }) ==
        ErrorKind::kUsage);
  CHECK(kind_of([] { (void)parse_quartile_level(""); }) == ErrorKind::kUsage);
  CHECK(kind_of([] { (void)parse_quartile_level("median"); }) ==
        ErrorKind::kUsage);
}

TEST_CASE("non finite scores are computation errors") {
  UtteranceRecord rec;
  rec.id = "u";
  rec.word_logprobs =
      std::vector<double>{-1.0, -std::numeric_limits<double>::infinity()};
  CHECK(kind_of([&] { (void)confidence_score(rec); }) ==
        ErrorKind::kComputation);
}
