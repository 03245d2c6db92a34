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
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "p2r/clustering.hpp"
#include "p2r/common.hpp"
#include "p2r/manifest.hpp"
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

EmbeddingSet make_set(std::vector<std::vector<double>> vectors) {
  EmbeddingSet set;
  set.dim = vectors.empty() ? 0 : vectors[0].size();
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    set.ids.push_back("u" + std::to_string(i));
  }
  set.vectors = std::move(vectors);
  return set;
}

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// Exact optimum for k = 2 by trying every bipartition. Feasible to n ~ 16.
double best_two_cluster_inertia(const EmbeddingSet& set) {
  std::size_t n = set.size();
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    std::vector<std::vector<double>> centroid(2,
                                              std::vector<double>(set.dim, 0));
    std::size_t count[2] = {0, 0};
    for (std::size_t i = 0; i < n; ++i) {
      int side = (mask >> i) & 1;
      count[side] += 1;
      for (std::size_t d = 0; d < set.dim; ++d) {
        centroid[side][d] += set.vectors[i][d];
      }
    }
    if (count[0] == 0 || count[1] == 0) continue;
    for (int side = 0; side < 2; ++side) {
      for (std::size_t d = 0; d < set.dim; ++d) {
        centroid[side][d] /= static_cast<double>(count[side]);
      }
    }
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      inertia += sq_dist(set.vectors[i], centroid[(mask >> i) & 1]);
    }
    best = std::min(best, inertia);
  }
  return best;
}

EmbeddingSet two_blobs(Rng& rng, std::size_t per_blob, std::size_t dim,
                       double separation) {
  std::vector<std::vector<double>> vectors;
  for (std::size_t i = 0; i < 2 * per_blob; ++i) {
    std::vector<double> v(dim);
    double center = i < per_blob ? 0.0 : separation;
    for (double& x : v) {
      x = center + 0.3 * rng.normal();
    }
    vectors.push_back(std::move(v));
  }
  return make_set(std::move(vectors));
}

}  // namespace

TEST_CASE("single cluster centroid is the mean and labels are zero") {
  EmbeddingSet set = make_set({{0.0, 0.0}, {2.0, 0.0}, {1.0, 3.0}});
  ClusterAssignment a = kmeans(set, 1, 42);
  CHECK(a.k == 1);
  REQUIRE(a.centroids.size() == 1);
  CHECK(a.centroids[0][0] == doctest::Approx(1.0));
  CHECK(a.centroids[0][1] == doctest::Approx(1.0));
  CHECK(a.labels == std::vector<int>{0, 0, 0});
  // Inertia = sum of squared distances to the mean.
  double expect = sq_dist(set.vectors[0], a.centroids[0]) +
                  sq_dist(set.vectors[1], a.centroids[0]) +
                  sq_dist(set.vectors[2], a.centroids[0]);
  CHECK(a.inertia == doctest::Approx(expect));
}

TEST_CASE("k equals n puts every point in its own cluster with zero inertia") {
  EmbeddingSet set = make_set({{0.0}, {5.0}, {9.0}, {13.0}});
  ClusterAssignment a = kmeans(set, 4, 1);
  CHECK(a.inertia == doctest::Approx(0.0));
  std::vector<int> sorted = a.labels;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("well separated blobs are recovered exactly") {
  Rng rng(5);
  EmbeddingSet set = two_blobs(rng, 6, 3, 10.0);
  ClusterAssignment a = kmeans(set, 2, 7);
  // All first-blob points share a label, all second-blob points the other.
  for (std::size_t i = 1; i < 6; ++i) CHECK(a.labels[i] == a.labels[0]);
  for (std::size_t i = 7; i < 12; ++i) CHECK(a.labels[i] == a.labels[6]);
  CHECK(a.labels[0] != a.labels[6]);
}

TEST_CASE("restarted search matches the exhaustive two cluster optimum") {
  Rng rng(100);
  for (int instance = 0; instance < 20; ++instance) {
    EmbeddingSet set = two_blobs(rng, 6, 2, 2.5);  // overlapping blobs
    ClusterAssignment a = kmeans(set, 2, 1234 + std::uint64_t(instance));
    double best = best_two_cluster_inertia(set);
    CHECK(a.inertia == doctest::Approx(best).epsilon(1e-9));
  }
}

TEST_CASE("identical inputs give identical assignments") {
  Rng rng(8);
  EmbeddingSet set = two_blobs(rng, 8, 4, 3.0);
  ClusterAssignment a = kmeans(set, 3, 99);
  ClusterAssignment b = kmeans(set, 3, 99);
  CHECK(a.labels == b.labels);
  CHECK(a.inertia == b.inertia);
  CHECK(a.centroids == b.centroids);

  ClusterAssignment c = kmeans(set, 3, 100);
  CHECK(c.seed == 99 + 1);  // seed recorded in the result
  CHECK(a.seed == 99);
}

TEST_CASE("per iteration inertia never increases") {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    EmbeddingSet set = two_blobs(rng, 10, 3, 1.5);
    KmeansDiagnostics diag;
    (void)kmeans(set, 4, 7000 + std::uint64_t(trial), {}, &diag);
    REQUIRE(!diag.runs.empty());
    for (const KmeansDiagnostics::Run& run : diag.runs) {
      if (run.repaired_empty_cluster) continue;  // repair may move uphill
      for (std::size_t i = 1; i < run.inertia_history.size(); ++i) {
        CHECK(run.inertia_history[i] <= run.inertia_history[i - 1] + 1e-9);
      }
    }
  }
}

TEST_CASE("every run converges before max_iter on easy data") {
  Rng rng(31);
  EmbeddingSet set = two_blobs(rng, 10, 2, 8.0);
  KmeansDiagnostics diag;
  (void)kmeans(set, 2, 5, {}, &diag);
  for (const KmeansDiagnostics::Run& run : diag.runs) {
    CHECK((run.converged_by_labels || run.converged_by_shift));
  }
  CHECK(diag.best_run >= 0);
  CHECK(std::size_t(diag.best_run) < diag.runs.size());
  // The winner's final inertia is the minimum across restarts.
  double best = diag.runs[std::size_t(diag.best_run)].final_inertia;
  for (const KmeansDiagnostics::Run& run : diag.runs) {
    CHECK(best <= run.final_inertia + 1e-12);
  }
}

TEST_CASE("duplicate points trigger empty cluster repair or singletons") {
  // Five copies of one point and one outlier, k = 3: at most two distinct
  // locations exist, so seeding must cope with collapsed clusters.
  EmbeddingSet set = make_set(
      {{1.0, 1.0}, {1.0, 1.0}, {1.0, 1.0}, {1.0, 1.0}, {1.0, 1.0}, {9.0, 9.0}});
  ClusterAssignment a = kmeans(set, 3, 77);
  CHECK(a.labels.size() == 6);
  for (int label : a.labels) {
    CHECK(label >= 0);
    CHECK(label < 3);
  }
  // The outlier never shares a cluster with the duplicates.
  CHECK(a.labels[5] != a.labels[0]);
}

TEST_CASE("all points identical collapses every cluster") {
  EmbeddingSet set =
      make_set({{2.0, 2.0}, {2.0, 2.0}, {2.0, 2.0}, {2.0, 2.0}});
  ClusterAssignment a = kmeans(set, 2, 3);
  CHECK(a.inertia == doctest::Approx(0.0));
  for (int label : a.labels) {
    CHECK(label >= 0);
    CHECK(label < 2);
  }
}

TEST_CASE("invalid requests are rejected") {
  EmbeddingSet set = make_set({{1.0}, {2.0}});
  CHECK(kind_of([&] { (void)kmeans(set, 0, 1); }) == ErrorKind::kUsage);
  CHECK(kind_of([&] { (void)kmeans(set, 3, 1); }) == ErrorKind::kUsage);
  CHECK(kind_of([&] { (void)kmeans(EmbeddingSet{}, 1, 1); }) ==
        ErrorKind::kData);

  KmeansParams bad;
  bad.max_iter = 0;
  CHECK(kind_of([&] { (void)kmeans(set, 1, 1, bad); }) == ErrorKind::kUsage);
  bad = {};
  bad.tol = -1.0;
  CHECK(kind_of([&] { (void)kmeans(set, 1, 1, bad); }) == ErrorKind::kUsage);
  bad = {};
  bad.n_init = 0;
  CHECK(kind_of([&] { (void)kmeans(set, 1, 1, bad); }) == ErrorKind::kUsage);

  EmbeddingSet ragged;
  ragged.dim = 2;
  ragged.ids = {"a", "b"};
  ragged.vectors = {{1.0, 2.0}, {1.0}};
  CHECK(kind_of([&] { (void)kmeans(ragged, 1, 1); }) == ErrorKind::kData);
}

TEST_CASE("label lookup by id") {
  EmbeddingSet set = make_set({{0.0}, {10.0}});
  ClusterAssignment a = kmeans(set, 2, 9);
  CHECK(a.label_of("u0") == a.labels[0]);
  CHECK(a.label_of("u1") == a.labels[1]);
  CHECK(a.label_of("u0") != a.label_of("u1"));
  CHECK(kind_of([&] { (void)a.label_of("nope"); }) == ErrorKind::kData);
}

TEST_CASE("manifest partition preserves order and allows empty clusters") {
  EmbeddingSet set = make_set({{0.0}, {0.1}, {10.0}});
  ClusterAssignment a = kmeans(set, 2, 13);

  std::vector<UtteranceRecord> records(3);
  records[0].id = "u2";  // deliberate order change vs embeddings
  records[1].id = "u0";
  records[2].id = "u1";
  auto parts = partition_manifests(a, records);
  REQUIRE(parts.size() == 2);
  int near = a.label_of("u0");
  int far = a.label_of("u2");
  REQUIRE(near != far);
  REQUIRE(parts[std::size_t(far)].size() == 1);
  CHECK(parts[std::size_t(far)][0].id == "u2");
  REQUIRE(parts[std::size_t(near)].size() == 2);
  CHECK(parts[std::size_t(near)][0].id == "u0");
  CHECK(parts[std::size_t(near)][1].id == "u1");

  records[0].id = "unknown";
  CHECK(kind_of([&] { (void)partition_manifests(a, records); }) ==
        ErrorKind::kData);
}

TEST_CASE("assignment json round trip") {
  EmbeddingSet set = make_set({{0.0, 1.0}, {5.0, 5.0}, {0.2, 0.8}});
  ClusterAssignment a = kmeans(set, 2, 31);
  std::string text = assignment_to_json(a);
  ClusterAssignment b = assignment_from_json(text);
  CHECK(b.k == a.k);
  CHECK(b.seed == a.seed);
  CHECK(b.inertia == doctest::Approx(a.inertia).epsilon(1e-12));
  REQUIRE(b.centroids.size() == a.centroids.size());
  for (std::size_t c = 0; c < a.centroids.size(); ++c) {
    for (std::size_t d = 0; d < a.centroids[c].size(); ++d) {
      CHECK(b.centroids[c][d] == doctest::Approx(a.centroids[c][d]));
    }
  }
  for (const std::string& id : a.ids) {
    CHECK(b.label_of(id) == a.label_of(id));
  }
}

TEST_CASE("assignment json rejects malformed documents") {
  CHECK(kind_of([] { (void)assignment_from_json("not json"); }) ==
        ErrorKind::kData);
  CHECK(kind_of([] { (void)assignment_from_json("[]"); }) == ErrorKind::kData);
  CHECK(kind_of([] {
          (void)assignment_from_json(
              R"({"k":0,"seed":1,"inertia":0,"centroids":[],"labels":{}})");
        }) == ErrorKind::kData);
  CHECK(kind_of([] {
          // Label out of range for k = 1.
          (void)assignment_from_json(
              R"({"k":1,"seed":1,"inertia":0,"centroids":[[0.0]],)"
              R"("labels":{"u0":1}})");
        }) == ErrorKind::kData);
  CHECK(kind_of([] {
          // Centroid row count does not match k.
          (void)assignment_from_json(
              R"({"k":2,"seed":1,"inertia":0,"centroids":[[0.0]],)"
              R"("labels":{"u0":0}})");
        }) == ErrorKind::kData);
}
