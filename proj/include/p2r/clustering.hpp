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

#ifndef P2R_CLUSTERING_HPP_
#define P2R_CLUSTERING_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "p2r/wer.hpp"

namespace p2r {

// Fixed-dimension embedding vectors keyed by utterance id, kept in input
// (file) order.
struct EmbeddingSet {
  std::size_t dim = 0;
  std::vector<std::string> ids;
  std::vector<std::vector<double>> vectors;  // parallel to ids

  std::size_t size() const { return ids.size(); }
};

struct KmeansParams {
  int max_iter = 300;
  double tol = 1e-4;
  int n_init = 10;
};

struct ClusterAssignment {
  int k = 0;
  std::uint64_t seed = 0;
  double inertia = 0.0;
  std::vector<std::vector<double>> centroids;  // k x dim
  std::vector<std::string> ids;                // embedding input order
  std::vector<int> labels;                     // parallel to ids

  // Cluster index for an id; throws kData when the id is unknown.
  int label_of(std::string_view id) const;

  void rebuild_index();

 private:
  std::unordered_map<std::string, int> index_;
};

// Per-restart convergence record, exposed for tests and diagnostics.
struct KmeansDiagnostics {
  struct Run {
    std::uint64_t seed = 0;
    // Assignment inertia after each Lloyd iteration's E-step.
    std::vector<double> inertia_history;
    int iterations = 0;
    bool converged_by_labels = false;
    bool converged_by_shift = false;
    bool repaired_empty_cluster = false;
    double final_inertia = 0.0;
  };
  std::vector<Run> runs;
  int best_run = 0;
};

// Lloyd's algorithm with D^2-weighted seeding, restarted n_init times from
// seeds derived from `seed`; the restart with the lowest final inertia wins
// (ties: lowest restart index). Within a run, iteration stops when labels
// repeat, when the Frobenius norm of the centroid movement drops to
// tol * sqrt(mean per-dimension variance of the data), or at max_iter.
// Empty clusters are repaired by re-seeding them with the point farthest
// from its assigned centroid. The final labeling is a plain
// nearest-centroid assignment (ties: lowest cluster index) with no repair.
// Requires 1 <= k <= n. Fully deterministic in (data, k, seed, params).
ClusterAssignment kmeans(const EmbeddingSet& embeddings, int k,
                         std::uint64_t seed, const KmeansParams& params = {},
                         KmeansDiagnostics* diagnostics = nullptr);

// Splits manifest records into per-cluster manifests by utterance id,
// preserving record order. Every record's id must be present in the
// assignment; clusters may come back empty.
std::vector<std::vector<UtteranceRecord>> partition_manifests(
    const ClusterAssignment& assignment,
    std::span<const UtteranceRecord> records);

}  // namespace p2r

#endif  // P2R_CLUSTERING_HPP_
