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

#include "p2r/clustering.hpp"

#include <cmath>
#include <limits>

#include "p2r/common.hpp"
#include "p2r/kernels.hpp"
#include "p2r/parallel.hpp"
#include "p2r/rng.hpp"

namespace p2r {

namespace {

struct RunResult {
  std::vector<std::vector<double>> centroids;
  std::vector<int> labels;
  double inertia = 0.0;
};

double sqdist(const std::vector<double>& a, const std::vector<double>& b) {
  return kernels::active_kernels().sqdist_f64(a.data(), b.data(), a.size());
}

// Nearest centroid, ties to the lowest index.
int nearest(const std::vector<double>& point,
            const std::vector<std::vector<double>>& centroids) {
  int best = 0;
  double best_d = sqdist(point, centroids[0]);
  for (std::size_t c = 1; c < centroids.size(); ++c) {
    double d = sqdist(point, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

double assignment_inertia(const EmbeddingSet& e,
                          const std::vector<std::vector<double>>& centroids,
                          const std::vector<int>& labels) {
  double total = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    total += sqdist(e.vectors[i], centroids[labels[i]]);
  }
  return total;
}

// D^2-weighted seeding. Duplicate points collapse the distance mass to
// zero; the fallback draw is then uniform.
std::vector<std::vector<double>> seed_centroids(const EmbeddingSet& e, int k,
                                                Rng& rng) {
  std::size_t n = e.size();
  std::vector<std::vector<double>> centroids;
  centroids.reserve(k);
  centroids.push_back(e.vectors[rng.uniform_index(n)]);

  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = sqdist(e.vectors[i], centroids[0]);

  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (double d : d2) total += d;
    std::size_t pick;
    if (total <= 0.0) {
      pick = rng.uniform_index(n);
    } else {
      double r = rng.uniform() * total;
      double cum = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        cum += d2[i];
        if (cum > r) {
          pick = i;
          break;
        }
      }
    }
    centroids.push_back(e.vectors[pick]);
    for (std::size_t i = 0; i < n; ++i) {
      double d = sqdist(e.vectors[i], centroids.back());
      if (d < d2[i]) d2[i] = d;
    }
  }
  return centroids;
}

// Re-seeds each empty cluster with the point farthest from its assigned
// centroid, never draining a singleton cluster. Ties go to the lowest
// point index.
bool repair_empty(const EmbeddingSet& e,
                  const std::vector<std::vector<double>>& centroids,
                  std::vector<int>& labels, std::vector<int>& counts) {
  bool repaired = false;
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    if (counts[c] != 0) continue;
    std::size_t farthest = e.size();
    double far_d = -1.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (counts[labels[i]] <= 1) continue;
      double d = sqdist(e.vectors[i], centroids[labels[i]]);
      if (d > far_d) {
        far_d = d;
        farthest = i;
      }
    }
    if (farthest == e.size()) continue;  // nothing movable
    counts[labels[farthest]] -= 1;
    labels[farthest] = static_cast<int>(c);
    counts[c] = 1;
    repaired = true;
  }
  return repaired;
}

RunResult run_lloyd(const EmbeddingSet& e, int k, std::uint64_t run_seed,
                    const KmeansParams& params, double shift_threshold,
                    KmeansDiagnostics::Run* diag) {
  const auto& kern = kernels::active_kernels();
  std::size_t n = e.size();
  std::size_t dim = e.dim;
  Rng rng(run_seed);

  std::vector<std::vector<double>> centroids = seed_centroids(e, k, rng);
  std::vector<int> labels(n);
  std::vector<int> counts(k);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = nearest(e.vectors[i], centroids);
    counts[labels[i]] += 1;
  }

  std::vector<int> prev_labels;
  int iterations = 0;
  for (int iter = 0; iter < params.max_iter; ++iter) {
    iterations = iter + 1;
    if (repair_empty(e, centroids, labels, counts)) {
      if (diag != nullptr) diag->repaired_empty_cluster = true;
    }

    // M-step: per-cluster means in f64, accumulated in point order.
    std::vector<std::vector<double>> next(k, std::vector<double>(dim, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      kern.add_f64(next[labels[i]].data(), e.vectors[i].data(), dim);
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        kern.div_f64(next[c].data(), next[c].data(),
                     static_cast<double>(counts[c]), dim);
      } else {
        next[c] = centroids[c];  // unrepairable empty cluster keeps its seat
      }
    }

    double shift_sq = 0.0;
    for (int c = 0; c < k; ++c) shift_sq += sqdist(next[c], centroids[c]);
    centroids = std::move(next);

    // E-step against the fresh centroids.
    prev_labels = labels;
    counts.assign(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = nearest(e.vectors[i], centroids);
      counts[labels[i]] += 1;
    }
    if (diag != nullptr) {
      diag->inertia_history.push_back(assignment_inertia(e, centroids, labels));
    }

    if (labels == prev_labels) {
      if (diag != nullptr) diag->converged_by_labels = true;
      break;
    }
    if (std::sqrt(shift_sq) <= shift_threshold) {
      if (diag != nullptr) diag->converged_by_shift = true;
      break;
    }
  }

  RunResult result;
  result.inertia = assignment_inertia(e, centroids, labels);
  result.centroids = std::move(centroids);
  result.labels = std::move(labels);
  if (diag != nullptr) {
    diag->iterations = iterations;
    diag->final_inertia = result.inertia;
  }
  return result;
}

}  // namespace

int ClusterAssignment::label_of(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) {
    throw_data("id '" + std::string(id) + "' is not in the cluster assignment");
  }
  return it->second;
}

void ClusterAssignment::rebuild_index() {
  index_.clear();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    index_[ids[i]] = labels[i];
  }
}

ClusterAssignment kmeans(const EmbeddingSet& embeddings, int k,
                         std::uint64_t seed, const KmeansParams& params,
                         KmeansDiagnostics* diagnostics) {
  std::size_t n = embeddings.size();
  if (n == 0) throw_data("embedding set is empty");
  if (k < 1 || static_cast<std::size_t>(k) > n) {
    throw_usage("k must satisfy 1 <= k <= " + std::to_string(n) + ", got " +
                std::to_string(k));
  }
  if (params.max_iter < 1) throw_usage("max_iter must be >= 1");
  if (!(params.tol >= 0.0)) throw_usage("tol must be >= 0");
  if (params.n_init < 1) throw_usage("n_init must be >= 1");
  for (const auto& v : embeddings.vectors) {
    if (v.size() != embeddings.dim) {
      throw_data("embedding dimension mismatch in input set");
    }
  }

  // Convergence scale: tol * sqrt(mean per-dimension variance).
  double mean_var = 0.0;
  {
    const auto& kern = kernels::active_kernels();
    std::vector<double> mean(embeddings.dim, 0.0);
    for (const auto& v : embeddings.vectors) {
      kern.add_f64(mean.data(), v.data(), embeddings.dim);
    }
    kern.div_f64(mean.data(), mean.data(), static_cast<double>(n),
                 embeddings.dim);
    double var_sum = 0.0;
    for (const auto& v : embeddings.vectors) {
      var_sum += kern.sqdist_f64(v.data(), mean.data(), embeddings.dim);
    }
    mean_var = var_sum / static_cast<double>(n) /
               static_cast<double>(embeddings.dim);
  }
  double shift_threshold = params.tol * std::sqrt(mean_var);

  std::vector<RunResult> results(params.n_init);
  std::vector<KmeansDiagnostics::Run> run_diags(params.n_init);
  parallel_for(static_cast<std::size_t>(params.n_init), [&](std::size_t r) {
    std::uint64_t run_seed = derive_seed(seed, {20, r});
    run_diags[r].seed = run_seed;
    results[r] = run_lloyd(embeddings, k, run_seed, params, shift_threshold,
                           &run_diags[r]);
  });

  std::size_t best = 0;
  for (std::size_t r = 1; r < results.size(); ++r) {
    if (results[r].inertia < results[best].inertia) best = r;
  }

  if (diagnostics != nullptr) {
    diagnostics->runs = std::move(run_diags);
    diagnostics->best_run = static_cast<int>(best);
  }

  ClusterAssignment out;
  out.k = k;
  out.seed = seed;
  out.inertia = results[best].inertia;
  out.centroids = std::move(results[best].centroids);
  out.ids = embeddings.ids;
  out.labels = std::move(results[best].labels);
  out.rebuild_index();
  return out;
}

std::vector<std::vector<UtteranceRecord>> partition_manifests(
    const ClusterAssignment& assignment,
    std::span<const UtteranceRecord> records) {
  std::vector<std::vector<UtteranceRecord>> buckets(
      static_cast<std::size_t>(assignment.k));
  for (const UtteranceRecord& rec : records) {
    int label = assignment.label_of(rec.id);
    buckets[static_cast<std::size_t>(label)].push_back(rec);
  }
  return buckets;
}

}  // namespace p2r
