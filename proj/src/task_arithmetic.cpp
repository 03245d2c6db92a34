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

#include "p2r/task_arithmetic.hpp"

#include <cmath>
#include <functional>

#include "p2r/common.hpp"
#include "p2r/kernels.hpp"
#include "p2r/parallel.hpp"

namespace p2r {

namespace {

// Scans a freshly produced map and reports the first non-finite element.
// Inputs are validated at load time, so this only fires on overflow
// introduced by the arithmetic itself.
void require_finite_result(const TensorMap& map, const char* op) {
  auto bad = find_non_finite(map);
  if (bad.has_value()) {
    throw_computation(std::string(op) + ": non-finite result in tensor '" +
                      bad->first + "' at flat index " +
                      std::to_string(bad->second));
  }
}

// Builds a result map with the same structure as the reference map,
// filling each tensor's payload with fill(entry_index, dst). Entries are
// independent, so they are distributed across worker threads.
TensorMap map_like(const TensorMap& ref,
                   const std::function<void(std::size_t, Tensor&)>& fill) {
  std::vector<TensorMap::Entry> entries(ref.entries().begin(),
                                        ref.entries().end());
  parallel_for(entries.size(), [&](std::size_t i) {
    fill(i, entries[i].second);
  });
  TensorMap out;
  for (auto& [name, tensor] : entries) out.set(std::move(name), std::move(tensor));
  return out;
}

std::vector<std::pair<std::string, std::vector<std::uint64_t>>>
shape_summary(const TensorMap& map) {
  std::vector<std::pair<std::string, std::vector<std::uint64_t>>> shapes;
  shapes.reserve(map.size());
  for (const auto& [name, t] : map.entries()) shapes.emplace_back(name, t.shape);
  return shapes;
}

}  // namespace

TaskVector TaskVector::from_map(TensorMap map,
                                std::optional<Provenance> provenance) {
  if (provenance.has_value() &&
      provenance->shapes != shape_summary(map)) {
    throw_data("task vector provenance does not match entry shapes");
  }
  TaskVector v;
  v.map_ = std::move(map);
  v.provenance_ = std::move(provenance);
  return v;
}

ScalingFactor ScalingFactor::checked(double value, bool allow_negative) {
  if (!std::isfinite(value)) {
    throw_usage("scaling factor must be finite");
  }
  if (value < 0.0 && !allow_negative) {
    throw_usage("negative scaling factor " + std::to_string(value) +
                " requires explicitly allowing the negative range");
  }
  return ScalingFactor(value);
}

TaskVector diff(const TensorMap& minuend, const TensorMap& subtrahend) {
  require_compat(minuend, subtrahend, "diff");
  const auto& k = kernels::active_kernels();
  TensorMap out = map_like(minuend, [&](std::size_t i, Tensor& t) {
    const auto& name = minuend.entries()[i].first;
    const Tensor& a = minuend.entries()[i].second;
    const Tensor& b = subtrahend.at(name);
    k.sub_f32(t.data.data(), a.data.data(), b.data.data(), t.data.size());
  });
  require_finite_result(out, "diff");
  Provenance prov;
  prov.minuend_role = minuend.role();
  prov.subtrahend_role = subtrahend.role();
  prov.shapes = shape_summary(minuend);
  return TaskVector::from_map(std::move(out), std::move(prov));
}

TensorMap apply(const TensorMap& base, const TaskVector& v,
                const ScalingFactor& lambda) {
  require_compat(base, v.map(), "apply");
  TensorMap out;
  if (lambda.value() == 0.0) {
    // No correction: hand back the base bit-for-bit (base + 0*v would
    // rewrite -0.0 elements to +0.0).
    out = base;
  } else {
    const auto& k = kernels::active_kernels();
    float c = static_cast<float>(lambda.value());
    out = map_like(base, [&](std::size_t i, Tensor& t) {
      const auto& name = base.entries()[i].first;
      const Tensor& b = base.entries()[i].second;
      const Tensor& w = v.map().at(name);
      k.add_scaled_f32(t.data.data(), b.data.data(), w.data.data(), c,
                       t.data.size());
    });
    require_finite_result(out, "apply");
  }
  out.set_role(Role::kCorrected);
  return out;
}

TaskVector average(std::span<const TaskVector> vectors) {
  if (vectors.empty()) {
    throw_usage("average requires at least one task vector");
  }
  const TensorMap& first = vectors.front().map();
  for (std::size_t i = 1; i < vectors.size(); ++i) {
    require_compat(first, vectors[i].map(), "average");
  }
  const auto& k = kernels::active_kernels();
  double count = static_cast<double>(vectors.size());
  TensorMap out = map_like(first, [&](std::size_t i, Tensor& t) {
    const auto& name = first.entries()[i].first;
    std::vector<double> acc(t.data.size(), 0.0);
    for (const TaskVector& v : vectors) {
      const Tensor& src = v.map().at(name);
      k.accum_f64(acc.data(), src.data.data(), acc.size());
    }
    k.div_to_f32(t.data.data(), acc.data(), count, acc.size());
  });
  return TaskVector::from_map(std::move(out));
}

TaskVector scale(const TaskVector& v, double c) {
  if (!std::isfinite(c)) throw_usage("scale factor must be finite");
  const auto& k = kernels::active_kernels();
  float cf = static_cast<float>(c);
  TensorMap out = map_like(v.map(), [&](std::size_t i, Tensor& t) {
    const Tensor& src = v.map().entries()[i].second;
    k.scale_f32(t.data.data(), src.data.data(), cf, t.data.size());
  });
  require_finite_result(out, "scale");
  return TaskVector::from_map(std::move(out));
}

VectorStats vector_stats(const TaskVector& a, const TaskVector* b) {
  const auto& k = kernels::active_kernels();
  VectorStats stats;

  double sq_a = 0.0;
  for (const auto& [name, t] : a.map().entries()) {
    sq_a += k.dot_f32(t.data.data(), t.data.data(), t.data.size());
  }
  stats.l2_norm_a = std::sqrt(sq_a);

  if (b == nullptr) return stats;
  require_compat(a.map(), b->map(), "vector_stats");

  double sq_b = 0.0;
  for (const auto& [name, t] : b->map().entries()) {
    sq_b += k.dot_f32(t.data.data(), t.data.data(), t.data.size());
  }
  stats.l2_norm_b = std::sqrt(sq_b);

  if (stats.l2_norm_a == 0.0 || *stats.l2_norm_b == 0.0) {
    stats.cosine_undefined = true;
    return stats;
  }
  // Pair elements by tensor name; the two maps may order entries
  // differently.
  double dot = 0.0;
  for (const auto& [name, t] : a.map().entries()) {
    const Tensor& u = b->map().at(name);
    dot += k.dot_f32(t.data.data(), u.data.data(), t.data.size());
  }
  stats.cosine = dot / (stats.l2_norm_a * *stats.l2_norm_b);
  return stats;
}

}  // namespace p2r
