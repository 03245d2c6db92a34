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

#ifndef P2R_TASK_ARITHMETIC_HPP_
#define P2R_TASK_ARITHMETIC_HPP_

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "p2r/tensor.hpp"

namespace p2r {

// Where a parameter difference came from: the roles of the two checkpoints
// and their (shared) shapes. Metadata only.
struct Provenance {
  Role minuend_role = Role::kUnspecified;
  Role subtrahend_role = Role::kUnspecified;
  std::vector<std::pair<std::string, std::vector<std::uint64_t>>> shapes;
};

// A parameter-space difference between two checkpoints with identical
// structure. Wraps a TensorMap; entry order follows the minuend.
class TaskVector {
 public:
  TaskVector() = default;  // empty vector, no tensors

  static TaskVector from_map(TensorMap map,
                             std::optional<Provenance> provenance = {});

  const TensorMap& map() const { return map_; }
  const std::optional<Provenance>& provenance() const { return provenance_; }

 private:
  TensorMap map_;
  std::optional<Provenance> provenance_;
};

// Validated scaling coefficient. Finite always; negative values only when
// explicitly enabled at construction.
class ScalingFactor {
 public:
  // Throws kUsage on NaN/Inf, and on negative values unless allowed.
  static ScalingFactor checked(double value, bool allow_negative = false);

  double value() const { return value_; }

 private:
  explicit ScalingFactor(double v) : value_(v) {}
  double value_;
};

// minuend - subtrahend, entrywise. Entry order follows the minuend;
// provenance records the input roles and shapes. Throws kData on
// incompatible maps, kComputation if any difference is non-finite.
TaskVector diff(const TensorMap& minuend, const TensorMap& subtrahend);

// base + lambda * v, entrywise in f32 (lambda rounded to f32 once). The
// result's role is kCorrected. lambda == 0 returns base bit-exactly.
// Throws kData on incompatible maps; kComputation on a non-finite result
// element, identifying tensor name and flat index.
TensorMap apply(const TensorMap& base, const TaskVector& v,
                const ScalingFactor& lambda);

// Entrywise mean. Accumulates in f64 in list order, divides once, narrows
// to f32. average of a single vector is bit-exact. Throws kUsage on an
// empty list, kData on incompatible members.
TaskVector average(std::span<const TaskVector> vectors);

// c * v entrywise in f32. Throws kUsage on non-finite c, kComputation on
// overflow to non-finite.
TaskVector scale(const TaskVector& v, double c);

struct VectorStats {
  // l2 norm over the concatenation of all elements, accumulated in f64.
  double l2_norm_a = 0.0;
  std::optional<double> l2_norm_b;
  // Cosine similarity of the concatenations; unset when either norm is
  // zero (reported as undefined, never NaN) or when only one vector given.
  std::optional<double> cosine;
  bool cosine_undefined = false;  // true only for the zero-norm case
};

VectorStats vector_stats(const TaskVector& a, const TaskVector* b = nullptr);

}  // namespace p2r

#endif  // P2R_TASK_ARITHMETIC_HPP_
