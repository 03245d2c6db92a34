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

#ifndef P2R_TENSOR_HPP_
#define P2R_TENSOR_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace p2r {

inline constexpr int kMaxTensorRank = 8;
inline constexpr std::size_t kMaxTensorNameBytes = 65535;

// Dense row-major f32 tensor. Rank 0 (empty shape) is a scalar holding
// exactly one element.
struct Tensor {
  std::vector<std::uint64_t> shape;
  std::vector<float> data;

  static Tensor scalar(float value) { return Tensor{{}, {value}}; }
  static Tensor zeros(std::vector<std::uint64_t> shape);

  // Product of dims; 1 for rank 0. Throws kData on multiplication overflow.
  std::uint64_t numel() const;

  bool same_shape(const Tensor& other) const { return shape == other.shape; }
};

// Provenance marker for a checkpoint. Metadata only: it never enters the
// serialized form and does not affect arithmetic.
enum class Role {
  kUnspecified,
  kPretrained,
  kRealFinetuned,
  kPseudoFinetuned,
  kCorrected,
};

const char* role_name(Role role);

// Ordered collection of named tensors. Insertion order is preserved and is
// the serialization order; names are unique. Structural invariants (name
// length, rank, element count matching the shape) are enforced on insert.
class TensorMap {
 public:
  using Entry = std::pair<std::string, Tensor>;

  TensorMap() = default;

  // Inserts, or replaces in place when the name already exists.
  void set(std::string name, Tensor tensor);

  const Tensor* find(std::string_view name) const;
  // Throws kData when the name is absent.
  const Tensor& at(std::string_view name) const;

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<Entry>& entries() const { return entries_; }

  Role role() const { return role_; }
  void set_role(Role role) { role_ = role; }

  // Total element count across all tensors.
  std::uint64_t total_elements() const;

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
  Role role_ = Role::kUnspecified;
};

// First non-finite element, as (tensor name, flat index), or nullopt when
// every value is finite. Scans entries in order.
std::optional<std::pair<std::string, std::uint64_t>> find_non_finite(
    const TensorMap& map);

enum class CompatIssue {
  kMissingInFirst,   // name present only in the second map
  kMissingInSecond,  // name present only in the first map
  kShapeMismatch,
};

struct CompatMismatch {
  std::string name;
  CompatIssue issue;
  std::vector<std::uint64_t> shape_first;   // only for kShapeMismatch
  std::vector<std::uint64_t> shape_second;  // only for kShapeMismatch
};

struct CompatReport {
  bool compatible = false;
  std::vector<CompatMismatch> mismatches;
};

// Two maps are compatible when their name sets are identical and every
// shared name has an equal shape. Entry order is irrelevant. The report
// lists every mismatch: first the first map's entries in order (shape
// mismatches and names absent from the second map), then names present only
// in the second map, in that map's order.
CompatReport validate_compat(const TensorMap& a, const TensorMap& b);

// Throws kData with a mismatch summary when the maps are incompatible.
// `context` prefixes the message (e.g. the operation name).
void require_compat(const TensorMap& a, const TensorMap& b,
                    std::string_view context);

}  // namespace p2r

#endif  // P2R_TENSOR_HPP_
