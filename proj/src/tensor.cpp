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

#include "p2r/tensor.hpp"

#include <cmath>
#include <sstream>

#include "p2r/common.hpp"

namespace p2r {

namespace {

std::string shape_to_string(const std::vector<std::uint64_t>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) os << ", ";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

std::uint64_t checked_numel(const std::vector<std::uint64_t>& shape,
                            std::string_view name) {
  std::uint64_t n = 1;
  for (std::uint64_t d : shape) {
    std::uint64_t next = 0;
    if (__builtin_mul_overflow(n, d, &next)) {
      throw_data("tensor '" + std::string(name) +
                 "': element count overflows uint64 for shape " +
                 shape_to_string(shape));
    }
    n = next;
  }
  return n;
}

}  // namespace

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage: return "usage";
    case ErrorKind::kData: return "data";
    case ErrorKind::kComputation: return "computation";
    case ErrorKind::kBackend: return "backend";
  }
  return "unknown";
}

const char* role_name(Role role) {
  switch (role) {
    case Role::kUnspecified: return "unspecified";
    case Role::kPretrained: return "pretrained";
    case Role::kRealFinetuned: return "real_finetuned";
    case Role::kPseudoFinetuned: return "pseudo_finetuned";
    case Role::kCorrected: return "corrected";
  }
  return "unknown";
}

Tensor Tensor::zeros(std::vector<std::uint64_t> shape) {
  std::uint64_t n = checked_numel(shape, "<zeros>");
  Tensor t;
  t.shape = std::move(shape);
  t.data.assign(static_cast<std::size_t>(n), 0.0f);
  return t;
}

std::uint64_t Tensor::numel() const { return checked_numel(shape, "<tensor>"); }

void TensorMap::set(std::string name, Tensor tensor) {
  if (name.empty() || name.size() > kMaxTensorNameBytes) {
    throw_data("tensor name must be 1.." +
               std::to_string(kMaxTensorNameBytes) + " bytes, got " +
               std::to_string(name.size()));
  }
  if (tensor.shape.size() > static_cast<std::size_t>(kMaxTensorRank)) {
    throw_data("tensor '" + name + "': rank " +
               std::to_string(tensor.shape.size()) + " exceeds maximum " +
               std::to_string(kMaxTensorRank));
  }
  std::uint64_t n = checked_numel(tensor.shape, name);
  if (static_cast<std::uint64_t>(tensor.data.size()) != n) {
    throw_data("tensor '" + name + "': shape " +
               shape_to_string(tensor.shape) + " implies " + std::to_string(n) +
               " elements but data holds " + std::to_string(tensor.data.size()));
  }
  auto it = index_.find(name);
  if (it != index_.end()) {
    entries_[it->second].second = std::move(tensor);
    return;
  }
  index_.emplace(name, entries_.size());
  entries_.emplace_back(std::move(name), std::move(tensor));
}

const Tensor* TensorMap::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  return it == index_.end() ? nullptr : &entries_[it->second].second;
}

const Tensor& TensorMap::at(std::string_view name) const {
  const Tensor* t = find(name);
  if (t == nullptr) {
    throw_data("tensor '" + std::string(name) + "' not found in map");
  }
  return *t;
}

std::uint64_t TensorMap::total_elements() const {
  std::uint64_t total = 0;
  for (const auto& [name, t] : entries_) total += t.numel();
  return total;
}

std::optional<std::pair<std::string, std::uint64_t>> find_non_finite(
    const TensorMap& map) {
  for (const auto& [name, t] : map.entries()) {
    for (std::size_t i = 0; i < t.data.size(); ++i) {
      if (!std::isfinite(t.data[i])) {
        return std::make_pair(name, static_cast<std::uint64_t>(i));
      }
    }
  }
  return std::nullopt;
}

CompatReport validate_compat(const TensorMap& a, const TensorMap& b) {
  CompatReport report;
  for (const auto& [name, ta] : a.entries()) {
    const Tensor* tb = b.find(name);
    if (tb == nullptr) {
      report.mismatches.push_back({name, CompatIssue::kMissingInSecond, {}, {}});
    } else if (ta.shape != tb->shape) {
      report.mismatches.push_back(
          {name, CompatIssue::kShapeMismatch, ta.shape, tb->shape});
    }
  }
  for (const auto& [name, tb] : b.entries()) {
    if (a.find(name) == nullptr) {
      report.mismatches.push_back({name, CompatIssue::kMissingInFirst, {}, {}});
    }
  }
  report.compatible = report.mismatches.empty();
  return report;
}

void require_compat(const TensorMap& a, const TensorMap& b,
                    std::string_view context) {
  CompatReport report = validate_compat(a, b);
  if (report.compatible) return;
  std::ostringstream os;
  os << context << ": incompatible tensor maps (" << report.mismatches.size()
     << " mismatch" << (report.mismatches.size() == 1 ? "" : "es") << "):";
  std::size_t shown = 0;
  for (const auto& m : report.mismatches) {
    if (shown == 8) {
      os << " ...";
      break;
    }
    os << " '" << m.name << "' ";
    switch (m.issue) {
      case CompatIssue::kMissingInFirst: os << "missing in first"; break;
      case CompatIssue::kMissingInSecond: os << "missing in second"; break;
      case CompatIssue::kShapeMismatch:
        os << "shape " << shape_to_string(m.shape_first) << " vs "
           << shape_to_string(m.shape_second);
        break;
    }
    os << ";";
    ++shown;
  }
  throw_data(os.str());
}

}  // namespace p2r
