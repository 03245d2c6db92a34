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

#ifndef P2R_ARCHIVE_HPP_
#define P2R_ARCHIVE_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "p2r/tensor.hpp"

namespace p2r {

// Binary checkpoint archive, conventionally *.tva.
//
// Layout, all integers little-endian, no padding, no footer:
//   magic "TVA1" (bytes 0x54 0x56 0x41 0x31)
//   u32 tensor count
//   per tensor, in map order:
//     u16 name byte length (1..65535), then that many UTF-8 name bytes
//     u8 rank (0..8), then rank x u64 dims
//     prod(dims) x f32 payload, row-major, raw IEEE-754 bit patterns
//
// Round-trips are bit-exact, including NaN payloads when loaded with
// allow_non_finite. The format carries no role marker; loaded maps have
// Role::kUnspecified.

struct LoadOptions {
  // Accept NaN/Inf payload values instead of rejecting the archive.
  bool allow_non_finite = false;
};

std::vector<std::uint8_t> save_archive(const TensorMap& map);

// Throws kData on: short/empty input, bad magic, truncation, rank > 8,
// element-count overflow, duplicate or empty names, trailing bytes after
// the last tensor, and non-finite values (unless allowed).
TensorMap load_archive(std::span<const std::uint8_t> bytes,
                       const LoadOptions& options = {});

void save_archive_file(const TensorMap& map,
                       const std::filesystem::path& path);
TensorMap load_archive_file(const std::filesystem::path& path,
                            const LoadOptions& options = {});

}  // namespace p2r

#endif  // P2R_ARCHIVE_HPP_
