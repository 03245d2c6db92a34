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

#ifndef P2R_MANIFEST_HPP_
#define P2R_MANIFEST_HPP_

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "p2r/clustering.hpp"
#include "p2r/wer.hpp"

namespace p2r {

// JSONL manifests: one JSON object per line. Utterance objects carry
// "id" (required, non-empty, unique) and optionally "reference",
// "hypothesis", "word_logprobs", "speaker". Unknown keys are rejected.
// Blank lines are ignored.

struct ManifestLoadOptions {
  // Verify len(word_logprobs) == normalized hypothesis token count.
  // Disable when scoring with normalization off; the count is defined on
  // normalized tokens.
  bool check_logprob_alignment = true;
  NormalizeConfig normalize;
};

std::vector<UtteranceRecord> parse_manifest(
    std::string_view content, const ManifestLoadOptions& options = {},
    std::string_view source_name = "<input>");
std::vector<UtteranceRecord> load_manifest_file(
    const std::filesystem::path& path, const ManifestLoadOptions& options = {});

std::string manifest_to_jsonl(std::span<const UtteranceRecord> records);
void save_manifest_file(std::span<const UtteranceRecord> records,
                        const std::filesystem::path& path);

// Embedding manifests: objects with "id" (required, unique) and
// "embedding" (non-empty array of finite numbers, same length throughout).
EmbeddingSet parse_embeddings(std::string_view content,
                              std::string_view source_name = "<input>");
EmbeddingSet load_embeddings_file(const std::filesystem::path& path);
std::string embeddings_to_jsonl(const EmbeddingSet& embeddings);

// Cluster assignment round-trip: one JSON object with k, seed, inertia,
// centroids (k x dim array), labels (id -> cluster index object).
std::string assignment_to_json(const ClusterAssignment& assignment);
ClusterAssignment assignment_from_json(std::string_view content,
                                       std::string_view source_name = "<input>");
ClusterAssignment load_assignment_file(const std::filesystem::path& path);

// Shared helpers for whole-file text IO with kData errors.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path,
                     std::string_view content);

}  // namespace p2r

#endif  // P2R_MANIFEST_HPP_
