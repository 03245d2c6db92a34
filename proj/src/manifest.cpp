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

#include "p2r/manifest.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "json.hpp"

#include "p2r/common.hpp"

namespace p2r {

namespace {

using nlohmann::json;

[[noreturn]] void fail_at(std::string_view source, std::size_t line,
                          const std::string& message) {
  throw_data(std::string(source) + ":" + std::to_string(line) + ": " + message);
}

json parse_line(std::string_view source, std::size_t line_no,
                const std::string& line) {
  json value;
  try {
    value = json::parse(line);
  } catch (const json::exception& e) {
    fail_at(source, line_no, std::string("invalid JSON: ") + e.what());
  }
  if (!value.is_object()) fail_at(source, line_no, "expected a JSON object");
  return value;
}

std::string get_string(const json& obj, const char* key,
                       std::string_view source, std::size_t line) {
  const json& v = obj.at(key);
  if (!v.is_string()) {
    fail_at(source, line, std::string("'") + key + "' must be a string");
  }
  return v.get<std::string>();
}

// Iterates content line by line, calling fn(line_number, line_text) for
// each non-blank line.
void for_each_line(std::string_view content,
                   const std::function<void(std::size_t, const std::string&)>& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    std::size_t nl = content.find('\n', pos);
    std::string line;
    if (nl == std::string_view::npos) {
      line = std::string(content.substr(pos));
      pos = content.size() + 1;
    } else {
      line = std::string(content.substr(pos, nl - pos));
      pos = nl + 1;
    }
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    bool blank = true;
    for (char c : line) {
      if (c != ' ' && c != '\t') {
        blank = false;
        break;
      }
    }
    if (!blank) fn(line_no, line);
  }
}

}  // namespace

std::vector<UtteranceRecord> parse_manifest(std::string_view content,
                                            const ManifestLoadOptions& options,
                                            std::string_view source_name) {
  std::vector<UtteranceRecord> records;
  std::set<std::string> seen;

  for_each_line(content, [&](std::size_t line_no, const std::string& line) {
    json obj = parse_line(source_name, line_no, line);
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      const std::string& key = it.key();
      if (key != "id" && key != "reference" && key != "hypothesis" &&
          key != "word_logprobs" && key != "speaker") {
        fail_at(source_name, line_no, "unknown key '" + key + "'");
      }
    }
    if (!obj.contains("id")) fail_at(source_name, line_no, "missing 'id'");

    UtteranceRecord rec;
    rec.id = get_string(obj, "id", source_name, line_no);
    if (rec.id.empty()) fail_at(source_name, line_no, "'id' must be non-empty");
    if (!seen.insert(rec.id).second) {
      fail_at(source_name, line_no, "duplicate id '" + rec.id + "'");
    }
    if (obj.contains("reference")) {
      rec.reference = get_string(obj, "reference", source_name, line_no);
    }
    if (obj.contains("hypothesis")) {
      rec.hypothesis = get_string(obj, "hypothesis", source_name, line_no);
    }
    if (obj.contains("speaker")) {
      rec.speaker = get_string(obj, "speaker", source_name, line_no);
    }
    if (obj.contains("word_logprobs")) {
      const json& arr = obj.at("word_logprobs");
      if (!arr.is_array()) {
        fail_at(source_name, line_no, "'word_logprobs' must be an array");
      }
      std::vector<double> lp;
      lp.reserve(arr.size());
      for (const json& v : arr) {
        if (!v.is_number()) {
          fail_at(source_name, line_no,
                  "'word_logprobs' entries must be numbers");
        }
        double d = v.get<double>();
        if (!std::isfinite(d)) {
          fail_at(source_name, line_no, "'word_logprobs' entries must be finite");
        }
        lp.push_back(d);
      }
      if (!rec.hypothesis.has_value()) {
        fail_at(source_name, line_no,
                "'word_logprobs' given without a hypothesis");
      }
      if (options.check_logprob_alignment) {
        std::size_t tokens =
            normalize_text(*rec.hypothesis, options.normalize).size();
        if (tokens != lp.size()) {
          fail_at(source_name, line_no,
                  "'word_logprobs' holds " + std::to_string(lp.size()) +
                      " value(s) but the hypothesis has " +
                      std::to_string(tokens) + " token(s)");
        }
      }
      rec.word_logprobs = std::move(lp);
    }
    records.push_back(std::move(rec));
  });
  return records;
}

std::vector<UtteranceRecord> load_manifest_file(
    const std::filesystem::path& path, const ManifestLoadOptions& options) {
  return parse_manifest(read_text_file(path), options, path.string());
}

std::string manifest_to_jsonl(std::span<const UtteranceRecord> records) {
  std::string out;
  for (const UtteranceRecord& rec : records) {
    json obj;
    obj["id"] = rec.id;
    if (rec.reference.has_value()) obj["reference"] = *rec.reference;
    if (rec.hypothesis.has_value()) obj["hypothesis"] = *rec.hypothesis;
    if (rec.word_logprobs.has_value()) obj["word_logprobs"] = *rec.word_logprobs;
    if (rec.speaker.has_value()) obj["speaker"] = *rec.speaker;
    out += obj.dump();
    out += '\n';
  }
  return out;
}

void save_manifest_file(std::span<const UtteranceRecord> records,
                        const std::filesystem::path& path) {
  write_text_file(path, manifest_to_jsonl(records));
}

EmbeddingSet parse_embeddings(std::string_view content,
                              std::string_view source_name) {
  EmbeddingSet set;
  std::set<std::string> seen;

  for_each_line(content, [&](std::size_t line_no, const std::string& line) {
    json obj = parse_line(source_name, line_no, line);
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (it.key() != "id" && it.key() != "embedding") {
        fail_at(source_name, line_no, "unknown key '" + it.key() + "'");
      }
    }
    if (!obj.contains("id")) fail_at(source_name, line_no, "missing 'id'");
    if (!obj.contains("embedding")) {
      fail_at(source_name, line_no, "missing 'embedding'");
    }
    std::string id = get_string(obj, "id", source_name, line_no);
    if (id.empty()) fail_at(source_name, line_no, "'id' must be non-empty");
    if (!seen.insert(id).second) {
      fail_at(source_name, line_no, "duplicate id '" + id + "'");
    }
    const json& arr = obj.at("embedding");
    if (!arr.is_array() || arr.empty()) {
      fail_at(source_name, line_no, "'embedding' must be a non-empty array");
    }
    std::vector<double> vec;
    vec.reserve(arr.size());
    for (const json& v : arr) {
      if (!v.is_number()) {
        fail_at(source_name, line_no, "'embedding' entries must be numbers");
      }
      double d = v.get<double>();
      if (!std::isfinite(d)) {
        fail_at(source_name, line_no, "'embedding' entries must be finite");
      }
      vec.push_back(d);
    }
    if (set.dim == 0) {
      set.dim = vec.size();
    } else if (vec.size() != set.dim) {
      fail_at(source_name, line_no,
              "embedding dimension " + std::to_string(vec.size()) +
                  " does not match earlier dimension " +
                  std::to_string(set.dim));
    }
    set.ids.push_back(std::move(id));
    set.vectors.push_back(std::move(vec));
  });

  if (set.ids.empty()) {
    throw_data(std::string(source_name) + ": no embeddings found");
  }
  return set;
}

EmbeddingSet load_embeddings_file(const std::filesystem::path& path) {
  return parse_embeddings(read_text_file(path), path.string());
}

std::string embeddings_to_jsonl(const EmbeddingSet& embeddings) {
  std::string out;
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    json obj;
    obj["id"] = embeddings.ids[i];
    obj["embedding"] = embeddings.vectors[i];
    out += obj.dump();
    out += '\n';
  }
  return out;
}

std::string assignment_to_json(const ClusterAssignment& assignment) {
  json obj;
  obj["k"] = assignment.k;
  obj["seed"] = assignment.seed;
  obj["inertia"] = assignment.inertia;
  obj["centroids"] = assignment.centroids;
  json labels = json::object();
  for (std::size_t i = 0; i < assignment.ids.size(); ++i) {
    labels[assignment.ids[i]] = assignment.labels[i];
  }
  obj["labels"] = std::move(labels);
  return obj.dump();
}

ClusterAssignment assignment_from_json(std::string_view content,
                                       std::string_view source_name) {
  json obj;
  try {
    obj = json::parse(content);
  } catch (const json::exception& e) {
    throw_data(std::string(source_name) + ": invalid JSON: " + e.what());
  }
  if (!obj.is_object()) {
    throw_data(std::string(source_name) + ": expected a JSON object");
  }
  for (const char* key : {"k", "seed", "inertia", "centroids", "labels"}) {
    if (!obj.contains(key)) {
      throw_data(std::string(source_name) + ": missing '" + key + "'");
    }
  }
  ClusterAssignment a;
  if (!obj["k"].is_number_integer() || obj["k"].get<int>() < 1) {
    throw_data(std::string(source_name) + ": 'k' must be a positive integer");
  }
  a.k = obj["k"].get<int>();
  if (!obj["seed"].is_number()) {
    throw_data(std::string(source_name) + ": 'seed' must be a number");
  }
  a.seed = obj["seed"].get<std::uint64_t>();
  if (!obj["inertia"].is_number()) {
    throw_data(std::string(source_name) + ": 'inertia' must be a number");
  }
  a.inertia = obj["inertia"].get<double>();

  if (!obj["centroids"].is_array() ||
      obj["centroids"].size() != static_cast<std::size_t>(a.k)) {
    throw_data(std::string(source_name) + ": 'centroids' must hold k rows");
  }
  std::size_t dim = 0;
  for (const json& row : obj["centroids"]) {
    if (!row.is_array() || row.empty()) {
      throw_data(std::string(source_name) +
                 ": centroid rows must be non-empty arrays");
    }
    std::vector<double> c;
    for (const json& v : row) {
      if (!v.is_number()) {
        throw_data(std::string(source_name) + ": centroid entries must be numbers");
      }
      c.push_back(v.get<double>());
    }
    if (dim == 0) dim = c.size();
    if (c.size() != dim) {
      throw_data(std::string(source_name) + ": ragged centroid rows");
    }
    a.centroids.push_back(std::move(c));
  }

  if (!obj["labels"].is_object()) {
    throw_data(std::string(source_name) + ": 'labels' must be an object");
  }
  for (auto it = obj["labels"].begin(); it != obj["labels"].end(); ++it) {
    if (!it.value().is_number_integer()) {
      throw_data(std::string(source_name) + ": label values must be integers");
    }
    int label = it.value().get<int>();
    if (label < 0 || label >= a.k) {
      throw_data(std::string(source_name) + ": label " + std::to_string(label) +
                 " out of range for k=" + std::to_string(a.k));
    }
    a.ids.push_back(it.key());
    a.labels.push_back(label);
  }
  a.rebuild_index();
  return a;
}

ClusterAssignment load_assignment_file(const std::filesystem::path& path) {
  return assignment_from_json(read_text_file(path), path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream ifs(path, std::ios::binary);
  if (!ifs) throw_data("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << ifs.rdbuf();
  if (ifs.bad()) throw_data("failed reading '" + path.string() + "'");
  return buf.str();
}

void write_text_file(const std::filesystem::path& path,
                     std::string_view content) {
  std::ofstream ofs(path, std::ios::binary | std::ios::trunc);
  if (!ofs) throw_data("cannot open '" + path.string() + "' for writing");
  ofs.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!ofs.good()) throw_data("failed writing '" + path.string() + "'");
}

}  // namespace p2r
