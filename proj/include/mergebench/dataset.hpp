// Copyright 2026 The mergebench Authors
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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mergebench/search_space.hpp"

namespace mergebench {

/// How a record was produced.
enum class Source { kRandom, kCmaEs, kTpe, kMixedCma, kSubspaceRandom };

const char* to_string(Source source);
Source source_from_string(const std::string& name);
bool is_random_source(Source source);

/// Which score channel a model targets: dev is the optimization objective,
/// test is the report-only generalization score.
enum class Target { kDev, kTest };

const char* to_string(Target target);
Target target_from_string(const std::string& name);

struct EvalRecord {
  Configuration config;
  double dev_score = 0.0;
  double test_score = 0.0;
  Source source = Source::kRandom;
  int run_id = 0;
  int eval_index = 0;

  double score(Target target) const { return target == Target::kDev ? dev_score : test_score; }
  /// Stable identity used for ordering and for seeded per-row randomness.
  std::uint64_t row_id() const {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(run_id)) << 32) |
           static_cast<std::uint32_t>(eval_index);
  }
  bool operator==(const EvalRecord&) const = default;
};

struct Dataset {
  SearchSpace space;
  std::vector<EvalRecord> records;
  nlohmann::json provenance = nlohmann::json::object();

  std::size_t size() const { return records.size(); }
  /// Throws InvalidArgument on the first record that is not valid for the
  /// space or has a score outside [0, 1].
  void validate() const;
  bool operator==(const Dataset&) const = default;
};

inline constexpr int kDatasetFormatVersion = 1;

/// Line-delimited JSON: a header line {"format","version","space","provenance"}
/// followed by one record per line.
void write_dataset(std::ostream& out, const Dataset& dataset);
void save_dataset(const std::filesystem::path& path, const Dataset& dataset);

/// Parse errors carry the 1-based line number.
Dataset read_dataset(std::istream& in);
Dataset load_dataset(const std::filesystem::path& path);

/// FNV-1a 64 over the canonical serialization, hex encoded.
std::string dataset_hash(const Dataset& dataset);

/// Record counts keyed by source name, in enum order.
std::vector<std::pair<std::string, std::size_t>> count_by_source(const Dataset& dataset);

/// Keeps records whose source is random or subspace_random.
Dataset filter_random_only(const Dataset& dataset);

/// Shared helpers for the file formats.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
/// Parses JSON text, mapping syntax errors to ParseError with the byte offset.
nlohmann::json parse_json(const std::string& text, const std::string& what);
std::string fnv1a_hex(const std::string& bytes);

}  // namespace mergebench
