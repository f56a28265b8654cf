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

#include "mergebench/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mergebench/error.hpp"

namespace mergebench {

namespace {

constexpr const char* kSourceNames[] = {"random", "cma_es", "tpe", "mixed_cma", "subspace_random"};

}  // namespace

const char* to_string(Source source) { return kSourceNames[static_cast<int>(source)]; }

Source source_from_string(const std::string& name) {
  for (int i = 0; i < 5; ++i) {
    if (name == kSourceNames[i]) return static_cast<Source>(i);
  }
  throw InvalidArgument("unknown record source '" + name + "'");
}

bool is_random_source(Source source) {
  return source == Source::kRandom || source == Source::kSubspaceRandom;
}

const char* to_string(Target target) { return target == Target::kDev ? "dev" : "test"; }

Target target_from_string(const std::string& name) {
  if (name == "dev") return Target::kDev;
  if (name == "test") return Target::kTest;
  throw InvalidArgument("unknown target channel '" + name + "' (expected dev or test)");
}

void Dataset::validate() const {
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    try {
      space.validate(r.config);
    } catch (const InvalidArgument& e) {
      throw InvalidArgument("record " + std::to_string(i) + ": " + e.what());
    }
    if (!(r.dev_score >= 0.0 && r.dev_score <= 1.0 && r.test_score >= 0.0 && r.test_score <= 1.0)) {
      throw InvalidArgument("record " + std::to_string(i) + ": scores must lie in [0, 1]");
    }
  }
}

namespace {

nlohmann::json header_json(const Dataset& d) {
  return {{"format", "mergebench-dataset"},
          {"version", kDatasetFormatVersion},
          {"space", to_json(d.space)},
          {"provenance", d.provenance}};
}

nlohmann::json record_json(const EvalRecord& r) {
  return {{"run", r.run_id},    {"eval", r.eval_index},     {"source", to_string(r.source)},
          {"config", r.config.values}, {"dev", r.dev_score}, {"test", r.test_score}};
}

}  // namespace

void write_dataset(std::ostream& out, const Dataset& dataset) {
  out << header_json(dataset).dump() << '\n';
  for (const auto& r : dataset.records) out << record_json(r).dump() << '\n';
}

void save_dataset(const std::filesystem::path& path, const Dataset& dataset) {
  std::ostringstream out;
  write_dataset(out, dataset);
  write_text_file(path, out.str());
}

Dataset read_dataset(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto parse_line = [&](const std::string& what) {
    try {
      return nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError("dataset line " + std::to_string(line_no) + " (" + what + "): " + e.what());
    }
  };
  if (!std::getline(in, line)) throw ParseError("dataset line 1: missing header");
  line_no = 1;
  const auto header = parse_line("header");
  std::optional<Dataset> dataset;
  try {
    if (header.at("format").get<std::string>() != "mergebench-dataset") {
      throw ParseError("dataset line 1: not a mergebench dataset");
    }
    if (const int v = header.at("version").get<int>(); v != kDatasetFormatVersion) {
      throw UnsupportedVersion("dataset schema version " + std::to_string(v) + " (supported: " +
                               std::to_string(kDatasetFormatVersion) + ")");
    }
    dataset.emplace(Dataset{space_from_json(header.at("space")), {}, header.value("provenance", nlohmann::json::object())});
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("dataset line 1: ") + e.what());
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto doc = parse_line("record");
    EvalRecord r;
    try {
      r.run_id = doc.at("run").get<int>();
      r.eval_index = doc.at("eval").get<int>();
      r.source = source_from_string(doc.at("source").get<std::string>());
      r.config.values = doc.at("config").get<std::vector<double>>();
      r.dev_score = doc.at("dev").get<double>();
      r.test_score = doc.at("test").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("dataset line " + std::to_string(line_no) + ": " + e.what());
    } catch (const InvalidArgument& e) {
      throw ParseError("dataset line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!dataset->space.contains(r.config)) {
      throw ParseError("dataset line " + std::to_string(line_no) + ": configuration invalid for space '" +
                       dataset->space.name() + "'");
    }
    if (!(r.dev_score >= 0.0 && r.dev_score <= 1.0 && r.test_score >= 0.0 && r.test_score <= 1.0)) {
      throw ParseError("dataset line " + std::to_string(line_no) + ": scores must lie in [0, 1]");
    }
    dataset->records.push_back(std::move(r));
  }
  return std::move(*dataset);
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset '" + path.string() + "'");
  return read_dataset(in);
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string dataset_hash(const Dataset& dataset) {
  std::ostringstream out;
  out << to_json(dataset.space).dump() << '\n';
  for (const auto& r : dataset.records) out << record_json(r).dump() << '\n';
  return fnv1a_hex(out.str());
}

std::vector<std::pair<std::string, std::size_t>> count_by_source(const Dataset& dataset) {
  std::vector<std::pair<std::string, std::size_t>> out;
  for (int i = 0; i < 5; ++i) {
    const auto s = static_cast<Source>(i);
    std::size_t c = 0;
    for (const auto& r : dataset.records) c += r.source == s ? 1 : 0;
    if (c) out.emplace_back(to_string(s), c);
  }
  return out;
}

Dataset filter_random_only(const Dataset& dataset) {
  Dataset out{dataset.space, {}, dataset.provenance};
  for (const auto& r : dataset.records) {
    if (is_random_source(r.source)) out.records.push_back(r);
  }
  if (out.records.empty()) throw InvalidArgument("filter_random_only: dataset has no random-sourced records");
  out.provenance["filter"] = "random_only";
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out.flush()) throw IoError("write failed for '" + path.string() + "'");
}

nlohmann::json parse_json(const std::string& text, const std::string& what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(what + ": syntax error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
}

}  // namespace mergebench
