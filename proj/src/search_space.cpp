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

#include "mergebench/search_space.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <regex>
#include <sstream>

#include "mergebench/error.hpp"

namespace mergebench {

VariableSpec VariableSpec::continuous(double lo, double hi) {
  if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi)) {
    throw InvalidArgument("continuous variable needs finite lo < hi");
  }
  return VariableSpec{VariableKind::kContinuous, lo, hi, 0};
}

VariableSpec VariableSpec::categorical(int arity) {
  if (arity < 2) throw InvalidArgument("categorical variable needs arity >= 2");
  return VariableSpec{VariableKind::kCategorical, 0.0, 0.0, arity};
}

SearchSpace::SearchSpace(std::string name, std::vector<VariableSpec> variables)
    : name_(std::move(name)), variables_(std::move(variables)) {
  if (variables_.empty()) throw InvalidArgument("search space must have at least one variable");
  for (const auto& v : variables_) {
    if (v.is_categorical() ? v.arity < 2 : !(v.lo < v.hi)) {
      throw InvalidArgument("search space '" + name_ + "' has an invalid variable");
    }
  }
}

std::size_t SearchSpace::num_categorical() const {
  return static_cast<std::size_t>(std::count_if(
      variables_.begin(), variables_.end(), [](const VariableSpec& v) { return v.is_categorical(); }));
}

std::size_t SearchSpace::encoded_dimension() const {
  std::size_t n = 0;
  for (const auto& v : variables_) n += v.is_categorical() ? static_cast<std::size_t>(v.arity) : 1;
  return n;
}

namespace {

// Empty string when the value is valid for the variable.
std::string check_value(const VariableSpec& v, double x) {
  if (!std::isfinite(x)) return "non-finite value";
  if (v.is_categorical()) {
    if (x != std::floor(x) || x < 0 || x >= v.arity) {
      return "category index " + std::to_string(x) + " outside [0, " + std::to_string(v.arity) + ")";
    }
  } else if (x < v.lo || x > v.hi) {
    return "value " + std::to_string(x) + " outside [" + std::to_string(v.lo) + ", " +
           std::to_string(v.hi) + "]";
  }
  return {};
}

std::string format_bound(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

}  // namespace

bool SearchSpace::contains(const Configuration& config) const {
  if (config.size() != dimension()) return false;
  for (std::size_t i = 0; i < dimension(); ++i) {
    if (!check_value(variables_[i], config[i]).empty()) return false;
  }
  return true;
}

void SearchSpace::validate(const Configuration& config) const {
  if (config.size() != dimension()) {
    throw InvalidArgument("configuration has " + std::to_string(config.size()) +
                          " values, space '" + name_ + "' has " + std::to_string(dimension()));
  }
  for (std::size_t i = 0; i < dimension(); ++i) {
    if (auto msg = check_value(variables_[i], config[i]); !msg.empty()) {
      throw InvalidArgument("dimension " + std::to_string(i) + " of space '" + name_ + "': " + msg);
    }
  }
}

std::string SearchSpace::summary() const {
  // Groups consecutive runs of identical variables.
  std::vector<std::pair<VariableSpec, std::size_t>> runs;
  for (const auto& v : variables_) {
    if (!runs.empty() && runs.back().first == v) {
      ++runs.back().second;
    } else {
      runs.emplace_back(v, 1);
    }
  }
  std::ostringstream out;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (i) out << " + ";
    const auto& [v, count] = runs[i];
    if (v.is_categorical()) {
      out << count << " categorical(" << v.arity << ")";
    } else {
      out << count << " continuous [" << format_bound(v.lo) << "," << format_bound(v.hi) << "]";
    }
  }
  return out.str();
}

SearchSpace ps_space(int n_layers) {
  if (n_layers < 1) throw InvalidArgument("ps_space: n_layers must be >= 1");
  std::vector<VariableSpec> vars(2 * static_cast<std::size_t>(n_layers),
                                 VariableSpec::continuous(0.0, 1.0));
  return SearchSpace("smm-ps-" + std::to_string(n_layers), std::move(vars));
}

SearchSpace dfs_space(int base_layers, int slots) {
  if (base_layers < 1 || slots < 1) {
    throw InvalidArgument("dfs_space: base_layers and slots must be >= 1");
  }
  std::vector<VariableSpec> vars;
  vars.reserve(static_cast<std::size_t>(2 * slots + base_layers - 1));
  for (int i = 0; i < slots; ++i) vars.push_back(VariableSpec::categorical(3));
  for (int i = 0; i < base_layers + slots - 1; ++i) {
    vars.push_back(VariableSpec::continuous(kDfsScaleLo, kDfsScaleHi));
  }
  return SearchSpace("smm-dfs-" + std::to_string(base_layers) + "-" + std::to_string(slots),
                     std::move(vars));
}

namespace {

bool parse_name(const std::string& name, SpaceKind& kind, int& a, int& b) {
  static const std::regex ps(R"(smm-ps-([1-9][0-9]{0,4}))");
  static const std::regex dfs(R"(smm-dfs-([1-9][0-9]{0,4})-([1-9][0-9]{0,4}))");
  std::smatch m;
  if (std::regex_match(name, m, ps)) {
    kind = SpaceKind::kPs;
    a = std::stoi(m[1]);
    b = 0;
    return true;
  }
  if (std::regex_match(name, m, dfs)) {
    kind = SpaceKind::kDfs;
    a = std::stoi(m[1]);
    b = std::stoi(m[2]);
    return true;
  }
  return false;
}

}  // namespace

SearchSpace space_from_name(const std::string& name) {
  SpaceKind kind{};
  int a = 0, b = 0;
  if (!parse_name(name, kind, a, b)) throw InvalidArgument("unknown search space '" + name + "'");
  return kind == SpaceKind::kPs ? ps_space(a) : dfs_space(a, b);
}

SpaceKind space_kind(const SearchSpace& space) {
  SpaceKind kind{};
  int a = 0, b = 0;
  if (!parse_name(space.name(), kind, a, b)) {
    throw InvalidArgument("space '" + space.name() + "' is not a merging space");
  }
  return kind;
}

std::pair<int, int> space_shape(const SearchSpace& space) {
  SpaceKind kind{};
  int a = 0, b = 0;
  if (!parse_name(space.name(), kind, a, b)) {
    throw InvalidArgument("space '" + space.name() + "' is not a merging space");
  }
  return {a, b};
}

Configuration sample_uniform(const SearchSpace& space, Rng& rng) {
  Configuration c;
  c.values.reserve(space.dimension());
  for (const auto& v : space.variables()) {
    if (v.is_categorical()) {
      c.values.push_back(static_cast<double>(rng.below(static_cast<std::uint64_t>(v.arity))));
    } else {
      c.values.push_back(rng.uniform(v.lo, v.hi));
    }
  }
  return c;
}

Configuration embed_model_wise(double w_a, double w_b, int n_layers) {
  if (n_layers < 1) throw InvalidArgument("embed_model_wise: n_layers must be >= 1");
  if (!(w_a >= 0.0 && w_a <= 1.0 && w_b >= 0.0 && w_b <= 1.0)) {
    throw InvalidArgument("embed_model_wise: weights must lie in [0, 1]");
  }
  Configuration c;
  c.values.assign(static_cast<std::size_t>(n_layers), w_a);
  c.values.insert(c.values.end(), static_cast<std::size_t>(n_layers), w_b);
  return c;
}

std::vector<double> encode_features(const SearchSpace& space, const Configuration& config) {
  space.validate(config);
  std::vector<double> out;
  out.reserve(space.encoded_dimension());
  for (std::size_t i = 0; i < space.dimension(); ++i) {
    const auto& v = space[i];
    if (v.is_categorical()) {
      const auto hot = static_cast<int>(config[i]);
      for (int k = 0; k < v.arity; ++k) out.push_back(k == hot ? 1.0 : 0.0);
    } else {
      out.push_back(config[i]);
    }
  }
  return out;
}

Configuration clamp(const SearchSpace& space, std::span<const double> raw) {
  if (raw.size() != space.dimension()) {
    throw InvalidArgument("clamp: expected " + std::to_string(space.dimension()) + " values, got " +
                          std::to_string(raw.size()));
  }
  Configuration c;
  c.values.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto& v = space[i];
    if (v.is_categorical()) {
      if (auto msg = check_value(v, raw[i]); !msg.empty()) {
        throw InvalidArgument("clamp: dimension " + std::to_string(i) + ": " + msg);
      }
      c.values.push_back(raw[i]);
    } else {
      if (std::isnan(raw[i])) throw InvalidArgument("clamp: NaN at dimension " + std::to_string(i));
      c.values.push_back(std::clamp(raw[i], v.lo, v.hi));
    }
  }
  return c;
}

nlohmann::json to_json(const SearchSpace& space) {
  nlohmann::json vars = nlohmann::json::array();
  for (const auto& v : space.variables()) {
    if (v.is_categorical()) {
      vars.push_back({{"kind", "categorical"}, {"arity", v.arity}});
    } else {
      vars.push_back({{"kind", "continuous"}, {"lo", v.lo}, {"hi", v.hi}});
    }
  }
  return {{"name", space.name()}, {"variables", std::move(vars)}};
}

SearchSpace space_from_json(const nlohmann::json& doc) {
  try {
    std::vector<VariableSpec> vars;
    for (const auto& v : doc.at("variables")) {
      const auto kind = v.at("kind").get<std::string>();
      if (kind == "categorical") {
        vars.push_back(VariableSpec::categorical(v.at("arity").get<int>()));
      } else if (kind == "continuous") {
        vars.push_back(VariableSpec::continuous(v.at("lo").get<double>(), v.at("hi").get<double>()));
      } else {
        throw ParseError("unknown variable kind '" + kind + "'");
      }
    }
    return SearchSpace(doc.at("name").get<std::string>(), std::move(vars));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("search space document: ") + e.what());
  }
}

}  // namespace mergebench
