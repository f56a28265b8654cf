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
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mergebench/rng.hpp"

namespace mergebench {

enum class VariableKind { kContinuous, kCategorical };

struct VariableSpec {
  VariableKind kind = VariableKind::kContinuous;
  double lo = 0.0;
  double hi = 1.0;
  int arity = 0;

  static VariableSpec continuous(double lo, double hi);
  static VariableSpec categorical(int arity);

  bool is_categorical() const { return kind == VariableKind::kCategorical; }
  bool operator==(const VariableSpec&) const = default;
};

/// A point in a search space. Categorical dimensions hold the category index
/// as an exactly representable integer value.
struct Configuration {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  bool operator==(const Configuration&) const = default;
};

/// Ordered list of variables. The order is the canonical configuration order.
class SearchSpace {
 public:
  SearchSpace(std::string name, std::vector<VariableSpec> variables);

  const std::string& name() const { return name_; }
  const std::vector<VariableSpec>& variables() const { return variables_; }
  const VariableSpec& operator[](std::size_t i) const { return variables_[i]; }
  std::size_t dimension() const { return variables_.size(); }

  std::size_t num_categorical() const;
  std::size_t num_continuous() const { return dimension() - num_categorical(); }
  bool has_categorical() const { return num_categorical() > 0; }

  /// Length of encode_features output: #continuous + sum of arities.
  std::size_t encoded_dimension() const;

  bool contains(const Configuration& config) const;
  /// Throws InvalidArgument naming the first violated dimension.
  void validate(const Configuration& config) const;

  /// One line summary, e.g. "32 categorical(3) + 63 continuous [0.4,1.5]".
  std::string summary() const;

  bool operator==(const SearchSpace&) const = default;

 private:
  std::string name_;
  std::vector<VariableSpec> variables_;
};

/// Layer-wise task-arithmetic space: model A's per-layer weights followed by
/// model B's, all on [0, 1].
SearchSpace ps_space(int n_layers);

/// Layer-stacking space: `slots` three-way categorical layer choices
/// (0 = model A's layer i, 1 = model B's layer i, 2 = no insertion) followed by
/// base_layers + slots - 1 input scales on [0.4, 1.5]. The first layer's scale
/// is fixed to 1.0 and is not a variable.
SearchSpace dfs_space(int base_layers, int slots);

inline constexpr double kDfsScaleLo = 0.4;
inline constexpr double kDfsScaleHi = 1.5;
inline constexpr int kDfsInsertA = 0;
inline constexpr int kDfsInsertB = 1;
inline constexpr int kDfsSkip = 2;

/// Resolves "smm-ps-<n>" and "smm-dfs-<L>-<M>". Throws InvalidArgument for
/// anything else.
SearchSpace space_from_name(const std::string& name);

enum class SpaceKind { kPs, kDfs };
/// Structural kind of a named space. Throws InvalidArgument if unknown.
SpaceKind space_kind(const SearchSpace& space);
/// Layer counts recovered from the name: (n_layers, 0) for PS, (L, M) for DFS.
std::pair<int, int> space_shape(const SearchSpace& space);

Configuration sample_uniform(const SearchSpace& space, Rng& rng);

/// Broadcasts model-wise weights into the layer-wise PS space.
Configuration embed_model_wise(double w_a, double w_b, int n_layers);

std::vector<double> encode_features(const SearchSpace& space, const Configuration& config);

/// Clips continuous values into bounds. Categorical values must already be
/// valid indices.
Configuration clamp(const SearchSpace& space, std::span<const double> raw);

nlohmann::json to_json(const SearchSpace& space);
SearchSpace space_from_json(const nlohmann::json& doc);

}  // namespace mergebench
