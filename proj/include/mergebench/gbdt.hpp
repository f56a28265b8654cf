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
#include <span>
#include <vector>

#include "json.hpp"

namespace mergebench {

/// Dense row-major feature matrix.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c) {}

  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

/// Flat binary tree. Internal nodes route x[feature] <= threshold to `left`.
/// Leaves have feature == -1.
struct RegressionTree {
  struct Node {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;

    bool is_leaf() const { return feature < 0; }
    bool operator==(const Node&) const = default;
  };

  std::vector<Node> nodes;

  double predict(std::span<const double> x) const;
  std::size_t depth() const;
  bool operator==(const RegressionTree&) const = default;
};

struct GbdtHyperparams {
  int num_trees = 100;
  int max_depth = 6;
  int min_samples_leaf = 5;
  double learning_rate = 0.1;
  double feature_subsample = 1.0;
  double row_subsample = 1.0;

  void validate() const;
  bool operator==(const GbdtHyperparams&) const = default;
};

/// prediction = base_score + learning_rate * sum of tree outputs.
struct GbdtModel {
  double base_score = 0.0;
  double learning_rate = 0.1;
  std::size_t num_features = 0;
  std::vector<RegressionTree> trees;

  double predict(std::span<const double> x) const;
  bool operator==(const GbdtModel&) const = default;
};

struct TrainOptions {
  std::uint64_t seed = 0;
  /// Stable identifiers for the rows. Row and feature subsampling draw their
  /// randomness from these instead of positions, and ties in split search are
  /// broken by them, so permuting rows (with their ids) leaves the model
  /// unchanged. Empty means "position is the id".
  std::span<const std::uint64_t> row_ids = {};
  /// If set, receives the training MSE after every boosting round.
  std::vector<double>* mse_trace = nullptr;
};

/// Least-squares gradient boosting with exact greedy splits.
GbdtModel train_gbdt(const FeatureMatrix& features, std::span<const double> targets,
                     const GbdtHyperparams& hp, const TrainOptions& options = {});

double mean_squared_error(const GbdtModel& model, const FeatureMatrix& features,
                          std::span<const double> targets);

nlohmann::json to_json(const GbdtHyperparams& hp);
GbdtHyperparams hyperparams_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const GbdtModel& model);
GbdtModel gbdt_from_json(const nlohmann::json& doc);

}  // namespace mergebench
