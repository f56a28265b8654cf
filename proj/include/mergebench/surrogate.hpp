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
#include <span>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mergebench/dataset.hpp"
#include "mergebench/gbdt.hpp"
#include "mergebench/search_space.hpp"

namespace mergebench {

/// k fold models whose averaged output, clamped to [0, 1], is the surrogate
/// prediction for one score channel.
class CvEnsemble {
 public:
  CvEnsemble(SearchSpace space, Target target, std::vector<GbdtModel> folds,
             GbdtHyperparams hyperparams = {});

  const SearchSpace& space() const { return space_; }
  Target target() const { return target_; }
  const std::vector<GbdtModel>& folds() const { return folds_; }
  const GbdtHyperparams& hyperparams() const { return hyperparams_; }

  /// Arithmetic mean of the fold predictions, before clamping.
  double predict_raw(std::span<const double> encoded) const;
  /// Validates the configuration against the ensemble's space.
  double predict(const Configuration& config) const;

  bool operator==(const CvEnsemble&) const = default;

 private:
  SearchSpace space_;
  Target target_;
  std::vector<GbdtModel> folds_;
  GbdtHyperparams hyperparams_;
};

/// Hyperparameter search ranges. Integers are sampled uniformly, the learning
/// rate log-uniformly, subsample fractions uniformly.
struct HpoRanges {
  std::pair<int, int> num_trees{100, 1000};
  std::pair<int, int> max_depth{3, 12};
  std::pair<double, double> learning_rate{0.01, 0.3};
  std::pair<int, int> min_samples_leaf{5, 50};
  std::pair<double, double> feature_subsample{0.6, 1.0};
  std::pair<double, double> row_subsample{0.6, 1.0};
};

GbdtHyperparams sample_hyperparams(const HpoRanges& ranges, Rng& rng);

struct CvOptions {
  int folds = 5;
  int hpo_budget = 50;
  std::uint64_t seed = 0;
  HpoRanges ranges;
  std::size_t threads = 1;
};

/// A trial stops early once its fold MSEs already rule it out; cv_mse is then
/// a lower bound (sum of finished folds / k) above the winner's mean.
struct TrialResult {
  GbdtHyperparams hyperparams;
  double cv_mse = 0.0;
  int folds_run = 0;
};

struct CvResult {
  CvEnsemble ensemble;
  std::vector<TrialResult> trials;
  std::size_t best_trial = 0;
};

inline constexpr std::size_t kMinCvRows = 50;

/// Seeded random-search HPO: every trial trains `folds` models (each on k-1
/// folds) and is scored by mean held-out-fold MSE; the best trial's fold
/// models form the ensemble. Ties go to the earlier trial.
CvResult cv_train(const Dataset& dataset, Target target, const CvOptions& options);

/// Fold index per record (records sorted by row id, shuffled by seed, then
/// dealt round-robin).
std::vector<int> assign_folds(const Dataset& dataset, int folds, std::uint64_t seed);

/// 9:1 split of record indices. |test| = round-half-up(N / 10).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n,
                                                                             std::uint64_t seed);
std::pair<Dataset, Dataset> split_9_1(const Dataset& dataset, std::uint64_t seed);

inline constexpr int kModelFormatVersion = 1;

nlohmann::json to_json(const CvEnsemble& ensemble);
CvEnsemble ensemble_from_json(const nlohmann::json& doc);

void save_ensemble(const std::filesystem::path& path, const CvEnsemble& ensemble);
/// ParseError for malformed content, UnsupportedVersion for other versions.
CvEnsemble load_ensemble(const std::filesystem::path& path);

FeatureMatrix encode_dataset(const Dataset& dataset);

}  // namespace mergebench
