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
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "mergebench/search_space.hpp"

namespace mergebench {

/// One residual block: x <- x + tanh(W x + b). W is width x width, row-major.
struct LayerParams {
  std::vector<double> weight;
  std::vector<double> bias;

  std::size_t width() const { return bias.size(); }
  bool operator==(const LayerParams&) const = default;
};

enum class CheckpointId { kBase, kA, kB };

const char* to_string(CheckpointId id);

struct ModelCheckpoint {
  CheckpointId id = CheckpointId::kBase;
  std::vector<LayerParams> layers;

  bool operator==(const ModelCheckpoint&) const = default;
};

/// Parameters shared by every checkpoint of a family and left untouched by
/// merging: the input embedding (width x width) and the class readout
/// (classes x width), both row-major.
struct SharedHead {
  std::size_t width = 0;
  std::size_t classes = 0;
  std::vector<double> embed;
  std::vector<double> readout;

  bool operator==(const SharedHead&) const = default;
};

/// Labelled points, row-major inputs. `group` marks which specialist the
/// point belongs to (0: model A's half, 1: model B's half).
struct DataSplit {
  std::size_t width = 0;
  std::vector<double> inputs;
  std::vector<int> labels;
  std::vector<int> group;

  std::size_t size() const { return labels.size(); }
  bool operator==(const DataSplit&) const = default;
};

struct SyntheticTask {
  DataSplit dev;
  DataSplit test;
  std::uint64_t seed = 0;

  bool operator==(const SyntheticTask&) const = default;
};

struct FamilyOptions {
  std::size_t classes = 4;
  std::size_t dev_size = 512;
  std::size_t test_size = 512;
  int max_retries = 16;
};

/// base, A and B share a head; A and B are the base plus distinct low-rank
/// perturbations and are the exact specialists of their half of the task.
struct ModelFamily {
  int n_layers = 0;
  int width = 0;
  std::uint64_t seed = 0;       // requested seed
  std::uint64_t used_seed = 0;  // seed that passed the specialist check
  std::shared_ptr<const SharedHead> head;
  ModelCheckpoint base;
  ModelCheckpoint a;
  ModelCheckpoint b;
  SyntheticTask task;

  const ModelCheckpoint& checkpoint(CheckpointId id) const;
};

bool same_family(const ModelFamily& x, const ModelFamily& y);

struct MergedLayer {
  LayerParams params;
  double input_scale = 1.0;
};

struct MergedModel {
  std::shared_ptr<const SharedHead> head;
  std::vector<MergedLayer> layers;
};

/// Builds a family with a fixed seeded PRNG (mt19937_64 streams derived with
/// splitmix64). If the specialists fail the dev-accuracy check the seed is
/// incremented, up to options.max_retries times.
ModelFamily generate_family(int n_layers, int width, std::uint64_t seed,
                            const FamilyOptions& options = {});

/// Unmerged model with unit scales.
MergedModel as_model(const ModelFamily& family, CheckpointId id);

/// Per layer l and parameter entry:
///   merged = (1 - wA[l] - wB[l]) * base + wA[l] * A + wB[l] * B,
/// algebraically base + wA (A - base) + wB (B - base), written so that the
/// zero and unit weight cases reproduce base / A / B bit-exactly.
MergedModel task_arithmetic_merge(const ModelFamily& family, const Configuration& weights);

/// Sequence A[1..L-1], then per slot i the chosen insertion (A[i], B[i] or
/// nothing), then A[L]. Scales align with the L + M potential positions; the
/// first is fixed at 1.0 and skipped slots' scales are ignored.
MergedModel dfs_stack(const ModelFamily& family, const Configuration& config);

/// Forward pass h = E x; per layer h <- s h; h <- h + tanh(W h + b);
/// prediction = argmax(R h) (lowest index on ties). Returns the fraction of
/// correctly classified points; 0 for an empty split.
double evaluate(const MergedModel& model, const DataSplit& split);

/// Accuracy restricted to one group of the split.
double evaluate_group(const MergedModel& model, const DataSplit& split, int group);

/// Predicted labels, in split order.
std::vector<int> predict_labels(const MergedModel& model, const DataSplit& split);
/// Readout values, row-major (points x classes).
std::vector<double> predict_logits(const MergedModel& model, const DataSplit& split);

struct Scores {
  double dev = 0.0;
  double test = 0.0;
};

/// Merge according to the space kind, then score on both splits.
Scores true_objective(SpaceKind kind, const ModelFamily& family, const Configuration& config);

nlohmann::json to_json(const ModelFamily& family);
ModelFamily family_from_json(const nlohmann::json& doc);

inline constexpr int kFamilyFormatVersion = 1;

}  // namespace mergebench
