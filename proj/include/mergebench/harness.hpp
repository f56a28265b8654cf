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

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "mergebench/dataset.hpp"
#include "mergebench/metrics.hpp"
#include "mergebench/optimizers.hpp"
#include "mergebench/search_space.hpp"
#include "mergebench/surrogate.hpp"
#include "mergebench/toy_objective.hpp"

namespace mergebench {

/// Something that scores configurations on both channels. evaluate() must be
/// safe to call concurrently.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual const SearchSpace& space() const = 0;
  virtual Scores evaluate(const Configuration& config) const = 0;
  /// "true", "surrogate-all", "surrogate-random-only", ...
  virtual std::string id() const = 0;
};

/// Merge-and-evaluate on a toy family. Counts its calls.
class TrueObjective final : public Objective {
 public:
  TrueObjective(std::shared_ptr<const ModelFamily> family, SearchSpace space);

  const SearchSpace& space() const override { return space_; }
  Scores evaluate(const Configuration& config) const override;
  std::string id() const override { return "true"; }
  std::size_t calls() const { return calls_.load(); }
  const ModelFamily& family() const { return *family_; }

 private:
  std::shared_ptr<const ModelFamily> family_;
  SearchSpace space_;
  SpaceKind kind_;
  mutable std::atomic<std::size_t> calls_{0};
};

/// Dev and test surrogates trained on the same 9:1 training split.
struct SurrogateBenchmark {
  SearchSpace space;
  CvEnsemble dev;
  CvEnsemble test;
  nlohmann::json provenance = nlohmann::json::object();

  Scores predict(const Configuration& config) const { return {dev.predict(config), test.predict(config)}; }
  bool operator==(const SurrogateBenchmark&) const = default;
};

inline constexpr int kBenchmarkFormatVersion = 1;

nlohmann::json to_json(const SurrogateBenchmark& benchmark);
SurrogateBenchmark benchmark_from_json(const nlohmann::json& doc);
void save_benchmark(const std::filesystem::path& path, const SurrogateBenchmark& benchmark);
SurrogateBenchmark load_benchmark(const std::filesystem::path& path);

class SurrogateObjective final : public Objective {
 public:
  SurrogateObjective(std::shared_ptr<const SurrogateBenchmark> benchmark, std::string id);

  const SearchSpace& space() const override { return benchmark_->space; }
  Scores evaluate(const Configuration& config) const override { return benchmark_->predict(config); }
  std::string id() const override { return id_; }

 private:
  std::shared_ptr<const SurrogateBenchmark> benchmark_;
  std::string id_;
};

// Data collection -----------------------------------------------------------

struct PlanEntry {
  Source strategy = Source::kRandom;
  int runs = 1;
  int budget = 0;          // evaluations per run
  std::size_t batch = 0;   // 0 = strategy default (CMA: default lambda, TPE: 8, random: 1)

  bool operator==(const PlanEntry&) const = default;
};

struct CollectionPlan {
  std::vector<PlanEntry> entries;

  std::size_t total() const;
  bool operator==(const CollectionPlan&) const = default;
};

/// Desk-scale plans keeping the strategy mixture of the full-size collections.
CollectionPlan desk_ps_plan();
CollectionPlan desk_dfs_plan();
/// Full-size plans: 133,404 and 40,913 evaluations.
CollectionPlan full_ps_plan();
CollectionPlan full_dfs_plan();

nlohmann::json to_json(const CollectionPlan& plan);
CollectionPlan plan_from_json(const nlohmann::json& doc);

/// Throws InvalidArgument if a strategy cannot run on the space or a
/// generation-based budget is not a multiple of its population.
void validate_plan(const CollectionPlan& plan, const SearchSpace& space);

/// Runs every (strategy, run) of the plan against the objective, maximizing
/// the dev score. Records are ordered by (run id, eval index) whatever the
/// completion order.
Dataset collect(const CollectionPlan& plan, const Objective& objective, std::uint64_t seed,
                std::size_t threads = 1);

// Benchmark construction ----------------------------------------------------

struct BuildOptions {
  std::uint64_t split_seed = 0;
  CvOptions cv;
};

struct BuildResult {
  SurrogateBenchmark benchmark;
  FidelityReport dev_report;
  FidelityReport test_report;
};

inline constexpr std::size_t kMinBenchmarkRecords = 100;

BuildResult build_benchmark(const Dataset& dataset, const BuildOptions& options);

/// Records to score a benchmark on: its held-out split when `dataset` is the
/// one it was built from (same hash), otherwise the whole dataset.
Dataset fidelity_records(const SurrogateBenchmark& benchmark, const Dataset& dataset, bool* heldout = nullptr);

/// Fidelity of both channels on the given records.
std::pair<FidelityReport, FidelityReport> evaluate_fidelity(const SurrogateBenchmark& benchmark,
                                                            const Dataset& heldout);

// Trajectory simulation -----------------------------------------------------

struct Trajectory {
  std::string optimizer;
  std::string objective;
  std::uint64_t seed = 0;
  std::vector<double> raw;        // dev score of each evaluation
  std::vector<double> best;       // running maximum of raw
  std::vector<double> best_test;  // test score of the current best solution

  bool operator==(const Trajectory&) const = default;
};

struct SimulationSpec {
  OptimizerSpec optimizer;
  int runs = 1;
  int budget = 100;
  std::uint64_t base_seed = 0;  // run r uses base_seed + r
};

std::vector<Trajectory> simulate(const SimulationSpec& spec, const Objective& objective, std::size_t threads = 1);

nlohmann::json to_json(const Trajectory& t);
Trajectory trajectory_from_json(const nlohmann::json& doc);

inline constexpr int kTrajectoryFormatVersion = 1;
nlohmann::json trajectories_to_json(const std::vector<Trajectory>& ts);
std::vector<Trajectory> trajectories_from_json(const nlohmann::json& doc);

/// One row per evaluation: optimizer,objective,seed,eval,raw,best_so_far,best_test.
/// eval counts evaluations spent, starting at 1.
std::string trajectories_csv(const std::vector<Trajectory>& ts);

// Comparison report ---------------------------------------------------------

struct CurveSummary {
  std::string optimizer;
  std::string objective;
  std::size_t runs = 0;
  AggregateCurve best;
  AggregateCurve best_test;
  double final_mean = 0.0;
  double final_std = 0.0;
  double final_test_mean = 0.0;
  double final_test_std = 0.0;

  bool operator==(const CurveSummary&) const = default;
};

struct GapRow {
  std::string optimizer;
  std::string objective;  // the surrogate objective compared against "true"
  double true_final_mean = 0.0;
  double surrogate_final_mean = 0.0;
  double gap = 0.0;  // |true - surrogate|

  bool operator==(const GapRow&) const = default;
};

struct ComparisonReport {
  std::size_t budget = 0;
  std::vector<CurveSummary> curves;
  std::vector<GapRow> gaps;

  bool operator==(const ComparisonReport&) const = default;
};

/// Groups trajectories by (optimizer, objective) in first-seen order. All
/// trajectories must share one length; every group needs at least two runs.
ComparisonReport compare_report(const std::vector<Trajectory>& trajectories);

inline constexpr int kReportFormatVersion = 1;
nlohmann::json to_json(const ComparisonReport& report);
ComparisonReport report_from_json(const nlohmann::json& doc);
/// Final-best table: optimizer,objective,runs,final_mean,final_std,final_test_mean,final_test_std.
std::string report_summary_csv(const ComparisonReport& report);
/// Aggregate curves: optimizer,objective,eval,best_mean,best_std,best_test_mean,best_test_std.
std::string report_curves_csv(const ComparisonReport& report);

/// Checks format and version fields; UnsupportedVersion on mismatch.
void check_format(const nlohmann::json& doc, const std::string& format, int version);

}  // namespace mergebench
