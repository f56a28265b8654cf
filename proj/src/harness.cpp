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

#include "mergebench/harness.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "mergebench/error.hpp"
#include "mergebench/parallel.hpp"

namespace mergebench {

void check_format(const nlohmann::json& doc, const std::string& format, int version) {
  if (!doc.is_object() || !doc.contains("format") || !doc["format"].is_string() ||
      doc["format"].get<std::string>() != format) {
    throw ParseError("expected a '" + format + "' document");
  }
  if (!doc.contains("version") || !doc["version"].is_number_integer()) {
    throw ParseError("'" + format + "' document has no integer version");
  }
  if (const int v = doc["version"].get<int>(); v != version) {
    throw UnsupportedVersion("'" + format + "' version " + std::to_string(v) + " (supported: " +
                             std::to_string(version) + ")");
  }
}

// Objectives ----------------------------------------------------------------

TrueObjective::TrueObjective(std::shared_ptr<const ModelFamily> family, SearchSpace space)
    : family_(std::move(family)), space_(std::move(space)), kind_(space_kind(space_)) {
  const auto [a, b] = space_shape(space_);
  if (kind_ == SpaceKind::kPs && a != family_->n_layers) {
    throw InvalidArgument("space '" + space_.name() + "' does not match a " + std::to_string(family_->n_layers) +
                          "-layer family");
  }
  if (kind_ == SpaceKind::kDfs && (a != family_->n_layers || b > family_->n_layers)) {
    throw InvalidArgument("space '" + space_.name() + "' needs base_layers == " +
                          std::to_string(family_->n_layers) + " and slots <= base_layers");
  }
}

Scores TrueObjective::evaluate(const Configuration& config) const {
  calls_.fetch_add(1);
  return true_objective(kind_, *family_, config);
}

SurrogateObjective::SurrogateObjective(std::shared_ptr<const SurrogateBenchmark> benchmark, std::string id)
    : benchmark_(std::move(benchmark)), id_(std::move(id)) {
  if (!benchmark_) throw InvalidArgument("surrogate objective: no benchmark");
  if (id_ == "true") throw InvalidArgument("objective id 'true' is reserved for the true objective");
}

nlohmann::json to_json(const SurrogateBenchmark& b) {
  return {{"format", "mergebench-benchmark"},
          {"version", kBenchmarkFormatVersion},
          {"space", to_json(b.space)},
          {"provenance", b.provenance},
          {"dev", to_json(b.dev)},
          {"test", to_json(b.test)}};
}

SurrogateBenchmark benchmark_from_json(const nlohmann::json& doc) {
  check_format(doc, "mergebench-benchmark", kBenchmarkFormatVersion);
  try {
    SurrogateBenchmark b{space_from_json(doc.at("space")), ensemble_from_json(doc.at("dev")),
                         ensemble_from_json(doc.at("test")), doc.value("provenance", nlohmann::json::object())};
    if (!(b.dev.space() == b.space) || !(b.test.space() == b.space) || b.dev.target() != Target::kDev ||
        b.test.target() != Target::kTest) {
      throw ParseError("benchmark document: ensembles do not match the benchmark space/channels");
    }
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("benchmark document: ") + e.what());
  }
}

void save_benchmark(const std::filesystem::path& path, const SurrogateBenchmark& benchmark) {
  write_text_file(path, to_json(benchmark).dump() + "\n");
}

SurrogateBenchmark load_benchmark(const std::filesystem::path& path) {
  return benchmark_from_json(parse_json(read_text_file(path), "benchmark '" + path.string() + "'"));
}

// Plans ---------------------------------------------------------------------

std::size_t CollectionPlan::total() const {
  std::size_t n = 0;
  for (const auto& e : entries) n += static_cast<std::size_t>(e.runs) * static_cast<std::size_t>(e.budget);
  return n;
}

CollectionPlan desk_ps_plan() {
  return {{{Source::kRandom, 1, 4000, 0},
           {Source::kCmaEs, 3, 16 * 40, 16},
           {Source::kTpe, 2, 8 * 50, 8},
           {Source::kSubspaceRandom, 1, 200, 0}}};
}

CollectionPlan desk_dfs_plan() {
  return {{{Source::kRandom, 1, 2200, 0}, {Source::kMixedCma, 3, 13 * 25, 13}, {Source::kTpe, 2, 8 * 60, 8}}};
}

CollectionPlan full_ps_plan() {
  return {{{Source::kRandom, 1, 64000, 0},
           {Source::kCmaEs, 13, 16 * 188, 16},
           {Source::kTpe, 12, 8 * 300, 8},
           {Source::kSubspaceRandom, 1, 1500, 0}}};
}

CollectionPlan full_dfs_plan() {
  return {{{Source::kRandom, 1, 22286, 0}, {Source::kMixedCma, 3, 17 * 177, 17}, {Source::kTpe, 4, 8 * 300, 8}}};
}

nlohmann::json to_json(const CollectionPlan& plan) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& e : plan.entries) {
    out.push_back({{"strategy", to_string(e.strategy)}, {"runs", e.runs}, {"budget", e.budget}, {"batch", e.batch}});
  }
  return out;
}

CollectionPlan plan_from_json(const nlohmann::json& doc) {
  if (doc.is_string()) {
    const auto name = doc.get<std::string>();
    if (name == "desk-ps") return desk_ps_plan();
    if (name == "desk-dfs") return desk_dfs_plan();
    if (name == "full-ps") return full_ps_plan();
    if (name == "full-dfs") return full_dfs_plan();
    throw InvalidArgument("unknown plan preset '" + name + "'");
  }
  if (!doc.is_array()) throw InvalidArgument("plan must be a preset name or a list of entries");
  CollectionPlan plan;
  try {
    for (const auto& e : doc) {
      PlanEntry p;
      p.strategy = source_from_string(e.at("strategy").get<std::string>());
      p.runs = e.value("runs", 1);
      p.budget = e.at("budget").get<int>();
      p.batch = e.value("batch", std::size_t{0});
      plan.entries.push_back(p);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("plan entry: ") + e.what());
  }
  return plan;
}

namespace {

OptimizerSpec strategy_optimizer(const PlanEntry& e, const SearchSpace& space) {
  OptimizerSpec spec;
  spec.population = e.batch;
  switch (e.strategy) {
    case Source::kRandom: spec.name = "random"; break;
    case Source::kCmaEs: spec.name = "cma_es"; break;
    case Source::kMixedCma: spec.name = "mixed_cma"; break;
    case Source::kTpe: spec.name = "tpe"; break;
    case Source::kSubspaceRandom: spec.name = "subspace_random"; break;
  }
  (void)space;
  return spec;
}

bool generation_based(Source s) { return s == Source::kCmaEs || s == Source::kMixedCma; }

std::size_t effective_batch(const PlanEntry& e, const SearchSpace& space) {
  if (e.batch) return e.batch;
  if (generation_based(e.strategy)) return cma_default_lambda(space.dimension());
  return e.strategy == Source::kTpe ? 8 : 1;
}

}  // namespace

void validate_plan(const CollectionPlan& plan, const SearchSpace& space) {
  if (plan.entries.empty()) throw InvalidArgument("collection plan is empty");
  for (const auto& e : plan.entries) {
    const std::string what = std::string("plan entry '") + to_string(e.strategy) + "'";
    if (e.runs < 1 || e.budget < 1) throw InvalidArgument(what + ": runs and budget must be >= 1");
    if (e.strategy == Source::kCmaEs && space.has_categorical()) {
      throw InvalidArgument(what + ": cma_es cannot run on mixed space '" + space.name() + "'; use mixed_cma");
    }
    if (e.strategy == Source::kSubspaceRandom) {
      if (space_kind(space) != SpaceKind::kPs) {
        throw InvalidArgument(what + ": the model-wise subspace exists only for PS spaces");
      }
    }
    const std::size_t batch = effective_batch(e, space);
    if (generation_based(e.strategy) && static_cast<std::size_t>(e.budget) % batch != 0) {
      throw InvalidArgument(what + ": budget " + std::to_string(e.budget) + " is not a multiple of population " +
                            std::to_string(batch));
    }
  }
}

// Collection ----------------------------------------------------------------

Dataset collect(const CollectionPlan& plan, const Objective& objective, std::uint64_t seed, std::size_t threads) {
  const auto& space = objective.space();
  validate_plan(plan, space);

  struct RunTask {
    PlanEntry entry;
    int run_id;
  };
  std::vector<RunTask> tasks;
  for (const auto& e : plan.entries) {
    for (int r = 0; r < e.runs; ++r) tasks.push_back({e, static_cast<int>(tasks.size())});
  }
  std::vector<std::vector<EvalRecord>> results(tasks.size());

  parallel_for(tasks.size(), threads, [&](std::size_t t) {
    const auto& task = tasks[t];
    const auto run_seed = derive_seed(seed, static_cast<std::uint64_t>(task.run_id));
    const auto budget = static_cast<std::size_t>(task.entry.budget);
    auto& out = results[t];
    out.reserve(budget);
    auto record = [&](const Configuration& c) {
      Scores s;
      try {
        s = objective.evaluate(c);
      } catch (const Error& err) {
        throw Error(err.code(), "run " + std::to_string(task.run_id) + " eval " + std::to_string(out.size()) + ": " +
                                    err.what());
      }
      out.push_back({c, s.dev, s.test, task.entry.strategy, task.run_id, static_cast<int>(out.size())});
      return s.dev;
    };

    if (task.entry.strategy == Source::kSubspaceRandom) {
      Rng rng(run_seed);
      const int n_layers = space_shape(space).first;
      while (out.size() < budget) {
        const double wa = rng.uniform();
        const double wb = rng.uniform();
        record(embed_model_wise(wa, wb, n_layers));
      }
      return;
    }
    const auto spec = strategy_optimizer(task.entry, space);
    auto opt = make_optimizer(spec, space, run_seed);
    const std::size_t batch = effective_batch(task.entry, space);
    while (out.size() < budget) {
      const std::size_t count = generation_based(task.entry.strategy) ? batch : std::min(batch, budget - out.size());
      const auto configs = opt->ask(count);
      std::vector<double> values;
      values.reserve(configs.size());
      for (const auto& c : configs) values.push_back(record(c));
      opt->tell(configs, values);
    }
  });

  Dataset d{space, {}, nlohmann::json::object()};
  d.records.reserve(plan.total());
  for (auto& r : results) {
    for (auto& rec : r) d.records.push_back(std::move(rec));
  }
  d.provenance = {{"seed", seed}, {"plan", to_json(plan)}, {"objective", objective.id()}};
  if (d.size() != plan.total()) {
    throw Error(ErrorCode::kRuntime, "collect: produced " + std::to_string(d.size()) + " records, plan total is " +
                                         std::to_string(plan.total()));
  }
  return d;
}

// Benchmark construction ----------------------------------------------------

std::pair<FidelityReport, FidelityReport> evaluate_fidelity(const SurrogateBenchmark& benchmark,
                                                            const Dataset& heldout) {
  if (!(heldout.space == benchmark.space)) {
    throw InvalidArgument("fidelity: dataset space '" + heldout.space.name() + "' does not match benchmark space '" +
                          benchmark.space.name() + "'");
  }
  std::vector<double> dev_true, dev_pred, test_true, test_pred;
  for (const auto& r : heldout.records) {
    const auto s = benchmark.predict(r.config);
    dev_true.push_back(r.dev_score);
    dev_pred.push_back(s.dev);
    test_true.push_back(r.test_score);
    test_pred.push_back(s.test);
  }
  return {fidelity(dev_true, dev_pred, Target::kDev), fidelity(test_true, test_pred, Target::kTest)};
}

Dataset fidelity_records(const SurrogateBenchmark& benchmark, const Dataset& dataset, bool* heldout) {
  const auto& prov = benchmark.provenance;
  const bool same = prov.contains("dataset_hash") && prov["dataset_hash"].is_string() &&
                    prov["dataset_hash"].get<std::string>() == dataset_hash(dataset) &&
                    prov.contains("split_seed") && prov["split_seed"].is_number_unsigned();
  if (heldout) *heldout = same;
  if (!same) return dataset;
  return split_9_1(dataset, prov["split_seed"].get<std::uint64_t>()).second;
}

BuildResult build_benchmark(const Dataset& dataset, const BuildOptions& options) {
  if (dataset.size() < kMinBenchmarkRecords) {
    throw InvalidArgument("build_benchmark: dataset has " + std::to_string(dataset.size()) +
                          " records, need at least " + std::to_string(kMinBenchmarkRecords));
  }
  dataset.validate();
  auto [train, test] = split_9_1(dataset, options.split_seed);
  auto dev_fit = cv_train(train, Target::kDev, options.cv);
  auto test_fit = cv_train(train, Target::kTest, options.cv);

  nlohmann::json prov = {
      {"dataset_hash", dataset_hash(dataset)},
      {"dataset_size", dataset.size()},
      {"train_size", train.size()},
      {"test_size", test.size()},
      {"split_seed", options.split_seed},
      {"cv", {{"folds", options.cv.folds}, {"hpo_budget", options.cv.hpo_budget}, {"seed", options.cv.seed}}},
      {"dev_best_trial", dev_fit.best_trial},
      {"dev_cv_mse", dev_fit.trials[dev_fit.best_trial].cv_mse},
      {"test_best_trial", test_fit.best_trial},
      {"test_cv_mse", test_fit.trials[test_fit.best_trial].cv_mse},
  };
  SurrogateBenchmark bench{dataset.space, std::move(dev_fit.ensemble), std::move(test_fit.ensemble), std::move(prov)};
  auto [dev_report, test_report] = evaluate_fidelity(bench, test);
  bench.provenance["fidelity"] = {to_json(dev_report), to_json(test_report)};
  return {std::move(bench), dev_report, test_report};
}

// Simulation ----------------------------------------------------------------

std::vector<Trajectory> simulate(const SimulationSpec& spec, const Objective& objective, std::size_t threads) {
  if (spec.runs < 1 || spec.budget < 1) throw InvalidArgument("simulate: runs and budget must be >= 1");
  // Fail on incompatible optimizer before spawning work.
  (void)make_optimizer(spec.optimizer, objective.space(), spec.base_seed);

  std::vector<Trajectory> out(static_cast<std::size_t>(spec.runs));
  parallel_for(out.size(), threads, [&](std::size_t r) {
    const std::uint64_t seed = spec.base_seed + r;
    auto opt = make_optimizer(spec.optimizer, objective.space(), seed);
    auto& t = out[r];
    t.optimizer = spec.optimizer.name;
    t.objective = objective.id();
    t.seed = seed;
    const auto budget = static_cast<std::size_t>(spec.budget);
    double best = -INFINITY, best_test = 0.0;
    while (t.raw.size() < budget) {
      const auto configs = opt->ask();
      std::vector<double> values;
      values.reserve(configs.size());
      for (const auto& c : configs) {
        const auto s = objective.evaluate(c);
        values.push_back(s.dev);
        if (t.raw.size() < budget) {
          if (s.dev > best) {
            best = s.dev;
            best_test = s.test;
          }
          t.raw.push_back(s.dev);
          t.best.push_back(best);
          t.best_test.push_back(best_test);
        }
      }
      opt->tell(configs, values);
    }
  });
  return out;
}

nlohmann::json to_json(const Trajectory& t) {
  return {{"optimizer", t.optimizer}, {"objective", t.objective}, {"seed", t.seed},
          {"raw", t.raw},             {"best", t.best},           {"best_test", t.best_test}};
}

Trajectory trajectory_from_json(const nlohmann::json& doc) {
  try {
    Trajectory t{doc.at("optimizer").get<std::string>(), doc.at("objective").get<std::string>(),
                 doc.at("seed").get<std::uint64_t>(),     doc.at("raw").get<std::vector<double>>(),
                 doc.at("best").get<std::vector<double>>(), doc.at("best_test").get<std::vector<double>>()};
    if (t.best.size() != t.raw.size() || t.best_test.size() != t.raw.size()) {
      throw ParseError("trajectory arrays differ in length");
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("trajectory: ") + e.what());
  }
}

nlohmann::json trajectories_to_json(const std::vector<Trajectory>& ts) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& t : ts) arr.push_back(to_json(t));
  return {{"format", "mergebench-trajectories"}, {"version", kTrajectoryFormatVersion}, {"trajectories", arr}};
}

std::vector<Trajectory> trajectories_from_json(const nlohmann::json& doc) {
  check_format(doc, "mergebench-trajectories", kTrajectoryFormatVersion);
  std::vector<Trajectory> out;
  try {
    for (const auto& t : doc.at("trajectories")) out.push_back(trajectory_from_json(t));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("trajectories: ") + e.what());
  }
  return out;
}

namespace {

std::string fmt_double(double v) {
  // Shortest round-trip form, as the JSON writer uses.
  return nlohmann::json(v).dump();
}

}  // namespace

std::string trajectories_csv(const std::vector<Trajectory>& ts) {
  std::ostringstream out;
  out << "optimizer,objective,seed,eval,raw,best_so_far,best_test\n";
  for (const auto& t : ts) {
    for (std::size_t i = 0; i < t.raw.size(); ++i) {
      out << t.optimizer << ',' << t.objective << ',' << t.seed << ',' << i + 1 << ',' << fmt_double(t.raw[i]) << ','
          << fmt_double(t.best[i]) << ',' << fmt_double(t.best_test[i]) << '\n';
    }
  }
  return out.str();
}

// Comparison ----------------------------------------------------------------

ComparisonReport compare_report(const std::vector<Trajectory>& trajectories) {
  if (trajectories.empty()) throw InvalidArgument("compare_report: no trajectories");
  const std::size_t budget = trajectories.front().raw.size();
  std::vector<std::pair<std::string, std::string>> keys;
  std::map<std::pair<std::string, std::string>, std::vector<const Trajectory*>> groups;
  for (const auto& t : trajectories) {
    if (t.raw.size() != budget || t.best.size() != budget || t.best_test.size() != budget) {
      throw InvalidArgument("compare_report: trajectories have inconsistent budgets (" + std::to_string(budget) +
                            " vs " + std::to_string(t.raw.size()) + ")");
    }
    if (budget == 0) throw InvalidArgument("compare_report: empty trajectory");
    const auto key = std::make_pair(t.optimizer, t.objective);
    if (!groups.count(key)) keys.push_back(key);
    groups[key].push_back(&t);
  }

  ComparisonReport report;
  report.budget = budget;
  for (const auto& key : keys) {
    const auto& group = groups[key];
    std::vector<std::vector<double>> best, best_test;
    for (const auto* t : group) {
      best.push_back(t->best);
      best_test.push_back(t->best_test);
    }
    CurveSummary s;
    s.optimizer = key.first;
    s.objective = key.second;
    s.runs = group.size();
    s.best = aggregate(best);
    s.best_test = aggregate(best_test);
    s.final_mean = s.best.mean.back();
    s.final_std = s.best.std.back();
    s.final_test_mean = s.best_test.mean.back();
    s.final_test_std = s.best_test.std.back();
    report.curves.push_back(std::move(s));
  }
  for (const auto& truth : report.curves) {
    if (truth.objective != "true") continue;
    for (const auto& other : report.curves) {
      if (other.optimizer != truth.optimizer || other.objective == "true") continue;
      report.gaps.push_back({truth.optimizer, other.objective, truth.final_mean, other.final_mean,
                             std::abs(truth.final_mean - other.final_mean)});
    }
  }
  return report;
}

namespace {

nlohmann::json curve_json(const AggregateCurve& c) { return {{"mean", c.mean}, {"std", c.std}}; }

AggregateCurve curve_from(const nlohmann::json& doc) {
  return {doc.at("mean").get<std::vector<double>>(), doc.at("std").get<std::vector<double>>()};
}

}  // namespace

nlohmann::json to_json(const ComparisonReport& r) {
  nlohmann::json curves = nlohmann::json::array();
  for (const auto& c : r.curves) {
    curves.push_back({{"optimizer", c.optimizer},
                      {"objective", c.objective},
                      {"runs", c.runs},
                      {"best", curve_json(c.best)},
                      {"best_test", curve_json(c.best_test)},
                      {"final_mean", c.final_mean},
                      {"final_std", c.final_std},
                      {"final_test_mean", c.final_test_mean},
                      {"final_test_std", c.final_test_std}});
  }
  nlohmann::json gaps = nlohmann::json::array();
  for (const auto& g : r.gaps) {
    gaps.push_back({{"optimizer", g.optimizer},
                    {"objective", g.objective},
                    {"true_final_mean", g.true_final_mean},
                    {"surrogate_final_mean", g.surrogate_final_mean},
                    {"gap", g.gap}});
  }
  return {{"format", "mergebench-report"},
          {"version", kReportFormatVersion},
          {"budget", r.budget},
          {"curves", curves},
          {"gaps", gaps}};
}

ComparisonReport report_from_json(const nlohmann::json& doc) {
  check_format(doc, "mergebench-report", kReportFormatVersion);
  try {
    ComparisonReport r;
    r.budget = doc.at("budget").get<std::size_t>();
    for (const auto& c : doc.at("curves")) {
      CurveSummary s;
      s.optimizer = c.at("optimizer").get<std::string>();
      s.objective = c.at("objective").get<std::string>();
      s.runs = c.at("runs").get<std::size_t>();
      s.best = curve_from(c.at("best"));
      s.best_test = curve_from(c.at("best_test"));
      s.final_mean = c.at("final_mean").get<double>();
      s.final_std = c.at("final_std").get<double>();
      s.final_test_mean = c.at("final_test_mean").get<double>();
      s.final_test_std = c.at("final_test_std").get<double>();
      r.curves.push_back(std::move(s));
    }
    for (const auto& g : doc.at("gaps")) {
      r.gaps.push_back({g.at("optimizer").get<std::string>(), g.at("objective").get<std::string>(),
                        g.at("true_final_mean").get<double>(), g.at("surrogate_final_mean").get<double>(),
                        g.at("gap").get<double>()});
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("report: ") + e.what());
  }
}

std::string report_summary_csv(const ComparisonReport& r) {
  std::ostringstream out;
  out << "optimizer,objective,runs,final_mean,final_std,final_test_mean,final_test_std\n";
  for (const auto& c : r.curves) {
    out << c.optimizer << ',' << c.objective << ',' << c.runs << ',' << fmt_double(c.final_mean) << ','
        << fmt_double(c.final_std) << ',' << fmt_double(c.final_test_mean) << ',' << fmt_double(c.final_test_std)
        << '\n';
  }
  return out.str();
}

std::string report_curves_csv(const ComparisonReport& r) {
  std::ostringstream out;
  out << "optimizer,objective,eval,best_mean,best_std,best_test_mean,best_test_std\n";
  for (const auto& c : r.curves) {
    for (std::size_t i = 0; i < c.best.mean.size(); ++i) {
      out << c.optimizer << ',' << c.objective << ',' << i + 1 << ',' << fmt_double(c.best.mean[i]) << ','
          << fmt_double(c.best.std[i]) << ',' << fmt_double(c.best_test.mean[i]) << ','
          << fmt_double(c.best_test.std[i]) << '\n';
    }
  }
  return out.str();
}

}  // namespace mergebench
