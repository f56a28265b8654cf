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

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <set>
#include <sstream>

#include "mergebench/error.hpp"
#include "mergebench/harness.hpp"

namespace mergebench {
namespace {

std::shared_ptr<const ModelFamily> small_family() {
  static const auto f = std::make_shared<const ModelFamily>(generate_family(4, 6, 2));
  return f;
}

CollectionPlan small_plan() {
  return {{{Source::kRandom, 1, 150, 0},
           {Source::kCmaEs, 2, 40, 10},
           {Source::kTpe, 1, 48, 8},
           {Source::kSubspaceRandom, 1, 30, 0}}};
}

const Dataset& small_dataset() {
  static const Dataset d = [] {
    const TrueObjective obj(small_family(), ps_space(4));
    return collect(small_plan(), obj, 5);
  }();
  return d;
}

const BuildResult& small_build() {
  static const BuildResult b = [] {
    BuildOptions o;
    o.cv.hpo_budget = 2;
    o.cv.ranges.num_trees = {50, 100};
    o.cv.ranges.max_depth = {2, 4};
    return build_benchmark(small_dataset(), o);
  }();
  return b;
}

class TempDir : public ::testing::Test {
 protected:
  std::filesystem::path dir_ = std::filesystem::temp_directory_path() / "mergebench_harness_test";
  void SetUp() override { std::filesystem::create_directories(dir_); }
  void TearDown() override { std::filesystem::remove_all(dir_); }
};

TEST(Plans, Totals) {
  EXPECT_EQ(desk_ps_plan().total(), 6920u);
  EXPECT_EQ(desk_dfs_plan().total(), 4135u);
  EXPECT_EQ(full_ps_plan().total(), 133404u);
  EXPECT_EQ(full_dfs_plan().total(), 40913u);
  const CollectionPlan listed{{{Source::kRandom, 1, 3000, 0},
                               {Source::kCmaEs, 3, 16 * 40, 16},
                               {Source::kTpe, 2, 8 * 50, 8},
                               {Source::kSubspaceRandom, 1, 200, 0}}};
  EXPECT_EQ(listed.total(), 5920u);
}

TEST(Plans, PresetsValidateOnTheirSpaces) {
  EXPECT_NO_THROW(validate_plan(desk_ps_plan(), ps_space(8)));
  EXPECT_NO_THROW(validate_plan(full_ps_plan(), ps_space(32)));
  EXPECT_NO_THROW(validate_plan(desk_dfs_plan(), dfs_space(8, 8)));
  EXPECT_NO_THROW(validate_plan(full_dfs_plan(), dfs_space(32, 32)));
}

TEST(Plans, ValidationErrors) {
  EXPECT_THROW(validate_plan(desk_ps_plan(), dfs_space(8, 8)), InvalidArgument);
  EXPECT_THROW(validate_plan({{{Source::kCmaEs, 1, 45, 10}}}, ps_space(4)), InvalidArgument);
  EXPECT_THROW(validate_plan({{{Source::kSubspaceRandom, 1, 10, 0}}}, dfs_space(2, 2)), InvalidArgument);
}

TEST(Plans, JsonForms) {
  EXPECT_EQ(plan_from_json(to_json(small_plan())), small_plan());
  EXPECT_EQ(plan_from_json(nlohmann::json("desk-ps")), desk_ps_plan());
  EXPECT_EQ(plan_from_json(nlohmann::json("full-dfs")), full_dfs_plan());
  EXPECT_THROW(plan_from_json(nlohmann::json("everything")), InvalidArgument);
}

TEST(Collect, CountsOrderAndValidity) {
  const auto& d = small_dataset();
  ASSERT_EQ(d.size(), small_plan().total());
  EXPECT_NO_THROW(d.validate());
  for (std::size_t i = 1; i < d.size(); ++i) EXPECT_LT(d.records[i - 1].row_id(), d.records[i].row_id());
  const auto counts = count_by_source(d);
  std::map<std::string, std::size_t> m(counts.begin(), counts.end());
  EXPECT_EQ(m["random"], 150u);
  EXPECT_EQ(m["cma_es"], 80u);
  EXPECT_EQ(m["tpe"], 48u);
  EXPECT_EQ(m["subspace_random"], 30u);
  for (const auto& r : d.records) {
    if (r.source == Source::kSubspaceRandom) {
      EXPECT_EQ(r.config, embed_model_wise(r.config[0], r.config[4], 4));
    }
  }
}

TEST(Collect, ScoresAreTheTrueObjective) {
  const auto& d = small_dataset();
  const auto& f = *small_family();
  for (std::size_t i = 0; i < d.size(); i += 17) {
    const auto s = true_objective(SpaceKind::kPs, f, d.records[i].config);
    EXPECT_EQ(s.dev, d.records[i].dev_score);
    EXPECT_EQ(s.test, d.records[i].test_score);
  }
}

TEST(Collect, DeterministicAcrossThreads) {
  const TrueObjective obj(small_family(), ps_space(4));
  const auto two = collect(small_plan(), obj, 5, 2);
  EXPECT_EQ(two, small_dataset());
  EXPECT_EQ(dataset_hash(two), dataset_hash(small_dataset()));
  EXPECT_EQ(obj.calls(), small_plan().total());
  EXPECT_NE(dataset_hash(collect({{{Source::kRandom, 1, 20, 0}}}, obj, 6)),
            dataset_hash(collect({{{Source::kRandom, 1, 20, 0}}}, obj, 7)));
}

TEST(Collect, RejectsMismatchedSpace) {
  EXPECT_THROW(TrueObjective(small_family(), ps_space(5)), InvalidArgument);
}

TEST_F(TempDir, DatasetRoundTrip) {
  const auto& d = small_dataset();
  save_dataset(dir_ / "d.jsonl", d);
  const auto back = load_dataset(dir_ / "d.jsonl");
  EXPECT_EQ(back, d);
  EXPECT_EQ(dataset_hash(back), dataset_hash(d));
  std::ostringstream a, b;
  write_dataset(a, d);
  write_dataset(b, back);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Dataset, ParseErrorsNameTheLine) {
  std::ostringstream out;
  Dataset d = small_dataset();
  d.records.resize(3);
  write_dataset(out, d);
  std::string text = out.str();
  const auto third = text.find('\n', text.find('\n', text.find('\n') + 1) + 1);
  text.insert(third + 1, "{broken\n");
  std::istringstream in(text);
  try {
    read_dataset(in);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
  }
}

TEST(Dataset, RejectsOtherVersionsAndBadRecords) {
  Dataset d = small_dataset();
  d.records.resize(2);
  std::ostringstream out;
  write_dataset(out, d);
  std::string text = out.str();
  const auto pos = text.find("\"version\":1");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 11, "\"version\":9");
  std::istringstream in(text);
  EXPECT_THROW(read_dataset(in), UnsupportedVersion);
  d.records[0].dev_score = 1.5;
  EXPECT_THROW(d.validate(), InvalidArgument);
}

TEST(Dataset, FilterRandomOnly) {
  const auto r = filter_random_only(small_dataset());
  EXPECT_EQ(r.size(), 180u);
  for (const auto& x : r.records) EXPECT_TRUE(is_random_source(x.source));
  EXPECT_EQ(r.space, small_dataset().space);
}

TEST(Build, ProvenanceAndHeldOutFidelity) {
  const auto& b = small_build();
  const auto& p = b.benchmark.provenance;
  EXPECT_EQ(p.at("dataset_hash"), dataset_hash(small_dataset()));
  EXPECT_EQ(p.at("dataset_size"), small_dataset().size());
  EXPECT_EQ(p.at("test_size"), 31);
  EXPECT_EQ(p.at("train_size"), 277);
  EXPECT_EQ(p.at("cv").at("folds"), 5);
  bool heldout = false;
  const auto records = fidelity_records(b.benchmark, small_dataset(), &heldout);
  EXPECT_TRUE(heldout);
  EXPECT_EQ(records, split_9_1(small_dataset(), 0).second);
  const auto [dev, test] = evaluate_fidelity(b.benchmark, records);
  EXPECT_EQ(dev, b.dev_report);
  EXPECT_EQ(test, b.test_report);
  EXPECT_EQ(dev.n, 31u);

  Dataset other = small_dataset();
  other.records.resize(120);
  const auto all = fidelity_records(b.benchmark, other, &heldout);
  EXPECT_FALSE(heldout);
  EXPECT_EQ(all.size(), 120u);
}

TEST(Build, RejectsTinyDatasets) {
  Dataset d = small_dataset();
  d.records.resize(kMinBenchmarkRecords - 1);
  EXPECT_THROW(build_benchmark(d, BuildOptions{}), InvalidArgument);
}

TEST_F(TempDir, BenchmarkRoundTrip) {
  const auto& b = small_build().benchmark;
  save_benchmark(dir_ / "b.json", b);
  const auto back = load_benchmark(dir_ / "b.json");
  EXPECT_EQ(back, b);
  for (std::size_t i = 0; i < 100; ++i) {
    const auto& c = small_dataset().records[i].config;
    EXPECT_EQ(back.predict(c).dev, b.predict(c).dev);
    EXPECT_EQ(back.predict(c).test, b.predict(c).test);
  }
  auto doc = to_json(b);
  doc["version"] = kBenchmarkFormatVersion + 1;
  EXPECT_THROW(benchmark_from_json(doc), UnsupportedVersion);
  write_text_file(dir_ / "cut.json", read_text_file(dir_ / "b.json").substr(0, 100));
  EXPECT_THROW(load_benchmark(dir_ / "cut.json"), ParseError);
}

TEST(Simulate, ShapesSeedsAndMonotonicity) {
  auto bench = std::make_shared<const SurrogateBenchmark>(small_build().benchmark);
  const SurrogateObjective obj(bench, "surrogate-all");
  SimulationSpec spec;
  spec.optimizer.name = "cma_es";
  spec.runs = 3;
  spec.budget = 95;
  spec.base_seed = 40;
  const auto ts = simulate(spec, obj, 1);
  ASSERT_EQ(ts.size(), 3u);
  for (std::size_t r = 0; r < 3; ++r) {
    const auto& t = ts[r];
    EXPECT_EQ(t.seed, 40 + r);
    EXPECT_EQ(t.optimizer, "cma_es");
    EXPECT_EQ(t.objective, "surrogate-all");
    ASSERT_EQ(t.raw.size(), 95u);
    ASSERT_EQ(t.best.size(), 95u);
    ASSERT_EQ(t.best_test.size(), 95u);
    double best = -1.0;
    for (std::size_t i = 0; i < 95; ++i) {
      best = std::max(best, t.raw[i]);
      EXPECT_EQ(t.best[i], best);
    }
  }
  EXPECT_EQ(simulate(spec, obj, 3), ts);
  EXPECT_NE(ts[0].raw, ts[1].raw);
}

TEST(Simulate, BestTestFollowsTheIncumbent) {
  // The test channel is reported for the configuration that holds the best
  // dev score, replaced only on strict improvement.
  auto family = small_family();
  const TrueObjective obj(family, ps_space(4));
  SimulationSpec spec;
  spec.optimizer.name = "random";
  spec.budget = 40;
  const auto t = simulate(spec, obj).at(0);
  RandomSearch rnd(ps_space(4), 0, 1);
  double best = -1.0, best_test = 0.0;
  for (std::size_t i = 0; i < 40; ++i) {
    const auto c = rnd.ask(1);
    const auto s = obj.evaluate(c[0]);
    rnd.tell(c, std::vector<double>{s.dev});
    if (s.dev > best) {
      best = s.dev;
      best_test = s.test;
    }
    EXPECT_EQ(t.raw[i], s.dev);
    EXPECT_EQ(t.best_test[i], best_test);
  }
}

TEST(Simulate, SurrogateMakesNoTrueCalls) {
  auto bench = std::make_shared<const SurrogateBenchmark>(small_build().benchmark);
  const TrueObjective truth(small_family(), ps_space(4));
  const SurrogateObjective obj(bench, "surrogate-all");
  SimulationSpec spec;
  spec.optimizer.name = "tpe";
  spec.runs = 2;
  spec.budget = 50;
  simulate(spec, obj);
  EXPECT_EQ(truth.calls(), 0u);
  EXPECT_THROW(SurrogateObjective(bench, "true"), InvalidArgument);
}

std::vector<Trajectory> fake_runs() {
  std::vector<Trajectory> ts;
  auto add = [&](const std::string& opt, const std::string& obj, std::uint64_t seed, std::vector<double> raw) {
    Trajectory t{opt, obj, seed, raw, {}, {}};
    double b = -1.0, bt = 0.0;
    for (double v : raw) {
      if (v > b) {
        b = v;
        bt = v / 2;
      }
      t.best.push_back(b);
      t.best_test.push_back(bt);
    }
    ts.push_back(t);
  };
  add("cma_es", "true", 0, {0.1, 0.5, 0.4});
  add("cma_es", "true", 1, {0.3, 0.2, 0.7});
  add("cma_es", "surrogate-all", 0, {0.2, 0.2, 0.2});
  add("cma_es", "surrogate-all", 1, {0.6, 0.1, 0.3});
  return ts;
}

TEST(Compare, CurvesAndGaps) {
  const auto report = compare_report(fake_runs());
  EXPECT_EQ(report.budget, 3u);
  ASSERT_EQ(report.curves.size(), 2u);
  EXPECT_EQ(report.curves[0].objective, "true");
  EXPECT_DOUBLE_EQ(report.curves[0].final_mean, 0.6);
  EXPECT_DOUBLE_EQ(report.curves[0].final_std, std::sqrt(0.02));
  EXPECT_DOUBLE_EQ(report.curves[1].final_mean, 0.4);
  EXPECT_DOUBLE_EQ(report.curves[1].final_test_mean, 0.2);
  EXPECT_EQ(report.curves[0].best.mean, (std::vector<double>{0.2, 0.4, 0.6}));
  ASSERT_EQ(report.gaps.size(), 1u);
  EXPECT_EQ(report.gaps[0].objective, "surrogate-all");
  EXPECT_DOUBLE_EQ(report.gaps[0].gap, std::abs(0.6 - 0.4));
  EXPECT_EQ(report_from_json(to_json(report)), report);
  const auto csv = report_summary_csv(report);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "optimizer,objective,runs,final_mean,final_std,final_test_mean,final_test_std");
}

TEST(Compare, RejectsRaggedOrSingleRunGroups) {
  auto ts = fake_runs();
  ts[1].raw.pop_back();
  ts[1].best.pop_back();
  ts[1].best_test.pop_back();
  EXPECT_THROW(compare_report(ts), InvalidArgument);
  ts = fake_runs();
  ts.pop_back();
  EXPECT_THROW(compare_report(ts), UndefinedMetric);
}

TEST(Trajectories, JsonAndCsv) {
  const auto ts = fake_runs();
  EXPECT_EQ(trajectories_from_json(trajectories_to_json(ts)), ts);
  const auto csv = trajectories_csv(ts);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "optimizer,objective,seed,eval,raw,best_so_far,best_test");
  std::getline(in, line);
  EXPECT_EQ(line, "cma_es,true,0,1,0.1,0.1,0.05");
  const auto curves = report_curves_csv(compare_report(ts));
  EXPECT_EQ(curves.substr(0, curves.find('\n')), "optimizer,objective,eval,best_mean,best_std,best_test_mean,best_test_std");
  EXPECT_NE(curves.find("\ncma_es,true,3,0.6,"), std::string::npos);
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 11u);
}

}  // namespace
}  // namespace mergebench
