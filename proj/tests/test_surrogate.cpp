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
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "mergebench/error.hpp"
#include "mergebench/metrics.hpp"
#include "mergebench/rng.hpp"
#include "mergebench/surrogate.hpp"

namespace mergebench {
namespace {

double bowl(const Configuration& c) {
  double s = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) s += (c[i] - 0.3) * (c[i] - 0.3);
  return std::clamp(0.9 - 0.5 * s, 0.0, 1.0);
}

Dataset synthetic(std::size_t n, std::uint64_t seed) {
  Dataset d{ps_space(2), {}, nlohmann::json::object()};
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    EvalRecord r;
    r.config = sample_uniform(d.space, rng);
    r.dev_score = bowl(r.config);
    r.test_score = std::clamp(r.dev_score - 0.05 * r.config[0], 0.0, 1.0);
    r.run_id = static_cast<int>(i / 100);
    r.eval_index = static_cast<int>(i % 100);
    d.records.push_back(r);
  }
  return d;
}

CvOptions small_options() {
  CvOptions o;
  o.folds = 5;
  o.hpo_budget = 4;
  o.seed = 3;
  o.ranges.num_trees = {50, 150};
  o.ranges.max_depth = {2, 5};
  return o;
}

TEST(Folds, SizesDifferByAtMostOne) {
  const auto d = synthetic(103, 1);
  const auto fold = assign_folds(d, 5, 9);
  std::vector<int> counts(5, 0);
  for (int f : fold) ++counts[static_cast<std::size_t>(f)];
  std::sort(counts.begin(), counts.end());
  EXPECT_EQ(counts, (std::vector<int>{20, 20, 21, 21, 21}));
  EXPECT_EQ(assign_folds(d, 5, 9), fold);
  EXPECT_THROW(assign_folds(d, 1, 9), InvalidArgument);
  EXPECT_THROW(assign_folds(d, 104, 9), InvalidArgument);
}

TEST(Folds, IndependentOfRecordOrder) {
  const auto d = synthetic(120, 1);
  auto r = d;
  std::reverse(r.records.begin(), r.records.end());
  const auto a = assign_folds(d, 5, 4);
  const auto b = assign_folds(r, 5, 4);
  for (std::size_t i = 0; i < 120; ++i) EXPECT_EQ(a[i], b[119 - i]);
}

TEST(Split, NineToOneSizes) {
  const auto [train, test] = split_indices(133404, 0);
  EXPECT_EQ(test.size(), 13340u);
  EXPECT_EQ(train.size(), 120064u);
  const auto [tr2, te2] = split_indices(6920, 0);
  EXPECT_EQ(te2.size(), 692u);
  EXPECT_EQ(tr2.size(), 6228u);
  const auto [tr3, te3] = split_indices(15, 0);
  EXPECT_EQ(te3.size(), 2u);  // 1.5 rounds half up
  std::set<std::size_t> all(train.begin(), train.end());
  all.insert(test.begin(), test.end());
  EXPECT_EQ(all.size(), 133404u);
  EXPECT_THROW(split_indices(9, 0), InvalidArgument);
}

TEST(Split, DatasetSplitIsDeterministic) {
  const auto d = synthetic(200, 2);
  const auto [a, b] = split_9_1(d, 5);
  const auto [c, e] = split_9_1(d, 5);
  EXPECT_EQ(a, c);
  EXPECT_EQ(b, e);
  EXPECT_EQ(a.size(), 180u);
  EXPECT_EQ(b.size(), 20u);
}

TEST(CvTrain, FitsSmoothTarget) {
  const auto d = synthetic(600, 5);
  const auto [train, test] = split_9_1(d, 0);
  const auto fit = cv_train(train, Target::kDev, small_options());
  ASSERT_EQ(fit.ensemble.folds().size(), 5u);
  ASSERT_EQ(fit.trials.size(), 4u);
  EXPECT_EQ(fit.trials[fit.best_trial].folds_run, 5);
  for (const auto& t : fit.trials) EXPECT_GE(t.cv_mse, fit.trials[fit.best_trial].cv_mse);
  std::vector<double> truth, pred;
  for (const auto& r : test.records) {
    truth.push_back(r.dev_score);
    pred.push_back(fit.ensemble.predict(r.config));
  }
  EXPECT_GT(r2(truth, pred), 0.8);
  EXPECT_GT(kendall_tau(truth, pred), 0.7);
}

TEST(CvTrain, EnsembleNoWorseThanItsWorstFold) {
  const auto d = synthetic(500, 6);
  const auto [train, test] = split_9_1(d, 1);
  const auto fit = cv_train(train, Target::kTest, small_options());
  const auto x = encode_dataset(test);
  std::vector<double> y;
  for (const auto& r : test.records) y.push_back(r.test_score);
  double worst = 0.0;
  for (const auto& m : fit.ensemble.folds()) worst = std::max(worst, mean_squared_error(m, x, y));
  double sse = 0.0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const double e = fit.ensemble.predict(test.records[i].config) - y[i];
    sse += e * e;
  }
  EXPECT_LE(sse / static_cast<double>(test.size()), 1.2 * worst);
}

TEST(CvTrain, DeterministicAcrossThreadCounts) {
  const auto d = synthetic(300, 7);
  auto o = small_options();
  const auto one = cv_train(d, Target::kDev, o);
  o.threads = 3;
  const auto three = cv_train(d, Target::kDev, o);
  EXPECT_EQ(one.best_trial, three.best_trial);
  EXPECT_EQ(one.ensemble, three.ensemble);
  EXPECT_EQ(one.trials[one.best_trial].cv_mse, three.trials[three.best_trial].cv_mse);
}

TEST(CvTrain, PruningKeepsTheExhaustiveWinner) {
  // Without subsampling training is seed-free, so every trial's full CV MSE
  // can be recomputed here fold by fold.
  const auto d = synthetic(300, 8);
  auto o = small_options();
  o.hpo_budget = 6;
  o.ranges.feature_subsample = {1.0, 1.0};
  o.ranges.row_subsample = {1.0, 1.0};
  const auto fit = cv_train(d, Target::kDev, o);
  const auto fold = assign_folds(d, o.folds, o.seed);
  const auto x = encode_dataset(d);
  std::vector<double> full(fit.trials.size(), 0.0);
  for (std::size_t t = 0; t < fit.trials.size(); ++t) {
    for (int f = 0; f < o.folds; ++f) {
      FeatureMatrix tx(0, x.cols), vx(0, x.cols);
      std::vector<double> ty, vy;
      std::vector<std::uint64_t> ids;
      for (std::size_t i = 0; i < d.size(); ++i) {
        auto& m = fold[i] == f ? vx : tx;
        m.data.insert(m.data.end(), x.row(i).begin(), x.row(i).end());
        ++m.rows;
        (fold[i] == f ? vy : ty).push_back(d.records[i].dev_score);
        if (fold[i] != f) ids.push_back(d.records[i].row_id());
      }
      TrainOptions opt;
      opt.row_ids = ids;
      full[t] += mean_squared_error(train_gbdt(tx, ty, fit.trials[t].hyperparams, opt), vx, vy);
    }
    full[t] /= o.folds;
  }
  const auto winner = static_cast<std::size_t>(std::min_element(full.begin(), full.end()) - full.begin());
  EXPECT_EQ(fit.best_trial, winner);
  EXPECT_NEAR(fit.trials[winner].cv_mse, full[winner], 1e-15);
  for (std::size_t t = 0; t < full.size(); ++t) {
    if (fit.trials[t].folds_run < o.folds) {
      EXPECT_LE(fit.trials[t].cv_mse, full[t] + 1e-15);
      EXPECT_GT(fit.trials[t].cv_mse, full[winner]);
    }
  }
}

TEST(CvTrain, RejectsTinyDatasets) {
  EXPECT_THROW(cv_train(synthetic(49, 1), Target::kDev, small_options()), InvalidArgument);
  auto o = small_options();
  o.hpo_budget = 0;
  EXPECT_THROW(cv_train(synthetic(60, 1), Target::kDev, o), InvalidArgument);
}

TEST(Hyperparams, SampledWithinRanges) {
  HpoRanges ranges;
  Rng rng(1);
  for (int i = 0; i < 500; ++i) {
    const auto hp = sample_hyperparams(ranges, rng);
    EXPECT_GE(hp.num_trees, 100);
    EXPECT_LE(hp.num_trees, 1000);
    EXPECT_GE(hp.max_depth, 3);
    EXPECT_LE(hp.max_depth, 12);
    EXPECT_GE(hp.learning_rate, 0.01);
    EXPECT_LE(hp.learning_rate, 0.3);
    EXPECT_GE(hp.min_samples_leaf, 5);
    EXPECT_LE(hp.min_samples_leaf, 50);
    EXPECT_GE(hp.feature_subsample, 0.6);
    EXPECT_LE(hp.row_subsample, 1.0);
  }
}

GbdtModel constant_model(double v, std::size_t features) {
  GbdtModel m;
  m.base_score = v;
  m.num_features = features;
  return m;
}

TEST(Ensemble, AveragesAndClamps) {
  const auto space = ps_space(2);
  const CvEnsemble hi(space, Target::kDev, {constant_model(1.5, 4), constant_model(1.1, 4)});
  const CvEnsemble lo(space, Target::kDev, {constant_model(-0.2, 4), constant_model(0.0, 4)});
  const CvEnsemble mid(space, Target::kDev, {constant_model(0.2, 4), constant_model(0.6, 4)});
  const Configuration c{{0.1, 0.2, 0.3, 0.4}};
  const double x[] = {0.1, 0.2, 0.3, 0.4};
  EXPECT_DOUBLE_EQ(hi.predict_raw(x), 1.3);
  EXPECT_EQ(hi.predict(c), 1.0);
  EXPECT_EQ(lo.predict(c), 0.0);
  EXPECT_DOUBLE_EQ(mid.predict(c), 0.4);
  EXPECT_THROW(mid.predict(Configuration{{0.1, 0.2}}), InvalidArgument);
  EXPECT_THROW(mid.predict(Configuration{{0.1, 0.2, 0.3, 1.4}}), InvalidArgument);
  EXPECT_THROW(CvEnsemble(space, Target::kDev, {}), InvalidArgument);
  EXPECT_THROW(CvEnsemble(space, Target::kDev, {constant_model(0.1, 3)}), InvalidArgument);
}

TEST(Ensemble, EncodesCategoricalsOneHot) {
  const auto space = dfs_space(2, 2);
  const CvEnsemble e(space, Target::kDev, {constant_model(0.5, space.encoded_dimension())});
  EXPECT_EQ(e.predict(Configuration{{0, 2, 1.0, 1.0, 1.0}}), 0.5);
}

class SaveLoad : public ::testing::Test {
 protected:
  std::filesystem::path dir_ = std::filesystem::temp_directory_path() / "mergebench_surrogate_test";
  void SetUp() override { std::filesystem::create_directories(dir_); }
  void TearDown() override { std::filesystem::remove_all(dir_); }
};

TEST_F(SaveLoad, RoundTripIsExact) {
  const auto d = synthetic(200, 4);
  auto o = small_options();
  o.hpo_budget = 1;
  const auto fit = cv_train(d, Target::kDev, o);
  save_ensemble(dir_ / "m.json", fit.ensemble);
  const auto back = load_ensemble(dir_ / "m.json");
  EXPECT_EQ(back, fit.ensemble);
  for (const auto& r : d.records) EXPECT_EQ(back.predict(r.config), fit.ensemble.predict(r.config));
}

TEST_F(SaveLoad, RejectsTruncatedAndForeignFiles) {
  const CvEnsemble e(ps_space(2), Target::kDev, {constant_model(0.5, 4)});
  save_ensemble(dir_ / "m.json", e);
  const auto text = read_text_file(dir_ / "m.json");
  write_text_file(dir_ / "cut.json", text.substr(0, text.size() / 2));
  EXPECT_THROW(load_ensemble(dir_ / "cut.json"), ParseError);
  auto doc = to_json(e);
  doc["version"] = kModelFormatVersion + 1;
  write_text_file(dir_ / "v.json", doc.dump());
  EXPECT_THROW(load_ensemble(dir_ / "v.json"), UnsupportedVersion);
  write_text_file(dir_ / "other.json", "{\"format\": \"something-else\"}");
  EXPECT_THROW(load_ensemble(dir_ / "other.json"), ParseError);
  EXPECT_THROW(load_ensemble(dir_ / "missing.json"), IoError);
}

}  // namespace
}  // namespace mergebench
