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
#include <numeric>

#include "mergebench/error.hpp"
#include "mergebench/optimizers.hpp"
#include "sanity.hpp"

namespace mergebench {
namespace {

using sanity::make;

const std::vector<std::string> kAll = {"random", "cma_es", "sep_cma", "tpe", "de", "mixed_cma"};

SearchSpace space_for(const std::string& name) {
  if (name == "tpe" || name == "mixed_cma" || name == "random") return dfs_space(3, 3);
  return sanity::box("box", 5, -2.0, 3.0);
}

double toy_value(const Configuration& c) {
  double s = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) s += std::sin(1.7 * c[i] + static_cast<double>(i));
  return s;
}

TEST(Optimizers, DefaultLambda) {
  EXPECT_EQ(cma_default_lambda(64), 16u);
  EXPECT_EQ(cma_default_lambda(16), 12u);
  EXPECT_EQ(cma_default_lambda(10), 10u);
  EXPECT_EQ(cma_default_lambda(1), 4u);
}

TEST(Optimizers, TpeGoodCountIsCeilGammaN) {
  for (std::size_t n = 2; n <= 400; ++n) {
    const std::size_t expected = (n + 9) / 10;
    EXPECT_EQ(tpe_good_count(n, 0.1), std::min(expected, n - 1)) << n;
  }
  EXPECT_EQ(tpe_good_count(0, 0.1), 0u);
  EXPECT_EQ(tpe_good_count(20, 0.25), 5u);
}

TEST(Optimizers, ValidDeterministicAndStrict) {
  for (const auto& name : kAll) {
    SCOPED_TRACE(name);
    const auto space = space_for(name);
    auto a = make(name, space, 11);
    auto b = make(name, space, 11);
    EXPECT_EQ(a->name(), name);
    for (int g = 0; g < 30; ++g) {
      const auto ca = a->ask();
      const auto cb = b->ask();
      ASSERT_EQ(ca, cb);
      ASSERT_EQ(ca.size(), a->batch_size());
      std::vector<double> v;
      for (const auto& c : ca) {
        ASSERT_TRUE(space.contains(c));
        v.push_back(toy_value(c));
      }
      EXPECT_THROW(a->ask(), InvalidArgument);
      EXPECT_THROW(a->tell(std::span(ca).first(ca.size() - 1), std::span(v).first(v.size() - 1)), InvalidArgument);
      auto wrong = ca;
      wrong[0].values[space.dimension() - 1] += 1e-9;
      EXPECT_THROW(a->tell(wrong, v), InvalidArgument);
      a->tell(ca, v);
      b->tell(cb, v);
    }
    EXPECT_THROW(a->tell({}, {}), InvalidArgument);
  }
}

TEST(Optimizers, SeedsDiffer) {
  for (const auto& name : kAll) {
    const auto space = space_for(name);
    EXPECT_NE(make(name, space, 1)->ask(), make(name, space, 2)->ask()) << name;
  }
}

TEST(Optimizers, ContinuousOnlyMethodsRejectCategoricals) {
  for (const std::string name : {"cma_es", "sep_cma", "de"}) {
    EXPECT_THROW(make(name, dfs_space(2, 2), 0), InvalidArgument) << name;
  }
  EXPECT_THROW(make("nelder_mead", ps_space(2), 0), InvalidArgument);
}

TEST(Optimizers, SpecJsonRoundTrip) {
  OptimizerSpec spec;
  spec.name = "de";
  spec.population = 64;
  spec.crossover = 0.9;
  EXPECT_EQ(optimizer_spec_from_json(to_json(spec)), spec);
  EXPECT_EQ(optimizer_spec_from_json(nlohmann::json("tpe")).name, "tpe");
  EXPECT_THROW(optimizer_spec_from_json(nlohmann::json::object()), InvalidArgument);
}

TEST(RandomSearch, FlexibleBatchAndStateless) {
  const auto space = ps_space(4);
  RandomSearch a(space, 5), b(space, 5);
  for (int g = 0; g < 10; ++g) {
    const auto ca = a.ask(8);
    const auto cb = b.ask(8);
    ASSERT_EQ(ca, cb);
    a.tell(ca, std::vector<double>(8, 0.0));
    std::vector<double> v(8);
    std::iota(v.begin(), v.end(), static_cast<double>(g));
    b.tell(cb, v);
  }
}

TEST(Cma, CovarianceStaysSymmetricPositiveDefinite) {
  const auto space = sanity::box("box", 6, -1.0, 1.0);
  MixedCma opt(space, 3, 0, 0.3, false, "cma_es");
  for (int g = 0; g < 100; ++g) {
    const auto c = opt.ask();
    std::vector<double> v;
    for (const auto& x : c) v.push_back(-sanity::ellipsoid(x));
    opt.tell(c, v);
    const auto* core = opt.gaussian();
    ASSERT_GT(core->sigma(), 0.0);
    ASSERT_TRUE((core->covariance() - core->covariance().transpose()).cwiseAbs().maxCoeff() == 0.0);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(core->covariance());
    ASSERT_GT(eig.eigenvalues().minCoeff(), 0.0);
    ASSERT_TRUE(core->mean().allFinite());
  }
  EXPECT_EQ(opt.gaussian()->generation(), 100u);
}

TEST(Cma, RecombinationWeights) {
  const CmaCore core(10, 10, false, 0.3);
  const auto& w = core.weights();
  ASSERT_EQ(w.size(), 5u);
  EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-15);
  EXPECT_TRUE(std::is_sorted(w.rbegin(), w.rend()));
  double sq = 0.0;
  for (double x : w) sq += x * x;
  EXPECT_NEAR(core.mu_eff(), 1.0 / sq, 1e-12);
  EXPECT_EQ(core.mean(), Eigen::VectorXd::Constant(10, 0.5));
}

TEST(SepCma, DiagonalStaysPositive) {
  const auto space = sanity::box("box", 8, -1.0, 1.0);
  MixedCma opt(space, 4, 0, 0.3, true, "sep_cma");
  for (int g = 0; g < 200; ++g) {
    const auto c = opt.ask();
    std::vector<double> v;
    for (const auto& x : c) v.push_back(-sanity::ellipsoid(x));
    opt.tell(c, v);
    const auto& cov = opt.gaussian()->covariance();
    ASSERT_GT(cov.diagonal().minCoeff(), 0.0);
    ASSERT_EQ((cov - Eigen::MatrixXd(cov.diagonal().asDiagonal())).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(SepCma, TracksFullCmaOnTwoDimSphere) {
  const auto space = sanity::box("box", 2, -4.0, 6.0);
  auto neg_sphere = [](const Configuration& c) { return -sanity::sphere(c); };
  auto full = make("cma_es", space, 0);
  auto sep = make("sep_cma", space, 0);
  const double f_full = -sanity::maximize(*full, neg_sphere, 200);
  const double f_sep = -sanity::maximize(*sep, neg_sphere, 200);
  EXPECT_LE(f_sep, 10.0 * f_full);
  EXPECT_LT(f_full, 1e-4);
}

TEST(Tpe, BatchOfEight) {
  auto opt = make("tpe", ps_space(4), 0);
  EXPECT_EQ(opt->batch_size(), 8u);
  EXPECT_EQ(opt->ask().size(), 8u);
}

TEST(Tpe, WarmupIsUniform) {
  // A warm-up longer than the run keeps TPE in random-search mode.
  Tpe opt(sanity::box("u", 1, 0.0, 1.0), 2, 8, 0.1, 24, 100000);
  std::vector<int> bins(10, 0);
  for (int g = 0; g < 500; ++g) {
    const auto c = opt.ask();
    for (const auto& x : c) ++bins[std::min(9, static_cast<int>(x[0] * 10))];
    opt.tell(c, std::vector<double>(c.size(), 1.0));
  }
  for (int b : bins) EXPECT_NEAR(b, 400, 80);
  EXPECT_EQ(opt.history_size(), 4000u);
}

TEST(Tpe, ConcentratesNearTheBetterMode) {
  auto f = [](const Configuration& c) {
    const double a = c[0] - 0.2, b = c[0] - 0.75;
    return 0.6 * std::exp(-a * a / 0.005) + std::exp(-b * b / 0.005);
  };
  double tpe_dist = 0.0, random_dist = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto space = sanity::box("u", 1, 0.0, 1.0);
    auto tpe = make("tpe", space, seed);
    sanity::maximize(*tpe, f, 200);
    for (const auto& c : tpe->ask()) tpe_dist += std::abs(c[0] - 0.75);
    RandomSearch rnd(space, seed, 8);
    for (const auto& c : rnd.ask()) random_dist += std::abs(c[0] - 0.75);
  }
  EXPECT_LT(tpe_dist, random_dist);
  EXPECT_LT(tpe_dist / 160.0, 0.1);
}

TEST(De, GreedySelection) {
  const auto space = sanity::box("unit", 4, 0.0, 1.0);
  DifferentialEvolution opt(space, 9, 20, 0.5, 1.0, 0.7);
  auto f = [](const Configuration& c) { return -sanity::rastrigin(Configuration{{c[0] * 4 - 2, c[1] * 4 - 2}}); };
  double prev_best = -INFINITY;
  for (int g = 0; g < 60; ++g) {
    const auto before = opt.population();
    const auto fit_before = opt.fitness();
    const auto trials = opt.ask();
    ASSERT_EQ(trials.size(), 20u);
    std::vector<double> v;
    for (const auto& c : trials) v.push_back(f(c));
    opt.tell(trials, v);
    ASSERT_EQ(opt.population().size(), 20u);
    for (std::size_t i = 0; i < 20; ++i) {
      if (g == 0) {
        EXPECT_EQ(opt.population()[i], trials[i].values);
      } else if (opt.population()[i] != before[i]) {
        EXPECT_EQ(opt.population()[i], trials[i].values);
        EXPECT_GE(v[i], fit_before[i]);
      }
    }
    const double best = *std::max_element(opt.fitness().begin(), opt.fitness().end());
    EXPECT_GE(best, prev_best);
    prev_best = best;
  }
}

TEST(MixedCma, ProbabilityVectorsStayNormalized) {
  auto opt = make("mixed_cma", sanity::mixed_space(), 1);
  auto& m = dynamic_cast<MixedCma&>(*opt);
  EXPECT_DOUBLE_EQ(m.probability_floor(), 1.0 / (3.0 * 8.0));
  for (int g = 0; g < 100; ++g) {
    const auto c = opt->ask();
    std::vector<double> v;
    for (const auto& x : c) v.push_back(sanity::mixed_reward(x));
    opt->tell(c, v);
    for (const auto& q : m.category_probs()) {
      ASSERT_NEAR(std::accumulate(q.begin(), q.end(), 0.0), 1.0, 1e-12);
      for (double p : q) ASSERT_GE(p, m.probability_floor() - 1e-15);
    }
  }
}

TEST(MixedCma, WithoutCategoricalsIsCmaEs) {
  const auto space = sanity::box("box", 5, 0.0, 1.0);
  auto a = make("mixed_cma", space, 21);
  auto b = make("cma_es", space, 21);
  for (int g = 0; g < 20; ++g) {
    const auto ca = a->ask();
    ASSERT_EQ(ca, b->ask());
    std::vector<double> v;
    for (const auto& c : ca) v.push_back(toy_value(c));
    a->tell(ca, v);
    b->tell(ca, v);
  }
}

}  // namespace
}  // namespace mergebench
