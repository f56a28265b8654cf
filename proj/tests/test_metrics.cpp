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

#include <cmath>

#include "mergebench/error.hpp"
#include "mergebench/metrics.hpp"
#include "mergebench/rng.hpp"
#include "oracles.hpp"

namespace mergebench {
namespace {

TEST(R2, HandCases) {
  for (const auto& c : oracle::r2_cases()) {
    EXPECT_NEAR(r2(c.y_true, c.y_pred), c.expected, 1e-12) << c.label;
  }
}

TEST(R2, ConstantTruthIsUndefined) {
  const std::vector<double> y{2, 2, 2}, p{1, 2, 3};
  EXPECT_THROW(r2(y, p), UndefinedMetric);
  EXPECT_THROW(r2(std::vector<double>{}, std::vector<double>{}), InvalidArgument);
  EXPECT_THROW(r2(std::vector<double>{1, 2}, std::vector<double>{1}), InvalidArgument);
}

TEST(KendallTau, SpecExamples) {
  const std::vector<double> a{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(kendall_tau(a, a), 1.0);
  EXPECT_DOUBLE_EQ(kendall_tau(a, std::vector<double>{4, 3, 2, 1}), -1.0);
  EXPECT_NEAR(kendall_tau(std::vector<double>{1, 2, 2, 3}, std::vector<double>{1, 2, 3, 4}), 5.0 / std::sqrt(30.0),
              1e-15);
  EXPECT_THROW(kendall_tau(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), UndefinedMetric);
  EXPECT_THROW(kendall_tau(std::vector<double>{1}, std::vector<double>{1}), InvalidArgument);
}

TEST(KendallTau, MatchesBruteForceOracle) {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(99);
    // Small alphabets force ties; every other trial is untied.
    const std::size_t levels = trial % 2 ? 1 + rng.below(6) : 0;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = levels ? static_cast<double>(rng.below(levels)) : rng.uniform();
      y[i] = levels ? static_cast<double>(rng.below(levels)) : rng.uniform();
    }
    const auto expected = oracle::kendall_tau_b(x, y);
    if (!expected) {
      EXPECT_THROW(kendall_tau(x, y), UndefinedMetric);
      continue;
    }
    EXPECT_NEAR(kendall_tau(x, y), *expected, 1e-12) << "trial " << trial;
  }
}

TEST(KendallTau, SymmetricAndRankInvariant) {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(40), y(40), fx(40);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = static_cast<double>(rng.below(10));
      y[i] = rng.uniform();
      fx[i] = std::exp(3.0 * x[i]) - 7.0;  // strictly increasing transform
    }
    EXPECT_DOUBLE_EQ(kendall_tau(x, y), kendall_tau(y, x));
    EXPECT_DOUBLE_EQ(kendall_tau(x, y), kendall_tau(fx, y));
    EXPECT_DOUBLE_EQ(kendall_tau(x, x), 1.0);
  }
}

TEST(R2, DecreasesWithNoise) {
  Rng rng(4);
  std::vector<double> y(200), noise(200);
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = rng.uniform();
    noise[i] = rng.normal();
  }
  double last = 1.0;
  for (const double scale : {0.01, 0.05, 0.1, 0.3}) {
    std::vector<double> p(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) p[i] = y[i] + scale * noise[i];
    const double v = r2(y, p);
    EXPECT_LT(v, last);
    last = v;
  }
}

TEST(BestSoFar, RunningMaximum) {
  EXPECT_EQ(best_so_far(std::vector<double>{0.1, 0.3, 0.2}), (std::vector<double>{0.1, 0.3, 0.3}));
  EXPECT_EQ(best_so_far(std::vector<double>{0.2, 0.2}), (std::vector<double>{0.2, 0.2}));
  const std::vector<double> up{0.1, 0.2, 0.4};
  EXPECT_EQ(best_so_far(up), up);
  const auto once = best_so_far(std::vector<double>{0.3, 0.1, 0.5, 0.4});
  EXPECT_EQ(best_so_far(once), once);
  EXPECT_THROW(best_so_far(std::vector<double>{}), InvalidArgument);
}

TEST(Aggregate, HandValues) {
  const auto a = aggregate({{0.0}, {1.0}});
  EXPECT_DOUBLE_EQ(a.mean[0], 0.5);
  EXPECT_DOUBLE_EQ(a.std[0], std::sqrt(0.5));
  const auto same = aggregate({{0.1, 0.2}, {0.1, 0.2}});
  EXPECT_EQ(same.std, (std::vector<double>{0.0, 0.0}));
}

TEST(Aggregate, MeanAndSampleStd) {
  const auto a = aggregate({{1, 2}, {3, 4}});
  EXPECT_EQ(a.mean, (std::vector<double>{2, 3}));
  EXPECT_NEAR(a.std[0], std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(a.std[1], std::sqrt(2.0), 1e-15);
  EXPECT_THROW(aggregate({{1, 2}}), UndefinedMetric);
  EXPECT_THROW(aggregate({{1, 2}, {1}}), InvalidArgument);
  EXPECT_THROW(aggregate({}), InvalidArgument);
}

TEST(Fidelity, ReportAndJson) {
  const std::vector<double> y{0.1, 0.2, 0.3, 0.4}, p{0.1, 0.25, 0.28, 0.45};
  const auto rep = fidelity(y, p, Target::kTest);
  EXPECT_EQ(rep.n, 4u);
  EXPECT_EQ(rep.target, Target::kTest);
  EXPECT_DOUBLE_EQ(rep.kendall_tau, 1.0);
  EXPECT_EQ(fidelity_from_json(to_json(rep)), rep);
}

}  // namespace
}  // namespace mergebench
