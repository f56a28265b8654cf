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
#include "mergebench/dataset.hpp"

namespace mergebench {

/// Coefficient of determination 1 - SS_res / SS_tot. Throws UndefinedMetric if
/// y_true is constant.
double r2(std::span<const double> y_true, std::span<const double> y_pred);

/// Kendall's tau-b, computed with Knight's O(n log n) algorithm. Ties are
/// exact equality. Throws UndefinedMetric if either input is entirely tied.
double kendall_tau(std::span<const double> x, std::span<const double> y);

std::vector<double> best_so_far(std::span<const double> raw);

struct AggregateCurve {
  std::vector<double> mean;
  std::vector<double> std;  // sample (n - 1) standard deviation

  bool operator==(const AggregateCurve&) const = default;
};

/// Pointwise mean and sample standard deviation over equally long runs.
/// A single run has no sample deviation and throws UndefinedMetric.
AggregateCurve aggregate(const std::vector<std::vector<double>>& runs);

struct FidelityReport {
  double r2 = 0.0;
  double kendall_tau = 0.0;
  std::size_t n = 0;
  Target target = Target::kDev;

  bool operator==(const FidelityReport&) const = default;
};

FidelityReport fidelity(std::span<const double> y_true, std::span<const double> y_pred, Target target);

nlohmann::json to_json(const FidelityReport& report);
FidelityReport fidelity_from_json(const nlohmann::json& doc);

}  // namespace mergebench
