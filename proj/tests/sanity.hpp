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

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "mergebench/optimizers.hpp"
#include "mergebench/search_space.hpp"

// Standard black-box test problems, written as minimization and recast as
// maximization of the negated value.
namespace mergebench::sanity {

inline SearchSpace box(const std::string& name, std::size_t n, double lo, double hi) {
  return SearchSpace(name, std::vector<VariableSpec>(n, VariableSpec::continuous(lo, hi)));
}

inline double sphere(const Configuration& c) {
  double s = 0.0;
  for (double v : c.values) s += v * v;
  return s;
}

inline double ellipsoid(const Configuration& c) {
  const double n = static_cast<double>(c.size());
  double s = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) s += std::pow(1e6, static_cast<double>(i) / (n - 1)) * c[i] * c[i];
  return s;
}

inline double rastrigin(const Configuration& c) {
  double s = 10.0 * static_cast<double>(c.size());
  for (double v : c.values) s += v * v - 10.0 * std::cos(2.0 * std::numbers::pi * v);
  return s;
}

/// Branin on [-5, 10] x [0, 15]; three global minima of value 5 / (4 pi).
inline SearchSpace branin_space() {
  return SearchSpace("branin", {VariableSpec::continuous(-5.0, 10.0), VariableSpec::continuous(0.0, 15.0)});
}

inline constexpr double kBraninMin = 0.397887357729738;

inline double branin(const Configuration& c) {
  constexpr double pi = std::numbers::pi;
  const double b = 5.1 / (4.0 * pi * pi), cc = 5.0 / pi, t = 1.0 / (8.0 * pi);
  const double q = c[1] - b * c[0] * c[0] + cc * c[0] - 6.0;
  return q * q + 10.0 * (1.0 - t) * std::cos(c[0]) + 10.0;
}

/// 8 categorical(3) dims rewarding category 0, then 8 continuous dims on
/// [0, 1] with a sphere centered at 0.3.
inline SearchSpace mixed_space() {
  std::vector<VariableSpec> v(8, VariableSpec::categorical(3));
  v.insert(v.end(), 8, VariableSpec::continuous(0.0, 1.0));
  return SearchSpace("mixed-toy", v);
}

inline double mixed_reward(const Configuration& c) {
  double s = 0.0;
  for (std::size_t i = 0; i < 8; ++i) s += c[i] == 0.0 ? 1.0 : 0.0;
  for (std::size_t i = 8; i < 16; ++i) s -= (c[i] - 0.3) * (c[i] - 0.3);
  return s;
}

/// Runs ask/tell until `budget` evaluations have been made (whole batches,
/// the last one truncated for flexible-batch methods) and returns the best
/// maximized value.
inline double maximize(Optimizer& opt, const std::function<double(const Configuration&)>& f, std::size_t budget) {
  double best = -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  while (used < budget) {
    const auto configs = opt.ask();
    std::vector<double> values;
    for (const auto& c : configs) {
      values.push_back(f(c));
      if (used < budget) best = std::max(best, values.back());
      ++used;
    }
    opt.tell(configs, values);
  }
  return best;
}

inline std::unique_ptr<Optimizer> make(const std::string& name, const SearchSpace& space, std::uint64_t seed,
                                       std::size_t population = 0) {
  OptimizerSpec spec;
  spec.name = name;
  spec.population = population;
  return make_optimizer(spec, space, seed);
}

}  // namespace mergebench::sanity
