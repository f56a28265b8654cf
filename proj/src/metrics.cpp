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

#include "mergebench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "mergebench/error.hpp"

namespace mergebench {

namespace {

void check_pair(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size()) throw InvalidArgument(std::string(what) + ": inputs differ in length");
  if (a.size() < 2) throw InvalidArgument(std::string(what) + ": need at least 2 points");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!std::isfinite(a[i]) || !std::isfinite(b[i])) {
      throw InvalidArgument(std::string(what) + ": non-finite input");
    }
  }
}

// Number of tied pairs within runs of equal values of a sorted sequence.
template <typename Key>
std::uint64_t tied_pairs(const std::vector<std::size_t>& order, Key key) {
  std::uint64_t ties = 0, run = 1;
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (key(order[i]) == key(order[i - 1])) {
      ++run;
    } else {
      ties += run * (run - 1) / 2;
      run = 1;
    }
  }
  return ties + run * (run - 1) / 2;
}

}  // namespace

double r2(std::span<const double> y_true, std::span<const double> y_pred) {
  check_pair(y_true, y_pred, "r2");
  const double mean = std::accumulate(y_true.begin(), y_true.end(), 0.0) / static_cast<double>(y_true.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    ss_res += (y_true[i] - y_pred[i]) * (y_true[i] - y_pred[i]);
    ss_tot += (y_true[i] - mean) * (y_true[i] - mean);
  }
  if (ss_tot == 0.0) throw UndefinedMetric("r2: y_true is constant");
  return 1.0 - ss_res / ss_tot;
}

double kendall_tau(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, "kendall_tau");
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });

  const std::uint64_t x_ties = tied_pairs(order, [&](std::size_t i) { return x[i]; });
  // Pairs tied in both x and y.
  std::uint64_t joint_ties = 0, run = 1;
  for (std::size_t i = 1; i < n; ++i) {
    if (x[order[i]] == x[order[i - 1]] && y[order[i]] == y[order[i - 1]]) {
      ++run;
    } else {
      joint_ties += run * (run - 1) / 2;
      run = 1;
    }
  }
  joint_ties += run * (run - 1) / 2;

  // Merge sort by y counting exchanges; each exchange is one discordant pair.
  std::uint64_t swaps = 0;
  std::vector<std::size_t> buf(n);
  for (std::size_t width = 1; width < n; width *= 2) {
    for (std::size_t lo = 0; lo < n; lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, n);
      const std::size_t hi = std::min(lo + 2 * width, n);
      std::size_t i = lo, j = mid, k = lo;
      while (i < mid && j < hi) {
        if (y[order[j]] < y[order[i]]) {
          buf[k++] = order[j++];
          swaps += mid - i;
        } else {
          buf[k++] = order[i++];
        }
      }
      while (i < mid) buf[k++] = order[i++];
      while (j < hi) buf[k++] = order[j++];
    }
    order.swap(buf);
  }
  const std::uint64_t y_ties = tied_pairs(order, [&](std::size_t i) { return y[i]; });

  const std::uint64_t total = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  if (x_ties == total || y_ties == total) throw UndefinedMetric("kendall_tau: an input is entirely tied");
  const double numer = static_cast<double>(total) - static_cast<double>(x_ties) - static_cast<double>(y_ties) +
                       static_cast<double>(joint_ties) - 2.0 * static_cast<double>(swaps);
  return numer / std::sqrt(static_cast<double>(total - x_ties)) / std::sqrt(static_cast<double>(total - y_ties));
}

std::vector<double> best_so_far(std::span<const double> raw) {
  if (raw.empty()) throw InvalidArgument("best_so_far: empty sequence");
  std::vector<double> out(raw.size());
  double best = raw[0];
  for (std::size_t i = 0; i < raw.size(); ++i) {
    best = std::max(best, raw[i]);
    out[i] = best;
  }
  return out;
}

AggregateCurve aggregate(const std::vector<std::vector<double>>& runs) {
  if (runs.empty()) throw InvalidArgument("aggregate: no runs");
  const std::size_t len = runs.front().size();
  for (const auto& r : runs) {
    if (r.size() != len) throw InvalidArgument("aggregate: runs differ in length");
  }
  if (runs.size() < 2) throw UndefinedMetric("aggregate: sample standard deviation needs at least 2 runs");
  const auto n = static_cast<double>(runs.size());
  AggregateCurve out{std::vector<double>(len, 0.0), std::vector<double>(len, 0.0)};
  for (std::size_t t = 0; t < len; ++t) {
    double sum = 0.0;
    for (const auto& r : runs) sum += r[t];
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& r : runs) ss += (r[t] - mean) * (r[t] - mean);
    out.mean[t] = mean;
    out.std[t] = std::sqrt(ss / (n - 1.0));
  }
  return out;
}

FidelityReport fidelity(std::span<const double> y_true, std::span<const double> y_pred, Target target) {
  return {r2(y_true, y_pred), kendall_tau(y_true, y_pred), y_true.size(), target};
}

nlohmann::json to_json(const FidelityReport& r) {
  return {{"target", to_string(r.target)}, {"n", r.n}, {"r2", r.r2}, {"kendall_tau", r.kendall_tau}};
}

FidelityReport fidelity_from_json(const nlohmann::json& doc) {
  return {doc.at("r2").get<double>(), doc.at("kendall_tau").get<double>(), doc.at("n").get<std::size_t>(),
          target_from_string(doc.at("target").get<std::string>())};
}

}  // namespace mergebench
