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

#include "mergebench/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mergebench/error.hpp"
#include "mergebench/rng.hpp"

namespace mergebench {

double RegressionTree::predict(std::span<const double> x) const {
  if (nodes.empty()) return 0.0;
  int k = 0;
  while (!nodes[k].is_leaf()) {
    const auto& n = nodes[k];
    k = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes[k].value;
}

std::size_t RegressionTree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t best = 0;
  // Children always have larger indices than their parent.
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    best = std::max(best, d[k]);
    if (!nodes[k].is_leaf()) {
      d[static_cast<std::size_t>(nodes[k].left)] = d[k] + 1;
      d[static_cast<std::size_t>(nodes[k].right)] = d[k] + 1;
    }
  }
  return best;
}

void GbdtHyperparams::validate() const {
  auto fail = [](const std::string& what) { throw InvalidArgument("gbdt hyperparameters: " + what); };
  if (num_trees < 0) fail("num_trees must be >= 0");
  if (max_depth < 1) fail("max_depth must be >= 1");
  if (min_samples_leaf < 1) fail("min_samples_leaf must be >= 1");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) fail("learning_rate must be in (0, 1]");
  if (!(feature_subsample > 0.0 && feature_subsample <= 1.0)) fail("feature_subsample must be in (0, 1]");
  if (!(row_subsample > 0.0 && row_subsample <= 1.0)) fail("row_subsample must be in (0, 1]");
}

double GbdtModel::predict(std::span<const double> x) const {
  if (x.size() != num_features) {
    throw InvalidArgument("gbdt predict: expected " + std::to_string(num_features) +
                          " features, got " + std::to_string(x.size()));
  }
  double sum = 0.0;
  for (const auto& t : trees) sum += t.predict(x);
  return base_score + learning_rate * sum;
}

namespace {

// Column-major copy of the training data in canonical (row-id) order.
struct CanonicalData {
  std::size_t n = 0;
  std::size_t f = 0;
  std::vector<double> cols;  // cols[feature * n + row]
  std::vector<double> y;
  std::vector<std::uint64_t> ids;
  std::vector<std::vector<std::uint32_t>> sorted;  // per feature, rows by (value, row)

  double at(std::size_t row, std::size_t feature) const { return cols[feature * n + row]; }
};

CanonicalData canonicalize(const FeatureMatrix& x, std::span<const double> y,
                           std::span<const std::uint64_t> ids) {
  CanonicalData c;
  c.n = x.rows;
  c.f = x.cols;
  std::vector<std::size_t> order(c.n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (!ids.empty()) {
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
  }
  c.cols.resize(c.n * c.f);
  c.y.resize(c.n);
  c.ids.resize(c.n);
  for (std::size_t j = 0; j < c.n; ++j) {
    const std::size_t src = order[j];
    for (std::size_t k = 0; k < c.f; ++k) c.cols[k * c.n + j] = x(src, k);
    c.y[j] = y[src];
    c.ids[j] = ids.empty() ? src : ids[src];
  }
  c.sorted.resize(c.f);
  for (std::size_t k = 0; k < c.f; ++k) {
    auto& s = c.sorted[k];
    s.resize(c.n);
    std::iota(s.begin(), s.end(), std::uint32_t{0});
    const double* col = &c.cols[k * c.n];
    std::sort(s.begin(), s.end(), [col](std::uint32_t a, std::uint32_t b) {
      return col[a] < col[b] || (col[a] == col[b] && a < b);
    });
  }
  return c;
}

double split_point(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2.0;
  return mid < hi ? mid : lo;
}

struct SplitCandidate {
  double score;
  std::size_t pos;  // split between pos and pos + 1
  bool found = false;
};

// Scans W features over one shared node segment; W independent prefix-sum
// chains keep the loop from stalling on a single accumulator.
struct ValueGrad {
  double v;
  double g;
};

template <std::size_t W>
void scan_features(const ValueGrad* const* e, std::size_t begin, std::size_t end,
                   std::size_t min_leaf, double sum, const double* inv, double parent, SplitCandidate* out) {
  const std::size_t count = end - begin;
  double sl[W];
  for (std::size_t w = 0; w < W; ++w) {
    sl[w] = 0.0;
    out[w] = {parent, 0, false};
    for (std::size_t i = begin; i + 1 < begin + min_leaf; ++i) sl[w] += e[w][i].g;
  }
  for (std::size_t i = begin + min_leaf - 1; i < end - min_leaf; ++i) {
    const std::size_t nl = i + 1 - begin;
    const double il = inv[nl];
    const double ir = inv[count - nl];
    for (std::size_t w = 0; w < W; ++w) {
      sl[w] += e[w][i].g;
      if (!(e[w][i + 1].v > e[w][i].v)) continue;
      const double sr = sum - sl[w];
      const double score = sl[w] * sl[w] * il + sr * sr * ir;
      if (score > out[w].score) out[w] = {score, i, true};
    }
  }
}

// Exact greedy grower. Every feature keeps its rows sorted by value and
// partitioned into contiguous per-node segments; all features share the same
// segment bounds, so split scans and partitions are sequential passes.
class TreeGrower {
 public:
  TreeGrower(const CanonicalData& data, const GbdtHyperparams& hp) : data_(data), hp_(hp) {}

  // leaf[j] receives the leaf value of every in-sample row j.
  RegressionTree grow(const std::vector<double>& residual, const std::vector<char>& in_sample,
                      const std::vector<std::size_t>& features, std::vector<double>& leaf) {
    const std::size_t nf = features.size();
    rows_.resize(nf);
    vals_.resize(nf);
    for (std::size_t q = 0; q < nf; ++q) {
      const std::size_t f = features[q];
      const double* col = &data_.cols[f * data_.n];
      auto& r = rows_[q];
      auto& v = vals_[q];
      r.clear();
      v.clear();
      for (const std::uint32_t j : data_.sorted[f]) {
        if (!in_sample[j]) continue;
        r.push_back(j);
        v.push_back({col[j], residual[j]});
      }
    }
    if (inv_.size() <= data_.n) {
      inv_.resize(data_.n + 1);
      for (std::size_t k = 1; k <= data_.n; ++k) inv_[k] = 1.0 / static_cast<double>(k);
    }

    RegressionTree tree;
    tree.nodes.emplace_back();
    struct Segment {
      int node;
      std::size_t begin, end;
    };
    std::vector<Segment> frontier{{0, 0, rows_[0].size()}};
    const auto min_leaf = static_cast<std::size_t>(hp_.min_samples_leaf);
    go_left_.resize(data_.n);
    auto set_leaf = [&](const Segment& seg, double value) {
      for (std::size_t i = seg.begin; i < seg.end; ++i) leaf[rows_[0][i]] = value;
    };

    for (int depth = 0; !frontier.empty(); ++depth) {
      const std::size_t m = frontier.size();
      std::vector<double> sum(m, 0.0), sse(m, 0.0);
      for (std::size_t s = 0; s < m; ++s) {
        const auto& seg = frontier[s];
        for (std::size_t i = seg.begin; i < seg.end; ++i) {
          const double g = vals_[0][i].g;
          sum[s] += g;
          sse[s] += g * g;
        }
        const std::size_t count = seg.end - seg.begin;
        tree.nodes[seg.node].value = count ? sum[s] / static_cast<double>(count) : 0.0;
      }
      if (depth == hp_.max_depth) {
        for (std::size_t s = 0; s < m; ++s) set_leaf(frontier[s], tree.nodes[frontier[s].node].value);
        break;
      }

      std::vector<int> split_feature(m, -1);
      std::vector<double> split_threshold(m, 0.0);
      for (std::size_t s = 0; s < m; ++s) {
        const auto& seg = frontier[s];
        const std::size_t count = seg.end - seg.begin;
        if (count < 2 * min_leaf) continue;
        const double parent = sum[s] * sum[s] * inv_[count];
        // Ties keep the earliest (feature, position), as a plain sequential scan would.
        double best = parent;
        for (std::size_t q0 = 0; q0 < nf; q0 += 4) {
          const std::size_t w = std::min<std::size_t>(4, nf - q0);
          const ValueGrad* e[4];
          for (std::size_t k = 0; k < w; ++k) e[k] = vals_[q0 + k].data();
          SplitCandidate c[4];
          switch (w) {
            case 4: scan_features<4>(e, seg.begin, seg.end, min_leaf, sum[s], inv_.data(), parent, c); break;
            case 3: scan_features<3>(e, seg.begin, seg.end, min_leaf, sum[s], inv_.data(), parent, c); break;
            case 2: scan_features<2>(e, seg.begin, seg.end, min_leaf, sum[s], inv_.data(), parent, c); break;
            default: scan_features<1>(e, seg.begin, seg.end, min_leaf, sum[s], inv_.data(), parent, c); break;
          }
          for (std::size_t k = 0; k < w; ++k) {
            if (c[k].found && c[k].score > best) {
              best = c[k].score;
              split_feature[s] = static_cast<int>(q0 + k);
              split_threshold[s] = split_point(e[k][c[k].pos].v, e[k][c[k].pos + 1].v);
            }
          }
        }
        if (split_feature[s] >= 0 && !(best - parent > 1e-12 * sse[s])) split_feature[s] = -1;
      }

      // Route rows of split nodes; finished nodes hand their value to their rows.
      const bool last = depth + 1 == hp_.max_depth;
      std::vector<Segment> next;
      std::size_t out = 0;
      for (std::size_t s = 0; s < m; ++s) {
        const auto& seg = frontier[s];
        if (split_feature[s] < 0) {
          set_leaf(seg, tree.nodes[seg.node].value);
          continue;
        }
        const auto q = static_cast<std::size_t>(split_feature[s]);
        std::size_t n_left = 0;
        double sum_left = 0.0, sum_right = 0.0;
        for (std::size_t i = seg.begin; i < seg.end; ++i) {
          const bool left = vals_[q][i].v <= split_threshold[s];
          go_left_[rows_[q][i]] = left ? 1 : 0;
          n_left += left ? 1 : 0;
          (left ? sum_left : sum_right) += vals_[q][i].g;
        }
        const int left_node = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        auto& node = tree.nodes[seg.node];
        node.feature = static_cast<int>(features[q]);
        node.threshold = split_threshold[s];
        node.left = left_node;
        node.right = left_node + 1;
        if (last) {
          // Children are leaves: no need to partition for another level.
          const double lv = sum_left / static_cast<double>(n_left);
          const double rv = sum_right / static_cast<double>(seg.end - seg.begin - n_left);
          tree.nodes[left_node].value = lv;
          tree.nodes[left_node + 1].value = rv;
          for (std::size_t i = seg.begin; i < seg.end; ++i) {
            const std::uint32_t j = rows_[q][i];
            leaf[j] = go_left_[j] ? lv : rv;
          }
          continue;
        }
        next.push_back({left_node, out, out + n_left});
        next.push_back({left_node + 1, out + n_left, out + (seg.end - seg.begin)});
        out += seg.end - seg.begin;
      }
      if (next.empty()) break;
      tmp_rows_.resize(out);
      tmp_vals_.resize(out);
      for (std::size_t q = 0; q < nf; ++q) {
        for (std::size_t s = 0, k = 0; s < m; ++s) {
          if (split_feature[s] < 0) continue;
          const auto& seg = frontier[s];
          std::size_t li = next[2 * k].begin;
          std::size_t ri = next[2 * k + 1].begin;
          const std::uint32_t* r = rows_[q].data();
          const ValueGrad* v = vals_[q].data();
          for (std::size_t i = seg.begin; i < seg.end; ++i) {
            const std::size_t left = go_left_[r[i]];
            const std::size_t dst = left ? li : ri;
            li += left;
            ri += 1 - left;
            tmp_rows_[dst] = r[i];
            tmp_vals_[dst] = v[i];
          }
          ++k;
        }
        rows_[q].swap(tmp_rows_);
        vals_[q].swap(tmp_vals_);
        tmp_rows_.resize(out);
        tmp_vals_.resize(out);
      }
      frontier = std::move(next);
    }
    return tree;
  }

 private:
  const CanonicalData& data_;
  const GbdtHyperparams& hp_;
  std::vector<std::vector<std::uint32_t>> rows_;
  std::vector<std::vector<ValueGrad>> vals_;
  std::vector<std::uint32_t> tmp_rows_;
  std::vector<ValueGrad> tmp_vals_;
  std::vector<double> inv_;  // inv_[k] = 1 / k
  std::vector<char> go_left_;
};

double predict_canonical(const RegressionTree& tree, const CanonicalData& data, std::size_t row) {
  int k = 0;
  while (!tree.nodes[k].is_leaf()) {
    const auto& node = tree.nodes[k];
    k = data.at(row, static_cast<std::size_t>(node.feature)) <= node.threshold ? node.left : node.right;
  }
  return tree.nodes[k].value;
}

constexpr std::uint64_t kRowStream = 0x726f7773;
constexpr std::uint64_t kFeatureStream = 0x66656174;

}  // namespace

GbdtModel train_gbdt(const FeatureMatrix& features, std::span<const double> targets,
                     const GbdtHyperparams& hp, const TrainOptions& options) {
  hp.validate();
  if (features.rows < 2) throw InvalidArgument("train_gbdt: need at least 2 rows");
  if (features.cols == 0) throw InvalidArgument("train_gbdt: need at least 1 feature");
  if (targets.size() != features.rows) throw InvalidArgument("train_gbdt: target count != row count");
  if (features.data.size() != features.rows * features.cols) {
    throw InvalidArgument("train_gbdt: feature matrix storage size mismatch");
  }
  if (!options.row_ids.empty() && options.row_ids.size() != features.rows) {
    throw InvalidArgument("train_gbdt: row id count != row count");
  }
  if (!std::all_of(targets.begin(), targets.end(), [](double v) { return std::isfinite(v); }) ||
      !std::all_of(features.data.begin(), features.data.end(), [](double v) { return std::isfinite(v); })) {
    throw InvalidArgument("train_gbdt: non-finite feature or target");
  }

  const CanonicalData data = canonicalize(features, targets, options.row_ids);
  const std::size_t n = data.n;

  GbdtModel model;
  model.learning_rate = hp.learning_rate;
  model.num_features = data.f;
  if (std::all_of(data.y.begin(), data.y.end(), [&](double v) { return v == data.y[0]; })) {
    model.base_score = data.y[0];
  } else {
    model.base_score = std::accumulate(data.y.begin(), data.y.end(), 0.0) / static_cast<double>(n);
  }

  std::vector<double> pred(n, model.base_score);
  std::vector<double> residual(n);
  std::vector<char> in_sample(n, 1);
  std::vector<double> leaf(n, 0.0);
  std::vector<std::size_t> all_features(data.f);
  std::iota(all_features.begin(), all_features.end(), std::size_t{0});
  const auto n_sub_features = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(hp.feature_subsample * static_cast<double>(data.f))));

  TreeGrower grower(data, hp);
  if (options.mse_trace) options.mse_trace->clear();
  model.trees.reserve(static_cast<std::size_t>(hp.num_trees));
  for (int t = 0; t < hp.num_trees; ++t) {
    for (std::size_t j = 0; j < n; ++j) residual[j] = data.y[j] - pred[j];

    if (hp.row_subsample < 1.0) {
      const std::uint64_t round_seed = derive_seed(options.seed, kRowStream, static_cast<std::uint64_t>(t));
      for (std::size_t j = 0; j < n; ++j) {
        const double u = static_cast<double>(mix64(round_seed ^ data.ids[j]) >> 11) * 0x1.0p-53;
        in_sample[j] = u < hp.row_subsample ? 1 : 0;
      }
    }
    std::vector<std::size_t> feats = all_features;
    if (n_sub_features < data.f) {
      Rng frng(derive_seed(options.seed, kFeatureStream, static_cast<std::uint64_t>(t)));
      shuffle(feats, frng);
      feats.resize(n_sub_features);
      std::sort(feats.begin(), feats.end());
    }

    RegressionTree tree = grower.grow(residual, in_sample, feats, leaf);
    for (std::size_t j = 0; j < n; ++j) {
      pred[j] += hp.learning_rate * (in_sample[j] ? leaf[j] : predict_canonical(tree, data, j));
    }
    model.trees.push_back(std::move(tree));

    if (options.mse_trace) {
      double sse = 0.0;
      for (std::size_t j = 0; j < n; ++j) sse += (data.y[j] - pred[j]) * (data.y[j] - pred[j]);
      options.mse_trace->push_back(sse / static_cast<double>(n));
    }
  }
  return model;
}

double mean_squared_error(const GbdtModel& model, const FeatureMatrix& features,
                          std::span<const double> targets) {
  if (targets.size() != features.rows || features.rows == 0) {
    throw InvalidArgument("mean_squared_error: size mismatch or empty data");
  }
  double sse = 0.0;
  for (std::size_t i = 0; i < features.rows; ++i) {
    const double e = model.predict(features.row(i)) - targets[i];
    sse += e * e;
  }
  return sse / static_cast<double>(features.rows);
}

nlohmann::json to_json(const GbdtHyperparams& hp) {
  return {{"num_trees", hp.num_trees},
          {"max_depth", hp.max_depth},
          {"min_samples_leaf", hp.min_samples_leaf},
          {"learning_rate", hp.learning_rate},
          {"feature_subsample", hp.feature_subsample},
          {"row_subsample", hp.row_subsample}};
}

GbdtHyperparams hyperparams_from_json(const nlohmann::json& doc) {
  GbdtHyperparams hp;
  hp.num_trees = doc.at("num_trees").get<int>();
  hp.max_depth = doc.at("max_depth").get<int>();
  hp.min_samples_leaf = doc.at("min_samples_leaf").get<int>();
  hp.learning_rate = doc.at("learning_rate").get<double>();
  hp.feature_subsample = doc.at("feature_subsample").get<double>();
  hp.row_subsample = doc.at("row_subsample").get<double>();
  return hp;
}

nlohmann::json to_json(const GbdtModel& model) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : model.trees) {
    std::vector<int> feature, left, right;
    std::vector<double> threshold, value;
    for (const auto& node : t.nodes) {
      feature.push_back(node.feature);
      threshold.push_back(node.threshold);
      left.push_back(node.left);
      right.push_back(node.right);
      value.push_back(node.value);
    }
    trees.push_back({{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right},
                     {"value", value}});
  }
  return {{"base_score", model.base_score},
          {"learning_rate", model.learning_rate},
          {"num_features", model.num_features},
          {"trees", std::move(trees)}};
}

GbdtModel gbdt_from_json(const nlohmann::json& doc) {
  GbdtModel m;
  m.base_score = doc.at("base_score").get<double>();
  m.learning_rate = doc.at("learning_rate").get<double>();
  m.num_features = doc.at("num_features").get<std::size_t>();
  if (!std::isfinite(m.base_score) || !(m.learning_rate > 0.0 && m.learning_rate <= 1.0)) {
    throw ParseError("gbdt model: invalid base_score or learning_rate");
  }
  for (const auto& t : doc.at("trees")) {
    const auto feature = t.at("feature").get<std::vector<int>>();
    const auto threshold = t.at("threshold").get<std::vector<double>>();
    const auto left = t.at("left").get<std::vector<int>>();
    const auto right = t.at("right").get<std::vector<int>>();
    const auto value = t.at("value").get<std::vector<double>>();
    const std::size_t count = feature.size();
    if (count == 0 || threshold.size() != count || left.size() != count || right.size() != count ||
        value.size() != count) {
      throw ParseError("gbdt model: tree " + std::to_string(m.trees.size()) + " has ragged node arrays");
    }
    RegressionTree tree;
    tree.nodes.resize(count);
    for (std::size_t k = 0; k < count; ++k) {
      auto& node = tree.nodes[k];
      node = {feature[k], threshold[k], left[k], right[k], value[k]};
      const auto ik = static_cast<int>(k);
      const bool ok = node.is_leaf()
                          ? std::isfinite(node.value)
                          : (node.feature < static_cast<int>(m.num_features) && std::isfinite(node.threshold) &&
                             node.left > ik && node.right > ik && node.left < static_cast<int>(count) &&
                             node.right < static_cast<int>(count));
      if (!ok) {
        throw ParseError("gbdt model: tree " + std::to_string(m.trees.size()) + " node " +
                         std::to_string(k) + " is malformed");
      }
    }
    m.trees.push_back(std::move(tree));
  }
  return m;
}

}  // namespace mergebench
