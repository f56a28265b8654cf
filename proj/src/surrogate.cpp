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

#include "mergebench/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>

#include "mergebench/error.hpp"
#include "mergebench/parallel.hpp"
#include "mergebench/rng.hpp"

namespace mergebench {

CvEnsemble::CvEnsemble(SearchSpace space, Target target, std::vector<GbdtModel> folds,
                       GbdtHyperparams hyperparams)
    : space_(std::move(space)), target_(target), folds_(std::move(folds)), hyperparams_(hyperparams) {
  if (folds_.empty()) throw InvalidArgument("CvEnsemble: needs at least one fold model");
  for (const auto& f : folds_) {
    if (f.num_features != space_.encoded_dimension()) {
      throw InvalidArgument("CvEnsemble: fold model expects " + std::to_string(f.num_features) +
                            " features, space encodes " + std::to_string(space_.encoded_dimension()));
    }
  }
}

double CvEnsemble::predict_raw(std::span<const double> encoded) const {
  double sum = 0.0;
  for (const auto& f : folds_) sum += f.predict(encoded);
  return sum / static_cast<double>(folds_.size());
}

double CvEnsemble::predict(const Configuration& config) const {
  const auto x = encode_features(space_, config);
  return std::clamp(predict_raw(x), 0.0, 1.0);
}

GbdtHyperparams sample_hyperparams(const HpoRanges& r, Rng& rng) {
  auto int_in = [&](std::pair<int, int> range) {
    return range.first + static_cast<int>(rng.below(static_cast<std::uint64_t>(range.second - range.first + 1)));
  };
  GbdtHyperparams hp;
  hp.num_trees = int_in(r.num_trees);
  hp.max_depth = int_in(r.max_depth);
  hp.learning_rate = std::exp(rng.uniform(std::log(r.learning_rate.first), std::log(r.learning_rate.second)));
  hp.min_samples_leaf = int_in(r.min_samples_leaf);
  hp.feature_subsample = rng.uniform(r.feature_subsample.first, r.feature_subsample.second);
  hp.row_subsample = rng.uniform(r.row_subsample.first, r.row_subsample.second);
  return hp;
}

FeatureMatrix encode_dataset(const Dataset& dataset) {
  FeatureMatrix x(dataset.size(), dataset.space.encoded_dimension());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto row = encode_features(dataset.space, dataset.records[i].config);
    std::copy(row.begin(), row.end(), x.row(i).begin());
  }
  return x;
}

namespace {

constexpr std::uint64_t kFoldStream = 0x666f6c64;
constexpr std::uint64_t kTrialStream = 0x7472696c;
constexpr std::uint64_t kTrainStream = 0x7472616e;
constexpr std::uint64_t kSplitStream = 0x73706c74;

std::vector<std::size_t> by_row_id(const Dataset& dataset) {
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dataset.records[a].row_id() < dataset.records[b].row_id();
  });
  return order;
}

}  // namespace

std::vector<int> assign_folds(const Dataset& dataset, int folds, std::uint64_t seed) {
  if (folds < 2 || static_cast<std::size_t>(folds) > dataset.size()) {
    throw InvalidArgument("assign_folds: need 2 <= folds <= rows");
  }
  auto order = by_row_id(dataset);
  Rng rng(derive_seed(seed, kFoldStream));
  shuffle(order, rng);
  std::vector<int> fold(dataset.size());
  for (std::size_t j = 0; j < order.size(); ++j) fold[order[j]] = static_cast<int>(j % static_cast<std::size_t>(folds));
  return fold;
}

CvResult cv_train(const Dataset& dataset, Target target, const CvOptions& options) {
  if (dataset.size() < kMinCvRows) {
    throw InvalidArgument("cv_train: dataset has " + std::to_string(dataset.size()) +
                          " rows, need at least " + std::to_string(kMinCvRows));
  }
  if (options.hpo_budget < 1) throw InvalidArgument("cv_train: hpo_budget must be >= 1");
  const int k = options.folds;
  const auto fold = assign_folds(dataset, k, options.seed);
  const FeatureMatrix x = encode_dataset(dataset);
  const std::size_t cols = x.cols;

  struct FoldData {
    FeatureMatrix train_x, val_x;
    std::vector<double> train_y, val_y;
    std::vector<std::uint64_t> train_ids;
  };
  std::vector<FoldData> parts(static_cast<std::size_t>(k));
  for (int f = 0; f < k; ++f) {
    auto& p = parts[static_cast<std::size_t>(f)];
    p.train_x.cols = p.val_x.cols = cols;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      const auto& r = dataset.records[i];
      const auto row = x.row(i);
      if (fold[i] == f) {
        p.val_x.data.insert(p.val_x.data.end(), row.begin(), row.end());
        p.val_y.push_back(r.score(target));
      } else {
        p.train_x.data.insert(p.train_x.data.end(), row.begin(), row.end());
        p.train_y.push_back(r.score(target));
        p.train_ids.push_back(r.row_id());
      }
    }
    p.train_x.rows = p.train_y.size();
    p.val_x.rows = p.val_y.size();
  }

  std::vector<TrialResult> trials(static_cast<std::size_t>(options.hpo_budget));
  for (std::size_t t = 0; t < trials.size(); ++t) {
    Rng rng(derive_seed(options.seed, kTrialStream, t));
    trials[t].hyperparams = sample_hyperparams(options.ranges, rng);
  }

  std::mutex best_mutex;
  std::size_t best_trial = std::numeric_limits<std::size_t>::max();
  double best_mse = std::numeric_limits<double>::infinity();
  std::vector<GbdtModel> best_models;

  parallel_for(trials.size(), options.threads, [&](std::size_t t) {
    std::vector<GbdtModel> models;
    double mse_sum = 0.0;
    for (int f = 0; f < k; ++f) {
      const auto& p = parts[static_cast<std::size_t>(f)];
      TrainOptions opt;
      opt.seed = derive_seed(options.seed, kTrainStream, t * 1000 + static_cast<std::size_t>(f));
      opt.row_ids = p.train_ids;
      models.push_back(train_gbdt(p.train_x, p.train_y, trials[t].hyperparams, opt));
      mse_sum += mean_squared_error(models.back(), p.val_x, p.val_y);
      trials[t].folds_run = f + 1;
      if (f + 1 < k) {
        std::lock_guard lock(best_mutex);
        if (mse_sum / static_cast<double>(k) > best_mse) {
          trials[t].cv_mse = mse_sum / static_cast<double>(k);
          return;
        }
      }
    }
    const double mse = mse_sum / static_cast<double>(k);
    std::lock_guard lock(best_mutex);
    trials[t].cv_mse = mse;
    if (mse < best_mse || (mse == best_mse && t < best_trial)) {
      best_mse = mse;
      best_trial = t;
      best_models = std::move(models);
    }
  });

  return CvResult{CvEnsemble(dataset.space, target, std::move(best_models), trials[best_trial].hyperparams),
                  std::move(trials), best_trial};
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n,
                                                                             std::uint64_t seed) {
  if (n < 10) throw InvalidArgument("split_9_1: need at least 10 records, got " + std::to_string(n));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(derive_seed(seed, kSplitStream));
  shuffle(idx, rng);
  const std::size_t n_test = (n + 5) / 10;
  std::vector<std::size_t> test(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> train(idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
  return {std::move(train), std::move(test)};
}

std::pair<Dataset, Dataset> split_9_1(const Dataset& dataset, std::uint64_t seed) {
  // Shuffle in row-id order so the split does not depend on record order.
  const auto order = by_row_id(dataset);
  const auto [train_idx, test_idx] = split_indices(dataset.size(), seed);
  Dataset train{dataset.space, {}, dataset.provenance};
  Dataset test{dataset.space, {}, dataset.provenance};
  for (const auto i : train_idx) train.records.push_back(dataset.records[order[i]]);
  for (const auto i : test_idx) test.records.push_back(dataset.records[order[i]]);
  return {std::move(train), std::move(test)};
}

nlohmann::json to_json(const CvEnsemble& e) {
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : e.folds()) folds.push_back(to_json(f));
  return {{"format", "mergebench-surrogate"},
          {"version", kModelFormatVersion},
          {"space", to_json(e.space())},
          {"target", to_string(e.target())},
          {"encoding", "continuous-passthrough/categorical-one-hot"},
          {"output_clamp", {0.0, 1.0}},
          {"hyperparams", to_json(e.hyperparams())},
          {"folds", std::move(folds)}};
}

CvEnsemble ensemble_from_json(const nlohmann::json& doc) {
  try {
    if (!doc.is_object() || doc.at("format").get<std::string>() != "mergebench-surrogate") {
      throw ParseError("not a surrogate model document");
    }
    if (const int v = doc.at("version").get<int>(); v != kModelFormatVersion) {
      throw UnsupportedVersion("surrogate model version " + std::to_string(v) + " (supported: " +
                               std::to_string(kModelFormatVersion) + ")");
    }
    if (doc.at("encoding").get<std::string>() != "continuous-passthrough/categorical-one-hot") {
      throw ParseError("unknown feature encoding");
    }
    std::vector<GbdtModel> folds;
    for (const auto& f : doc.at("folds")) folds.push_back(gbdt_from_json(f));
    try {
      return CvEnsemble(space_from_json(doc.at("space")), target_from_string(doc.at("target").get<std::string>()),
                        std::move(folds), hyperparams_from_json(doc.at("hyperparams")));
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("surrogate model: ") + e.what());
  }
}

void save_ensemble(const std::filesystem::path& path, const CvEnsemble& ensemble) {
  write_text_file(path, to_json(ensemble).dump() + "\n");
}

CvEnsemble load_ensemble(const std::filesystem::path& path) {
  return ensemble_from_json(parse_json(read_text_file(path), "surrogate model '" + path.string() + "'"));
}

}  // namespace mergebench
