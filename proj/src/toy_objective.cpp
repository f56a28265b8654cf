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

#include "mergebench/toy_objective.hpp"

#include <algorithm>
#include <cmath>

#include "mergebench/error.hpp"
#include "mergebench/rng.hpp"

namespace mergebench {

namespace {

// Generation constants. Base weights have gain kBaseGain / sqrt(width);
// specialists add kDeltaRank rank-one terms of spectral size ~kDeltaScale.
constexpr double kBaseGain = 0.8;
constexpr double kBaseBias = 0.1;
constexpr double kDeltaScale = 1.0;
constexpr double kDeltaBias = 0.25;
constexpr int kDeltaRank = 2;

enum Stream : std::uint64_t { kHeadStream = 1, kBaseStream, kAStream, kBStream, kDataStream };

std::vector<double> gaussian(Rng& rng, std::size_t n, double sd) {
  std::vector<double> v(n);
  for (auto& x : v) x = sd * rng.normal();
  return v;
}

ModelCheckpoint perturb(const ModelCheckpoint& base, CheckpointId id, Rng& rng) {
  ModelCheckpoint out{id, base.layers};
  for (auto& layer : out.layers) {
    const std::size_t d = layer.width();
    const double unit = 1.0 / std::sqrt(static_cast<double>(d));
    for (int r = 0; r < kDeltaRank; ++r) {
      const auto u = gaussian(rng, d, unit);
      const auto v = gaussian(rng, d, unit);
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) layer.weight[i * d + j] += kDeltaScale * u[i] * v[j];
      }
    }
    for (auto& b : layer.bias) b += kDeltaBias * rng.normal();
  }
  return out;
}

// Scratch-buffer forward pass for one input row; returns the argmax class.
int forward(const MergedModel& model, const double* x, std::vector<double>& h,
            std::vector<double>& z, double* logits = nullptr) {
  const SharedHead& head = *model.head;
  const std::size_t d = head.width;
  for (std::size_t i = 0; i < d; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) acc += head.embed[i * d + j] * x[j];
    h[i] = acc;
  }
  for (const auto& layer : model.layers) {
    const double s = layer.input_scale;
    for (std::size_t i = 0; i < d; ++i) h[i] *= s;
    const auto& w = layer.params.weight;
    for (std::size_t i = 0; i < d; ++i) {
      double acc = layer.params.bias[i];
      for (std::size_t j = 0; j < d; ++j) acc += w[i * d + j] * h[j];
      z[i] = std::tanh(acc);
    }
    for (std::size_t i = 0; i < d; ++i) h[i] += z[i];
  }
  int best = 0;
  double best_logit = -INFINITY;
  for (std::size_t c = 0; c < head.classes; ++c) {
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) acc += head.readout[c * d + j] * h[j];
    if (logits) logits[c] = acc;
    if (acc > best_logit) {
      best_logit = acc;
      best = static_cast<int>(c);
    }
  }
  return best;
}

void check_width(const MergedModel& model, const DataSplit& split) {
  if (!model.head) throw InvalidArgument("merged model has no head");
  if (split.width != model.head->width) {
    throw InvalidArgument("data width " + std::to_string(split.width) + " does not match model width " +
                          std::to_string(model.head->width));
  }
}

DataSplit make_split(const ModelFamily& fam, std::size_t n, Rng& rng) {
  const std::size_t d = static_cast<std::size_t>(fam.width);
  DataSplit s;
  s.width = d;
  s.inputs = gaussian(rng, n * d, 1.0);
  s.group.resize(n);
  for (std::size_t i = 0; i < n; ++i) s.group[i] = s.inputs[i * d] >= 0.0 ? 0 : 1;
  // Each half is labelled by its specialist.
  s.labels.resize(n);
  const auto model_a = as_model(fam, CheckpointId::kA);
  const auto model_b = as_model(fam, CheckpointId::kB);
  std::vector<double> h(d), z(d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& m = s.group[i] == 0 ? model_a : model_b;
    s.labels[i] = forward(m, &s.inputs[i * d], h, z);
  }
  return s;
}

ModelFamily generate_once(int n_layers, int width, std::uint64_t seed,
                          const FamilyOptions& options) {
  const auto d = static_cast<std::size_t>(width);
  ModelFamily fam;
  fam.n_layers = n_layers;
  fam.width = width;
  fam.used_seed = seed;

  Rng head_rng(derive_seed(seed, kHeadStream));
  auto head = std::make_shared<SharedHead>();
  head->width = d;
  head->classes = options.classes;
  const double unit = 1.0 / std::sqrt(static_cast<double>(d));
  head->embed = gaussian(head_rng, d * d, unit);
  head->readout = gaussian(head_rng, options.classes * d, unit);
  fam.head = std::move(head);

  Rng base_rng(derive_seed(seed, kBaseStream));
  fam.base.id = CheckpointId::kBase;
  for (int l = 0; l < n_layers; ++l) {
    LayerParams layer;
    layer.weight = gaussian(base_rng, d * d, kBaseGain * unit);
    layer.bias = gaussian(base_rng, d, kBaseBias);
    fam.base.layers.push_back(std::move(layer));
  }
  Rng a_rng(derive_seed(seed, kAStream));
  Rng b_rng(derive_seed(seed, kBStream));
  fam.a = perturb(fam.base, CheckpointId::kA, a_rng);
  fam.b = perturb(fam.base, CheckpointId::kB, b_rng);

  Rng data_rng(derive_seed(seed, kDataStream));
  fam.task.seed = seed;
  fam.task.dev = make_split(fam, options.dev_size, data_rng);
  fam.task.test = make_split(fam, options.test_size, data_rng);
  return fam;
}

bool specialists_ok(const ModelFamily& fam) {
  const auto& dev = fam.task.dev;
  const auto base = as_model(fam, CheckpointId::kBase);
  return evaluate_group(as_model(fam, CheckpointId::kA), dev, 0) > evaluate_group(base, dev, 0) &&
         evaluate_group(as_model(fam, CheckpointId::kB), dev, 1) > evaluate_group(base, dev, 1);
}

}  // namespace

const char* to_string(CheckpointId id) {
  switch (id) {
    case CheckpointId::kBase: return "base";
    case CheckpointId::kA: return "A";
    case CheckpointId::kB: return "B";
  }
  return "?";
}

const ModelCheckpoint& ModelFamily::checkpoint(CheckpointId id) const {
  switch (id) {
    case CheckpointId::kA: return a;
    case CheckpointId::kB: return b;
    default: return base;
  }
}

bool same_family(const ModelFamily& x, const ModelFamily& y) {
  return x.n_layers == y.n_layers && x.width == y.width && x.seed == y.seed &&
         x.used_seed == y.used_seed && x.head && y.head && *x.head == *y.head &&
         x.base == y.base && x.a == y.a && x.b == y.b && x.task == y.task;
}

ModelFamily generate_family(int n_layers, int width, std::uint64_t seed,
                            const FamilyOptions& options) {
  if (n_layers < 1) throw InvalidArgument("generate_family: n_layers must be >= 1");
  if (width < 2) throw InvalidArgument("generate_family: width must be >= 2");
  if (options.classes < 2) throw InvalidArgument("generate_family: need at least 2 classes");
  if (options.dev_size == 0 || options.test_size == 0) {
    throw InvalidArgument("generate_family: dev and test sets must be non-empty");
  }
  for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
    auto fam = generate_once(n_layers, width, seed + static_cast<std::uint64_t>(attempt), options);
    if (specialists_ok(fam)) {
      fam.seed = seed;
      return fam;
    }
  }
  throw GenerationFailure("generate_family: no seed in [" + std::to_string(seed) + ", " +
                          std::to_string(seed + static_cast<std::uint64_t>(options.max_retries)) +
                          "] produced specialists that beat the base model");
}

MergedModel as_model(const ModelFamily& family, CheckpointId id) {
  MergedModel m;
  m.head = family.head;
  for (const auto& layer : family.checkpoint(id).layers) m.layers.push_back({layer, 1.0});
  return m;
}

MergedModel task_arithmetic_merge(const ModelFamily& family, const Configuration& weights) {
  const auto n = static_cast<std::size_t>(family.n_layers);
  if (weights.size() != 2 * n) {
    throw InvalidArgument("task_arithmetic_merge: expected " + std::to_string(2 * n) +
                          " weights, got " + std::to_string(weights.size()));
  }
  ps_space(family.n_layers).validate(weights);
  MergedModel m;
  m.head = family.head;
  m.layers.reserve(n);
  for (std::size_t l = 0; l < n; ++l) {
    const double wa = weights[l];
    const double wb = weights[n + l];
    const double wbase = 1.0 - wa - wb;
    const auto& pb = family.base.layers[l];
    const auto& pa = family.a.layers[l];
    const auto& pB = family.b.layers[l];
    LayerParams out;
    out.weight.resize(pb.weight.size());
    out.bias.resize(pb.bias.size());
    for (std::size_t k = 0; k < pb.weight.size(); ++k) {
      out.weight[k] = wbase * pb.weight[k] + wa * pa.weight[k] + wb * pB.weight[k];
    }
    for (std::size_t k = 0; k < pb.bias.size(); ++k) {
      out.bias[k] = wbase * pb.bias[k] + wa * pa.bias[k] + wb * pB.bias[k];
    }
    m.layers.push_back({std::move(out), 1.0});
  }
  return m;
}

MergedModel dfs_stack(const ModelFamily& family, const Configuration& config) {
  const int L = family.n_layers;
  const auto space = [&] {
    // slots = dimension - (L - 1) - slots  =>  slots = (dim - L + 1) / 2
    const auto dim = static_cast<int>(config.size());
    const int slots = (dim - L + 1) / 2;
    if (slots < 1 || 2 * slots + L - 1 != dim) {
      throw InvalidArgument("dfs_stack: configuration length " + std::to_string(dim) +
                            " does not fit a " + std::to_string(L) + "-layer family");
    }
    if (slots > L) {
      throw InvalidArgument("dfs_stack: " + std::to_string(slots) +
                            " slots exceed the family's layer count");
    }
    return dfs_space(L, slots);
  }();
  space.validate(config);
  const auto M = static_cast<std::size_t>(space.num_categorical());
  const auto base_layers = static_cast<std::size_t>(L);

  // scale for potential position p: 1.0 for p == 0, else config[M + p - 1].
  auto scale_at = [&](std::size_t p) { return p == 0 ? 1.0 : config[M + p - 1]; };

  MergedModel m;
  m.head = family.head;
  std::size_t p = 0;
  for (std::size_t l = 0; l + 1 < base_layers; ++l, ++p) {
    m.layers.push_back({family.a.layers[l], scale_at(p)});
  }
  for (std::size_t i = 0; i < M; ++i, ++p) {
    const int choice = static_cast<int>(config[i]);
    if (choice == kDfsInsertA) {
      m.layers.push_back({family.a.layers[i], scale_at(p)});
    } else if (choice == kDfsInsertB) {
      m.layers.push_back({family.b.layers[i], scale_at(p)});
    }
  }
  m.layers.push_back({family.a.layers[base_layers - 1], scale_at(p)});
  return m;
}

std::vector<int> predict_labels(const MergedModel& model, const DataSplit& split) {
  check_width(model, split);
  const std::size_t d = split.width;
  std::vector<double> h(d), z(d);
  std::vector<int> out(split.size());
  for (std::size_t i = 0; i < split.size(); ++i) out[i] = forward(model, &split.inputs[i * d], h, z);
  return out;
}

std::vector<double> predict_logits(const MergedModel& model, const DataSplit& split) {
  check_width(model, split);
  const std::size_t d = split.width;
  const std::size_t k = model.head->classes;
  std::vector<double> h(d), z(d);
  std::vector<double> out(split.size() * k);
  for (std::size_t i = 0; i < split.size(); ++i) forward(model, &split.inputs[i * d], h, z, &out[i * k]);
  return out;
}

double evaluate(const MergedModel& model, const DataSplit& split) {
  check_width(model, split);
  if (split.size() == 0) return 0.0;
  const std::size_t d = split.width;
  std::vector<double> h(d), z(d);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < split.size(); ++i) {
    if (forward(model, &split.inputs[i * d], h, z) == split.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(split.size());
}

double evaluate_group(const MergedModel& model, const DataSplit& split, int group) {
  check_width(model, split);
  const std::size_t d = split.width;
  std::vector<double> h(d), z(d);
  std::size_t correct = 0, total = 0;
  for (std::size_t i = 0; i < split.size(); ++i) {
    if (split.group[i] != group) continue;
    ++total;
    if (forward(model, &split.inputs[i * d], h, z) == split.labels[i]) ++correct;
  }
  return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

Scores true_objective(SpaceKind kind, const ModelFamily& family, const Configuration& config) {
  const auto model =
      kind == SpaceKind::kPs ? task_arithmetic_merge(family, config) : dfs_stack(family, config);
  return {evaluate(model, family.task.dev), evaluate(model, family.task.test)};
}

// Serialization.

namespace {

nlohmann::json checkpoint_json(const ModelCheckpoint& c) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : c.layers) layers.push_back({{"weight", l.weight}, {"bias", l.bias}});
  return {{"id", to_string(c.id)}, {"layers", std::move(layers)}};
}

ModelCheckpoint checkpoint_from(const nlohmann::json& doc, CheckpointId id, std::size_t n_layers,
                                std::size_t width) {
  ModelCheckpoint c;
  c.id = id;
  if (doc.at("id").get<std::string>() != to_string(id)) {
    throw ParseError("checkpoint id mismatch: expected " + std::string(to_string(id)));
  }
  for (const auto& l : doc.at("layers")) {
    LayerParams p;
    p.weight = l.at("weight").get<std::vector<double>>();
    p.bias = l.at("bias").get<std::vector<double>>();
    if (p.weight.size() != width * width || p.bias.size() != width) {
      throw ParseError("checkpoint " + std::string(to_string(id)) + ": layer shape mismatch");
    }
    c.layers.push_back(std::move(p));
  }
  if (c.layers.size() != n_layers) {
    throw ParseError("checkpoint " + std::string(to_string(id)) + ": layer count mismatch");
  }
  return c;
}

nlohmann::json split_json(const DataSplit& s) {
  return {{"inputs", s.inputs}, {"labels", s.labels}, {"group", s.group}};
}

DataSplit split_from(const nlohmann::json& doc, std::size_t width) {
  DataSplit s;
  s.width = width;
  s.inputs = doc.at("inputs").get<std::vector<double>>();
  s.labels = doc.at("labels").get<std::vector<int>>();
  s.group = doc.at("group").get<std::vector<int>>();
  if (s.inputs.size() != s.labels.size() * width || s.group.size() != s.labels.size()) {
    throw ParseError("task split shape mismatch");
  }
  return s;
}

}  // namespace

nlohmann::json to_json(const ModelFamily& f) {
  return {{"format", "mergebench-family"},
          {"version", kFamilyFormatVersion},
          {"prng", "mt19937_64 with splitmix64-derived stream seeds"},
          {"seed", f.seed},
          {"used_seed", f.used_seed},
          {"n_layers", f.n_layers},
          {"width", f.width},
          {"classes", f.head->classes},
          {"embed", f.head->embed},
          {"readout", f.head->readout},
          {"base", checkpoint_json(f.base)},
          {"a", checkpoint_json(f.a)},
          {"b", checkpoint_json(f.b)},
          {"task", {{"seed", f.task.seed}, {"dev", split_json(f.task.dev)}, {"test", split_json(f.task.test)}}}};
}

ModelFamily family_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format").get<std::string>() != "mergebench-family") {
      throw ParseError("not a family document");
    }
    if (const int v = doc.at("version").get<int>(); v != kFamilyFormatVersion) {
      throw UnsupportedVersion("family document version " + std::to_string(v) + " (supported: " +
                               std::to_string(kFamilyFormatVersion) + ")");
    }
    ModelFamily f;
    f.seed = doc.at("seed").get<std::uint64_t>();
    f.used_seed = doc.at("used_seed").get<std::uint64_t>();
    f.n_layers = doc.at("n_layers").get<int>();
    f.width = doc.at("width").get<int>();
    if (f.n_layers < 1 || f.width < 2) throw ParseError("family document: invalid shape");
    const auto d = static_cast<std::size_t>(f.width);
    const auto n = static_cast<std::size_t>(f.n_layers);
    auto head = std::make_shared<SharedHead>();
    head->width = d;
    head->classes = doc.at("classes").get<std::size_t>();
    head->embed = doc.at("embed").get<std::vector<double>>();
    head->readout = doc.at("readout").get<std::vector<double>>();
    if (head->classes < 2 || head->embed.size() != d * d || head->readout.size() != head->classes * d) {
      throw ParseError("family document: head shape mismatch");
    }
    f.head = std::move(head);
    f.base = checkpoint_from(doc.at("base"), CheckpointId::kBase, n, d);
    f.a = checkpoint_from(doc.at("a"), CheckpointId::kA, n, d);
    f.b = checkpoint_from(doc.at("b"), CheckpointId::kB, n, d);
    const auto& task = doc.at("task");
    f.task.seed = task.at("seed").get<std::uint64_t>();
    f.task.dev = split_from(task.at("dev"), d);
    f.task.test = split_from(task.at("test"), d);
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("family document: ") + e.what());
  }
}

}  // namespace mergebench
