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

#include "mergebench.h"

#include <cstring>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "mergebench/error.hpp"
#include "mergebench/harness.hpp"
#include "mergebench/parallel.hpp"

using namespace mergebench;

struct mb_space {
  SearchSpace space;
};
struct mb_family {
  std::shared_ptr<const ModelFamily> family;
};
struct mb_objective {
  std::shared_ptr<const Objective> objective;
  const TrueObjective* truth = nullptr;
};
struct mb_dataset {
  Dataset dataset;
};
struct mb_benchmark {
  std::shared_ptr<const SurrogateBenchmark> benchmark;
};
struct mb_optimizer {
  std::unique_ptr<Optimizer> optimizer;
};

namespace {

thread_local std::string g_last_error;

mb_status status_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return MB_INVALID_ARGUMENT;
    case ErrorCode::kParseError: return MB_PARSE_ERROR;
    case ErrorCode::kUnsupportedVersion: return MB_UNSUPPORTED_VERSION;
    case ErrorCode::kUndefinedMetric: return MB_UNDEFINED_METRIC;
    case ErrorCode::kGenerationFailure: return MB_GENERATION_FAILURE;
    case ErrorCode::kIo: return MB_IO_ERROR;
    case ErrorCode::kRuntime: return MB_RUNTIME_ERROR;
  }
  return MB_RUNTIME_ERROR;
}

template <typename F>
mb_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return MB_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const nlohmann::json::exception& e) {
    g_last_error = e.what();
    return MB_PARSE_ERROR;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return MB_RUNTIME_ERROR;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MB_RUNTIME_ERROR;
  } catch (...) {
    g_last_error = "unknown error";
    return MB_RUNTIME_ERROR;
  }
}

void require(const void* p, const char* what) {
  if (!p) throw InvalidArgument(std::string(what) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

nlohmann::json parse_arg(const char* text, const char* what) {
  require(text, what);
  return parse_json(text, what);
}

std::size_t thread_count(std::size_t threads) { return threads ? threads : default_threads(); }

Configuration config_of(const SearchSpace& space, const double* values, std::size_t n) {
  if (n && !values) throw InvalidArgument("config values must not be NULL");
  Configuration c{std::vector<double>(values, values + n)};
  space.validate(c);
  return c;
}

}  // namespace

extern "C" {

const char* mb_version(void) { return "1.0.0"; }

const char* mb_status_name(mb_status status) {
  switch (status) {
    case MB_OK: return "ok";
    case MB_INVALID_ARGUMENT: return to_string(ErrorCode::kInvalidArgument);
    case MB_PARSE_ERROR: return to_string(ErrorCode::kParseError);
    case MB_UNSUPPORTED_VERSION: return to_string(ErrorCode::kUnsupportedVersion);
    case MB_UNDEFINED_METRIC: return to_string(ErrorCode::kUndefinedMetric);
    case MB_GENERATION_FAILURE: return to_string(ErrorCode::kGenerationFailure);
    case MB_IO_ERROR: return to_string(ErrorCode::kIo);
    case MB_RUNTIME_ERROR: return to_string(ErrorCode::kRuntime);
  }
  return "unknown";
}

const char* mb_last_error(void) { return g_last_error.c_str(); }

void mb_string_free(char* s) { std::free(s); }

// Spaces --------------------------------------------------------------------

mb_status mb_space_from_name(const char* name, mb_space** out) {
  return guarded([&] {
    require(name, "name");
    require(out, "out");
    *out = new mb_space{space_from_name(name)};
  });
}

mb_status mb_space_describe(const mb_space* space, char** json) {
  return guarded([&] {
    require(space, "space");
    require(json, "json");
    auto doc = to_json(space->space);
    doc["dimension"] = space->space.dimension();
    doc["encoded_dimension"] = space->space.encoded_dimension();
    doc["summary"] = space->space.summary();
    *json = dup_string(doc.dump());
  });
}

size_t mb_space_dimension(const mb_space* space) { return space ? space->space.dimension() : 0; }

void mb_space_free(mb_space* space) { delete space; }

// Families ------------------------------------------------------------------

mb_status mb_family_generate(int n_layers, int width, uint64_t seed, mb_family** out) {
  return guarded([&] {
    require(out, "out");
    *out = new mb_family{std::make_shared<const ModelFamily>(generate_family(n_layers, width, seed))};
  });
}

mb_status mb_family_save(const mb_family* family, const char* path) {
  return guarded([&] {
    require(family, "family");
    require(path, "path");
    write_text_file(path, to_json(*family->family).dump() + "\n");
  });
}

mb_status mb_family_load(const char* path, mb_family** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    const auto doc = parse_json(read_text_file(path), std::string("family '") + path + "'");
    *out = new mb_family{std::make_shared<const ModelFamily>(family_from_json(doc))};
  });
}

void mb_family_free(mb_family* family) { delete family; }

// Objectives ----------------------------------------------------------------

mb_status mb_objective_true(const mb_family* family, const mb_space* space, mb_objective** out) {
  return guarded([&] {
    require(family, "family");
    require(space, "space");
    require(out, "out");
    auto obj = std::make_shared<const TrueObjective>(family->family, space->space);
    *out = new mb_objective{obj, obj.get()};
  });
}

mb_status mb_objective_surrogate(const mb_benchmark* benchmark, const char* id, mb_objective** out) {
  return guarded([&] {
    require(benchmark, "benchmark");
    require(out, "out");
    const std::string name = id ? id : "surrogate";
    *out = new mb_objective{std::make_shared<const SurrogateObjective>(benchmark->benchmark, name)};
  });
}

mb_status mb_objective_evaluate(const mb_objective* objective, const double* config, size_t n, double* dev,
                                double* test) {
  return guarded([&] {
    require(objective, "objective");
    const auto s = objective->objective->evaluate(config_of(objective->objective->space(), config, n));
    if (dev) *dev = s.dev;
    if (test) *test = s.test;
  });
}

size_t mb_objective_true_calls(const mb_objective* objective) {
  return objective && objective->truth ? objective->truth->calls() : 0;
}

void mb_objective_free(mb_objective* objective) { delete objective; }

// Datasets ------------------------------------------------------------------

mb_status mb_collect(const mb_objective* objective, const char* plan_json, uint64_t seed, size_t threads,
                     mb_dataset** out) {
  return guarded([&] {
    require(objective, "objective");
    require(out, "out");
    const auto plan = plan_from_json(parse_arg(plan_json, "plan"));
    *out = new mb_dataset{collect(plan, *objective->objective, seed, thread_count(threads))};
  });
}

mb_status mb_plan_total(const char* plan_json, size_t* total) {
  return guarded([&] {
    require(total, "total");
    *total = plan_from_json(parse_arg(plan_json, "plan")).total();
  });
}

mb_status mb_dataset_load(const char* path, mb_dataset** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new mb_dataset{load_dataset(path)};
  });
}

mb_status mb_dataset_save(const mb_dataset* dataset, const char* path) {
  return guarded([&] {
    require(dataset, "dataset");
    require(path, "path");
    save_dataset(path, dataset->dataset);
  });
}

size_t mb_dataset_size(const mb_dataset* dataset) { return dataset ? dataset->dataset.size() : 0; }

mb_status mb_dataset_summary(const mb_dataset* dataset, char** json) {
  return guarded([&] {
    require(dataset, "dataset");
    require(json, "json");
    nlohmann::json counts = nlohmann::json::object();
    for (const auto& [name, n] : count_by_source(dataset->dataset)) counts[name] = n;
    const nlohmann::json doc = {{"space", dataset->dataset.space.name()},
                                {"size", dataset->dataset.size()},
                                {"hash", dataset_hash(dataset->dataset)},
                                {"sources", counts}};
    *json = dup_string(doc.dump());
  });
}

mb_status mb_dataset_filter_random(const mb_dataset* dataset, mb_dataset** out) {
  return guarded([&] {
    require(dataset, "dataset");
    require(out, "out");
    *out = new mb_dataset{filter_random_only(dataset->dataset)};
  });
}

void mb_dataset_free(mb_dataset* dataset) { delete dataset; }

// Benchmarks ----------------------------------------------------------------

mb_status mb_benchmark_build(const mb_dataset* dataset, const char* options_json, mb_benchmark** out,
                             char** report_json) {
  return guarded([&] {
    require(dataset, "dataset");
    require(out, "out");
    const auto doc = options_json ? parse_json(options_json, "build options") : nlohmann::json::object();
    if (!doc.is_object()) throw InvalidArgument("build options must be a JSON object");
    BuildOptions options;
    options.split_seed = doc.value("split_seed", std::uint64_t{0});
    options.cv.folds = doc.value("folds", options.cv.folds);
    options.cv.hpo_budget = doc.value("hpo_budget", options.cv.hpo_budget);
    options.cv.seed = doc.value("seed", std::uint64_t{0});
    options.cv.threads = thread_count(doc.value("threads", std::size_t{0}));
    auto result = build_benchmark(dataset->dataset, options);
    if (report_json) {
      *report_json = dup_string(nlohmann::json{{"heldout", true},
                                               {"dev", to_json(result.dev_report)},
                                               {"test", to_json(result.test_report)}}
                                    .dump());
    }
    *out = new mb_benchmark{std::make_shared<const SurrogateBenchmark>(std::move(result.benchmark))};
  });
}

mb_status mb_benchmark_save(const mb_benchmark* benchmark, const char* path) {
  return guarded([&] {
    require(benchmark, "benchmark");
    require(path, "path");
    save_benchmark(path, *benchmark->benchmark);
  });
}

mb_status mb_benchmark_load(const char* path, mb_benchmark** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new mb_benchmark{std::make_shared<const SurrogateBenchmark>(load_benchmark(path))};
  });
}

mb_status mb_benchmark_predict(const mb_benchmark* benchmark, const double* config, size_t n, double* dev,
                               double* test) {
  return guarded([&] {
    require(benchmark, "benchmark");
    const auto s = benchmark->benchmark->predict(config_of(benchmark->benchmark->space, config, n));
    if (dev) *dev = s.dev;
    if (test) *test = s.test;
  });
}

mb_status mb_benchmark_fidelity(const mb_benchmark* benchmark, const mb_dataset* dataset, char** json) {
  return guarded([&] {
    require(benchmark, "benchmark");
    require(dataset, "dataset");
    require(json, "json");
    bool heldout = false;
    const auto records = fidelity_records(*benchmark->benchmark, dataset->dataset, &heldout);
    const auto [dev, test] = evaluate_fidelity(*benchmark->benchmark, records);
    *json = dup_string(nlohmann::json{{"heldout", heldout}, {"dev", to_json(dev)}, {"test", to_json(test)}}.dump());
  });
}

void mb_benchmark_free(mb_benchmark* benchmark) { delete benchmark; }

// Optimizers ----------------------------------------------------------------

mb_status mb_optimizer_create(const mb_space* space, const char* spec_json, uint64_t seed, mb_optimizer** out) {
  return guarded([&] {
    require(space, "space");
    require(out, "out");
    const auto spec = optimizer_spec_from_json(parse_arg(spec_json, "optimizer spec"));
    *out = new mb_optimizer{make_optimizer(spec, space->space, seed)};
  });
}

size_t mb_optimizer_batch_size(const mb_optimizer* optimizer) {
  return optimizer ? optimizer->optimizer->batch_size() : 0;
}

mb_status mb_optimizer_ask(mb_optimizer* optimizer, size_t count, double* configs) {
  return guarded([&] {
    require(optimizer, "optimizer");
    require(configs, "configs");
    const auto batch = optimizer->optimizer->ask(count);
    const std::size_t d = optimizer->optimizer->space().dimension();
    for (std::size_t i = 0; i < batch.size(); ++i) {
      std::copy(batch[i].values.begin(), batch[i].values.end(), configs + i * d);
    }
  });
}

mb_status mb_optimizer_tell(mb_optimizer* optimizer, const double* configs, const double* values, size_t count) {
  return guarded([&] {
    require(optimizer, "optimizer");
    require(configs, "configs");
    require(values, "values");
    const std::size_t d = optimizer->optimizer->space().dimension();
    std::vector<Configuration> batch;
    batch.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      batch.push_back({std::vector<double>(configs + i * d, configs + (i + 1) * d)});
    }
    optimizer->optimizer->tell(batch, std::vector<double>(values, values + count));
  });
}

void mb_optimizer_free(mb_optimizer* optimizer) { delete optimizer; }

// Simulation and reports ----------------------------------------------------

mb_status mb_simulate(const mb_objective* objective, const char* sim_json, size_t threads,
                      char** trajectories_json) {
  return guarded([&] {
    require(objective, "objective");
    require(trajectories_json, "trajectories_json");
    const auto doc = parse_arg(sim_json, "simulation spec");
    if (!doc.is_object() || !doc.contains("optimizer")) {
      throw InvalidArgument("simulation spec must be an object with an 'optimizer' field");
    }
    SimulationSpec spec;
    spec.optimizer = optimizer_spec_from_json(doc.at("optimizer"));
    spec.runs = doc.value("runs", spec.runs);
    spec.budget = doc.value("budget", spec.budget);
    spec.base_seed = doc.value("base_seed", spec.base_seed);
    const auto ts = simulate(spec, *objective->objective, thread_count(threads));
    *trajectories_json = dup_string(trajectories_to_json(ts).dump());
  });
}

mb_status mb_trajectories_csv(const char* trajectories_json, char** csv) {
  return guarded([&] {
    require(csv, "csv");
    *csv = dup_string(trajectories_csv(trajectories_from_json(parse_arg(trajectories_json, "trajectories"))));
  });
}

mb_status mb_compare(const char* const* trajectories_json, size_t n, char** report_json, char** summary_csv) {
  return guarded([&] {
    require(report_json, "report_json");
    if (n && !trajectories_json) throw InvalidArgument("trajectories_json must not be NULL");
    std::vector<Trajectory> all;
    for (std::size_t i = 0; i < n; ++i) {
      auto ts = trajectories_from_json(parse_arg(trajectories_json[i], "trajectories"));
      all.insert(all.end(), ts.begin(), ts.end());
    }
    const auto report = compare_report(all);
    std::string csv = summary_csv ? report_summary_csv(report) : std::string();
    *report_json = dup_string(to_json(report).dump());
    if (summary_csv) *summary_csv = dup_string(csv);
  });
}

mb_status mb_report_curves_csv(const char* report_json, char** csv) {
  return guarded([&] {
    require(csv, "csv");
    const auto report = report_from_json(parse_arg(report_json, "report"));
    const auto out = report_curves_csv(report);
    *csv = dup_string(out);
  });
}

}  // extern "C"
