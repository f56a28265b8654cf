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

// mergebench command-line tool. Every subcommand reads an optional JSON
// experiment document (--config) and applies flag overrides on top of it.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mergebench.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// Failure carrying the process exit code.
struct Failure {
  int code;
  std::string message;
};

[[noreturn]] void usage_error(const std::string& message) { throw Failure{kExitUsage, message}; }

void check(mb_status status, const std::string& context) {
  if (status == MB_OK) return;
  const int code = status == MB_INVALID_ARGUMENT || status == MB_PARSE_ERROR || status == MB_UNSUPPORTED_VERSION ||
                           status == MB_IO_ERROR
                       ? kExitUsage
                       : kExitRuntime;
  throw Failure{code, context + ": " + mb_last_error()};
}

// Owns a string allocated by the library.
class LibString {
 public:
  LibString() = default;
  LibString(const LibString&) = delete;
  LibString& operator=(const LibString&) = delete;
  ~LibString() { mb_string_free(p_); }
  char** out() { return &p_; }
  std::string str() const { return p_ ? p_ : ""; }

 private:
  char* p_ = nullptr;
};

template <typename T, void (*Free)(T*)>
class Handle {
 public:
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p_); }
  T** out() { return &p_; }
  T* get() const { return p_; }

 private:
  T* p_ = nullptr;
};

using Space = Handle<mb_space, mb_space_free>;
using Family = Handle<mb_family, mb_family_free>;
using ObjectiveH = Handle<mb_objective, mb_objective_free>;
using DatasetH = Handle<mb_dataset, mb_dataset_free>;
using Benchmark = Handle<mb_benchmark, mb_benchmark_free>;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) usage_error("cannot open '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text) || !out.flush()) throw Failure{kExitRuntime, "cannot write '" + path.string() + "'"};
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  json doc = json::parse(read_file(path), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) usage_error("config '" + path + "' is not a JSON object");
  return doc;
}

// Section of the config for one subcommand; top-level keys act as defaults.
json section(const json& config, const std::string& name) {
  json out = json::object();
  for (const auto& key : {"space", "threads", "family"}) {
    if (config.contains(key)) out[key] = config[key];
  }
  if (config.contains(name)) {
    if (!config[name].is_object()) usage_error("config section '" + name + "' must be an object");
    for (const auto& [k, v] : config[name].items()) out[k] = v;
  }
  return out;
}

template <typename T>
T get(const json& cfg, const std::string& key, const T& fallback) {
  if (!cfg.contains(key)) return fallback;
  try {
    return cfg.at(key).get<T>();
  } catch (const json::exception&) {
    usage_error("config field '" + key + "' has the wrong type");
  }
}

template <typename T>
T require_field(const json& cfg, const std::string& key) {
  if (!cfg.contains(key)) usage_error("missing required setting '" + key + "'");
  return get<T>(cfg, key, T{});
}

std::size_t threads_of(const json& cfg) { return get<std::size_t>(cfg, "threads", 0); }

std::string format_mean_std(double mean, double std) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f +- %.4f", mean, std);
  return buf;
}

// Overrides collected from flags; unset ones leave the config untouched.
struct Overrides {
  std::string config;
  std::vector<std::pair<std::string, std::string>> strings;
  std::vector<std::pair<std::string, std::int64_t>> ints;

  void apply(json& cfg) const {
    for (const auto& [k, v] : strings) cfg[k] = v;
    for (const auto& [k, v] : ints) cfg[k] = v;
  }
};

// Subcommands ---------------------------------------------------------------

int cmd_space(const std::string& name) {
  Space space;
  check(mb_space_from_name(name.c_str(), space.out()), "space");
  LibString desc;
  check(mb_space_describe(space.get(), desc.out()), "space");
  const json doc = json::parse(desc.str());
  std::cout << doc["name"].get<std::string>() << ": " << doc["summary"].get<std::string>() << "\n";
  std::cout << "  dimension: " << doc["dimension"] << "\n";
  std::cout << "  encoded dimension: " << doc["encoded_dimension"] << "\n";
  return kExitOk;
}

void make_family(const json& cfg, Family& family) {
  if (cfg.contains("family_file")) {
    check(mb_family_load(get<std::string>(cfg, "family_file", "").c_str(), family.out()), "family");
    return;
  }
  const json fam = cfg.value("family", json::object());
  if (!fam.is_object()) usage_error("'family' must be an object");
  check(mb_family_generate(get<int>(fam, "n_layers", 8), get<int>(fam, "width", 8), get<std::uint64_t>(fam, "seed", 0),
                           family.out()),
        "family");
}

int cmd_collect(const json& cfg) {
  const auto space_name = require_field<std::string>(cfg, "space");
  const auto output = require_field<std::string>(cfg, "output");
  const json plan = cfg.contains("plan") ? cfg["plan"] : json("desk-ps");
  const auto seed = get<std::uint64_t>(cfg, "seed", 0);

  Space space;
  check(mb_space_from_name(space_name.c_str(), space.out()), "space");
  std::size_t total = 0;
  check(mb_plan_total(plan.dump().c_str(), &total), "plan");
  Family family;
  make_family(cfg, family);
  ObjectiveH objective;
  check(mb_objective_true(family.get(), space.get(), objective.out()), "objective");

  DatasetH dataset;
  check(mb_collect(objective.get(), plan.dump().c_str(), seed, threads_of(cfg), dataset.out()), "collect");
  check(mb_dataset_save(dataset.get(), output.c_str()), "save dataset");
  if (cfg.contains("family_output")) {
    check(mb_family_save(family.get(), get<std::string>(cfg, "family_output", "").c_str()), "save family");
  }
  LibString summary;
  check(mb_dataset_summary(dataset.get(), summary.out()), "summary");
  const json s = json::parse(summary.str());
  std::cout << "wrote " << s["size"] << " records to " << output << " (hash " << s["hash"].get<std::string>()
            << ")\n";
  for (const auto& [source, n] : s["sources"].items()) std::cout << "  " << source << ": " << n << "\n";
  return kExitOk;
}

void print_fidelity(const json& report) {
  for (const auto& channel : {"dev", "test"}) {
    const auto& r = report[channel];
    char buf[128];
    std::snprintf(buf, sizeof buf, "  %-4s  R2 %.4f  KT %.4f  (n = %zu)", channel, r["r2"].get<double>(),
                  r["kendall_tau"].get<double>(), r["n"].get<std::size_t>());
    std::cout << buf << "\n";
  }
}

int cmd_train(const json& cfg) {
  const auto dataset_path = require_field<std::string>(cfg, "dataset");
  const auto output = require_field<std::string>(cfg, "output");
  const bool random_only = get<bool>(cfg, "random_only", false);
  json options = {{"split_seed", get<std::uint64_t>(cfg, "split_seed", 0)},
                  {"folds", get<int>(cfg, "folds", 5)},
                  {"hpo_budget", get<int>(cfg, "hpo_budget", 50)},
                  {"seed", get<std::uint64_t>(cfg, "seed", 0)},
                  {"threads", threads_of(cfg)}};

  DatasetH loaded;
  check(mb_dataset_load(dataset_path.c_str(), loaded.out()), "dataset");
  DatasetH filtered;
  mb_dataset* dataset = loaded.get();
  if (random_only) {
    check(mb_dataset_filter_random(loaded.get(), filtered.out()), "random-only filter");
    dataset = filtered.get();
  }
  Benchmark benchmark;
  LibString report;
  check(mb_benchmark_build(dataset, options.dump().c_str(), benchmark.out(), report.out()), "train");
  check(mb_benchmark_save(benchmark.get(), output.c_str()), "save benchmark");
  std::cout << "wrote benchmark to " << output << " (" << mb_dataset_size(dataset)
            << " records); held-out fidelity:\n";
  print_fidelity(json::parse(report.str()));
  return kExitOk;
}

int cmd_fidelity(const json& cfg) {
  const auto benchmark_path = require_field<std::string>(cfg, "benchmark");
  const auto dataset_path = require_field<std::string>(cfg, "dataset");
  Benchmark benchmark;
  check(mb_benchmark_load(benchmark_path.c_str(), benchmark.out()), "benchmark");
  DatasetH dataset;
  check(mb_dataset_load(dataset_path.c_str(), dataset.out()), "dataset");
  LibString report;
  check(mb_benchmark_fidelity(benchmark.get(), dataset.get(), report.out()), "fidelity");
  const json doc = json::parse(report.str());
  std::cout << "fidelity of " << benchmark_path << " on "
            << (doc["heldout"].get<bool>() ? "its held-out split" : "the whole dataset") << ":\n";
  print_fidelity(doc);
  if (cfg.contains("output")) write_file(get<std::string>(cfg, "output", ""), doc.dump(2) + "\n");
  return kExitOk;
}

int cmd_run(const json& cfg) {
  const auto output = require_field<std::string>(cfg, "output");
  const auto objective_kind = get<std::string>(cfg, "objective", "surrogate");
  json optimizers = cfg.contains("optimizers") ? cfg["optimizers"] : json::array({"sep_cma"});
  if (!optimizers.is_array() || optimizers.empty()) usage_error("'optimizers' must be a non-empty list");
  const int runs = get<int>(cfg, "runs", 10);
  const int budget = get<int>(cfg, "budget", 1000);
  const auto base_seed = get<std::uint64_t>(cfg, "base_seed", 0);

  ObjectiveH objective;
  Benchmark benchmark;
  Family family;
  Space space;
  if (objective_kind == "surrogate") {
    check(mb_benchmark_load(require_field<std::string>(cfg, "benchmark").c_str(), benchmark.out()), "benchmark");
    check(mb_objective_surrogate(benchmark.get(), get<std::string>(cfg, "id", "surrogate").c_str(),
                                 objective.out()),
          "objective");
  } else if (objective_kind == "true") {
    check(mb_space_from_name(require_field<std::string>(cfg, "space").c_str(), space.out()), "space");
    make_family(cfg, family);
    check(mb_objective_true(family.get(), space.get(), objective.out()), "objective");
  } else {
    usage_error("objective must be 'surrogate' or 'true', got '" + objective_kind + "'");
  }

  json merged = {{"format", "mergebench-trajectories"}, {"version", 1}, {"trajectories", json::array()}};
  for (const auto& opt : optimizers) {
    const json sim = {{"optimizer", opt}, {"runs", runs}, {"budget", budget}, {"base_seed", base_seed}};
    LibString out;
    check(mb_simulate(objective.get(), sim.dump().c_str(), threads_of(cfg), out.out()), "run");
    json doc = json::parse(out.str());
    for (auto& t : doc["trajectories"]) merged["trajectories"].push_back(std::move(t));
  }
  const fs::path dir(output);
  const std::string doc = merged.dump();
  write_file(dir / "trajectories.json", doc + "\n");
  LibString csv;
  check(mb_trajectories_csv(doc.c_str(), csv.out()), "trajectories csv");
  write_file(dir / "trajectories.csv", csv.str());

  std::cout << "wrote " << merged["trajectories"].size() << " trajectories to " << dir.string() << "\n";
  std::cout << "final best (" << runs << " runs x " << budget << " evals):\n";
  // Final best per optimizer: dev objective and test channel of that solution.
  std::vector<std::string> order;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> finals;
  for (const auto& t : merged["trajectories"]) {
    const auto name = t["optimizer"].get<std::string>();
    if (!finals.count(name)) order.push_back(name);
    finals[name].first.push_back(t["best"].back().get<double>());
    finals[name].second.push_back(t["best_test"].back().get<double>());
  }
  auto stats = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::make_pair(mean, v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0);
  };
  for (const auto& name : order) {
    const auto [dm, ds] = stats(finals[name].first);
    const auto [tm, ts] = stats(finals[name].second);
    std::cout << "  " << name << "  dev " << format_mean_std(dm, ds) << "  test " << format_mean_std(tm, ts) << "\n";
  }
  return kExitOk;
}

int cmd_compare(const json& cfg) {
  const auto inputs = require_field<std::vector<std::string>>(cfg, "inputs");
  const auto output = require_field<std::string>(cfg, "output");
  if (inputs.empty()) usage_error("'inputs' must list at least one trajectories file");
  std::vector<std::string> docs;
  for (const auto& path : inputs) {
    docs.push_back(read_file(fs::is_directory(path) ? (fs::path(path) / "trajectories.json").string() : path));
  }
  std::vector<const char*> ptrs;
  for (const auto& d : docs) ptrs.push_back(d.c_str());
  LibString report, summary, curves;
  check(mb_compare(ptrs.data(), ptrs.size(), report.out(), summary.out()), "compare");
  check(mb_report_curves_csv(report.str().c_str(), curves.out()), "compare");

  const fs::path dir(output);
  const json doc = json::parse(report.str());
  write_file(dir / "report.json", report.str() + "\n");
  write_file(dir / "summary.csv", summary.str());
  write_file(dir / "curves.csv", curves.str());
  std::ostringstream gaps;
  gaps << "optimizer,objective,true_final_mean,surrogate_final_mean,gap\n";
  for (const auto& g : doc["gaps"]) {
    gaps << g["optimizer"].get<std::string>() << ',' << g["objective"].get<std::string>() << ','
         << g["true_final_mean"].dump() << ',' << g["surrogate_final_mean"].dump() << ',' << g["gap"].dump() << "\n";
  }
  write_file(dir / "gaps.csv", gaps.str());

  std::cout << "wrote report for " << doc["curves"].size() << " curves (budget " << doc["budget"] << ") to "
            << dir.string() << "\n";
  for (const auto& c : doc["curves"]) {
    std::cout << "  " << c["optimizer"].get<std::string>() << " on " << c["objective"].get<std::string>() << ": dev "
              << format_mean_std(c["final_mean"].get<double>(), c["final_std"].get<double>()) << "\n";
  }
  for (const auto& g : doc["gaps"]) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "  gap %s true vs %s: %.4f", g["optimizer"].get<std::string>().c_str(),
                  g["objective"].get<std::string>().c_str(), g["gap"].get<double>());
    std::cout << buf << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Surrogate benchmarks for model-merging hyperparameter optimization"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(mb_version()));

  std::string space_name;
  auto* space_cmd = app.add_subcommand("space", "Describe a search space by name");
  space_cmd->add_option("name", space_name, "smm-ps-<layers> or smm-dfs-<layers>-<slots>")->required();

  struct Command {
    CLI::App* app;
    Overrides ov;
  };
  std::map<std::string, Command> commands;
  auto add = [&](const std::string& name, const std::string& help) -> Command& {
    auto& c = commands[name];
    c.app = app.add_subcommand(name, help);
    c.app->add_option("-c,--config", c.ov.config, "JSON experiment document");
    return c;
  };
  // Registers a flag that overrides one config field when given.
  auto str_flag = [](Command& c, const std::string& flag, const std::string& key, const std::string& help) {
    c.app->add_option_function<std::string>(flag, [&c, key](const std::string& v) { c.ov.strings.emplace_back(key, v); },
                                            help);
  };
  auto int_flag = [](Command& c, const std::string& flag, const std::string& key, const std::string& help) {
    c.app->add_option_function<std::int64_t>(flag, [&c, key](std::int64_t v) { c.ov.ints.emplace_back(key, v); },
                                             help);
  };

  auto& collect = add("collect", "Evaluate a collection plan on the toy objective and write a dataset");
  str_flag(collect, "--space", "space", "search space name");
  str_flag(collect, "-o,--output", "output", "dataset file");
  int_flag(collect, "--seed", "seed", "collection seed");
  int_flag(collect, "--threads", "threads", "worker threads");

  auto& train = add("train", "Train dev and test surrogates on a dataset");
  str_flag(train, "--dataset", "dataset", "dataset file");
  str_flag(train, "-o,--output", "output", "benchmark file");
  int_flag(train, "--hpo-budget", "hpo_budget", "random-search trials per channel");
  int_flag(train, "--seed", "seed", "training seed");
  int_flag(train, "--split-seed", "split_seed", "9:1 split seed");
  int_flag(train, "--threads", "threads", "worker threads");
  bool random_only = false;
  train.app->add_flag("--random-only", random_only, "train on random-sourced records only");

  auto& fid = add("fidelity", "Report R2 and Kendall tau of a benchmark on a dataset");
  str_flag(fid, "--benchmark", "benchmark", "benchmark file");
  str_flag(fid, "--dataset", "dataset", "dataset file");
  str_flag(fid, "-o,--output", "output", "report file");

  auto& run = add("run", "Run optimizers on a surrogate or the true objective");
  str_flag(run, "--benchmark", "benchmark", "benchmark file");
  str_flag(run, "--objective", "objective", "surrogate or true");
  str_flag(run, "--id", "id", "objective id written to trajectories");
  str_flag(run, "-o,--output", "output", "output directory");
  int_flag(run, "--runs", "runs", "seeds per optimizer");
  int_flag(run, "--budget", "budget", "evaluations per run");
  int_flag(run, "--base-seed", "base_seed", "seed of the first run");
  int_flag(run, "--threads", "threads", "worker threads");
  std::vector<std::string> run_optimizers;
  run.app->add_option("--optimizer", run_optimizers, "optimizer name or JSON spec (repeatable)");

  auto& cmp = add("compare", "Merge trajectory files into a comparison report");
  str_flag(cmp, "-o,--output", "output", "output directory");
  std::vector<std::string> cmp_inputs;
  cmp.app->add_option("--input", cmp_inputs, "trajectories file or run directory (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (space_cmd->parsed()) return cmd_space(space_name);
    for (auto& [name, c] : commands) {
      if (!c.app->parsed()) continue;
      json cfg = section(load_config(c.ov.config), name);
      c.ov.apply(cfg);
      if (name == "collect") return cmd_collect(cfg);
      if (name == "train") {
        if (random_only) cfg["random_only"] = true;
        return cmd_train(cfg);
      }
      if (name == "fidelity") return cmd_fidelity(cfg);
      if (name == "run") {
        if (!run_optimizers.empty()) {
          cfg["optimizers"] = json::array();
          for (const auto& o : run_optimizers) {
            const json parsed = json::parse(o, nullptr, false);
            cfg["optimizers"].push_back(!parsed.is_discarded() && parsed.is_object() ? parsed : json(o));
          }
        }
        return cmd_run(cfg);
      }
      if (name == "compare") {
        if (!cmp_inputs.empty()) cfg["inputs"] = cmp_inputs;
        return cmd_compare(cfg);
      }
    }
  } catch (const Failure& f) {
    std::cerr << "mergebench: " << f.message << "\n";
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "mergebench: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
