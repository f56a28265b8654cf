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

/* C interface to the mergebench library. All functions returning mb_status
 * set a thread-local message readable through mb_last_error() on failure.
 * Handles are opaque and owned by the caller; strings returned through
 * char** outputs are freed with mb_string_free(). */

#ifndef MERGEBENCH_H_
#define MERGEBENCH_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MB_API __declspec(dllexport)
#else
#define MB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mb_status {
  MB_OK = 0,
  MB_INVALID_ARGUMENT = 1,
  MB_PARSE_ERROR = 2,
  MB_UNSUPPORTED_VERSION = 3,
  MB_UNDEFINED_METRIC = 4,
  MB_GENERATION_FAILURE = 5,
  MB_IO_ERROR = 6,
  MB_RUNTIME_ERROR = 7
} mb_status;

typedef struct mb_space mb_space;
typedef struct mb_family mb_family;
typedef struct mb_objective mb_objective;
typedef struct mb_dataset mb_dataset;
typedef struct mb_benchmark mb_benchmark;
typedef struct mb_optimizer mb_optimizer;

MB_API const char* mb_version(void);
MB_API const char* mb_status_name(mb_status status);
/* Message of the last failed call on this thread; "" if none. */
MB_API const char* mb_last_error(void);
MB_API void mb_string_free(char* s);

/* Search spaces: "smm-ps-<layers>" or "smm-dfs-<layers>-<slots>". */
MB_API mb_status mb_space_from_name(const char* name, mb_space** out);
/* JSON: name, dimension, encoded_dimension, summary, variables. */
MB_API mb_status mb_space_describe(const mb_space* space, char** json);
MB_API size_t mb_space_dimension(const mb_space* space);
MB_API void mb_space_free(mb_space* space);

/* Toy checkpoint families (base, A, B and the synthetic task). */
MB_API mb_status mb_family_generate(int n_layers, int width, uint64_t seed, mb_family** out);
MB_API mb_status mb_family_save(const mb_family* family, const char* path);
MB_API mb_status mb_family_load(const char* path, mb_family** out);
MB_API void mb_family_free(mb_family* family);

/* Objectives score a configuration (dimension doubles) on dev and test. */
MB_API mb_status mb_objective_true(const mb_family* family, const mb_space* space, mb_objective** out);
MB_API mb_status mb_objective_surrogate(const mb_benchmark* benchmark, const char* id, mb_objective** out);
MB_API mb_status mb_objective_evaluate(const mb_objective* objective, const double* config, size_t n,
                                       double* dev, double* test);
/* Number of evaluate calls so far; always 0 for surrogate objectives. */
MB_API size_t mb_objective_true_calls(const mb_objective* objective);
MB_API void mb_objective_free(mb_objective* objective);

/* plan_json: preset name ("desk-ps", "desk-dfs", "full-ps", "full-dfs") as
 * a JSON string, or a list of {strategy, runs, budget, batch}. threads 0
 * means the library default. */
MB_API mb_status mb_collect(const mb_objective* objective, const char* plan_json, uint64_t seed, size_t threads,
                            mb_dataset** out);
MB_API mb_status mb_plan_total(const char* plan_json, size_t* total);
MB_API mb_status mb_dataset_load(const char* path, mb_dataset** out);
MB_API mb_status mb_dataset_save(const mb_dataset* dataset, const char* path);
MB_API size_t mb_dataset_size(const mb_dataset* dataset);
/* JSON: space, size, hash, counts per source. */
MB_API mb_status mb_dataset_summary(const mb_dataset* dataset, char** json);
MB_API mb_status mb_dataset_filter_random(const mb_dataset* dataset, mb_dataset** out);
MB_API void mb_dataset_free(mb_dataset* dataset);

/* options_json: {"split_seed", "folds", "hpo_budget", "seed", "threads"}, all
 * optional. report_json (may be NULL) receives both fidelity reports. */
MB_API mb_status mb_benchmark_build(const mb_dataset* dataset, const char* options_json, mb_benchmark** out,
                                    char** report_json);
MB_API mb_status mb_benchmark_save(const mb_benchmark* benchmark, const char* path);
MB_API mb_status mb_benchmark_load(const char* path, mb_benchmark** out);
MB_API mb_status mb_benchmark_predict(const mb_benchmark* benchmark, const double* config, size_t n, double* dev,
                                      double* test);
/* Scores the held-out split when dataset is the build dataset, else all of
 * it. JSON: {"heldout", "dev": report, "test": report}. */
MB_API mb_status mb_benchmark_fidelity(const mb_benchmark* benchmark, const mb_dataset* dataset, char** json);
MB_API void mb_benchmark_free(mb_benchmark* benchmark);

/* spec_json: optimizer name as a JSON string or an object with "name" and
 * optional settings. */
MB_API mb_status mb_optimizer_create(const mb_space* space, const char* spec_json, uint64_t seed,
                                     mb_optimizer** out);
MB_API size_t mb_optimizer_batch_size(const mb_optimizer* optimizer);
/* Writes count * dimension values row by row. */
MB_API mb_status mb_optimizer_ask(mb_optimizer* optimizer, size_t count, double* configs);
MB_API mb_status mb_optimizer_tell(mb_optimizer* optimizer, const double* configs, const double* values,
                                   size_t count);
MB_API void mb_optimizer_free(mb_optimizer* optimizer);

/* sim_json: {"optimizer", "runs", "budget", "base_seed"}. Output is a
 * trajectories document. */
MB_API mb_status mb_simulate(const mb_objective* objective, const char* sim_json, size_t threads,
                             char** trajectories_json);
MB_API mb_status mb_trajectories_csv(const char* trajectories_json, char** csv);
/* Merges n trajectories documents into a comparison report. summary_csv may
 * be NULL. */
MB_API mb_status mb_compare(const char* const* trajectories_json, size_t n, char** report_json,
                            char** summary_csv);
/* One row per (optimizer, objective, eval): mean and std of best and best_test. */
MB_API mb_status mb_report_curves_csv(const char* report_json, char** csv);

#ifdef __cplusplus
}
#endif

#endif  // MERGEBENCH_H_
