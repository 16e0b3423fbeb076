/*
 * Copyright 2026 The tipbench Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to tipbench. All objects are opaque handles released with the
 * matching *_free function. Every call returns a tb_status; on failure the
 * message is available from tb_last_error() on the calling thread until the
 * next failing call there. Output pointers are written only on success.
 * Strings passed in are NUL-terminated UTF-8. */

#ifndef TIPBENCH_H_
#define TIPBENCH_H_

#include <stddef.h>
#include <stdint.h>

#if defined(TIPBENCH_BUILDING_LIBRARY)
#define TIPBENCH_API __attribute__((visibility("default")))
#else
#define TIPBENCH_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tb_status {
  TB_OK = 0,
  TB_ERR_INVALID_ARGUMENT = 1,
  TB_ERR_CONFIG = 2,
  TB_ERR_DATA = 3,
  TB_ERR_NUMERICAL = 4,
  TB_ERR_IO = 5,
  TB_ERR_INTERNAL = 6
} tb_status;

TIPBENCH_API const char* tb_version(void);
TIPBENCH_API const char* tb_last_error(void);
TIPBENCH_API const char* tb_status_name(tb_status s);

/* ---- Owned strings ---------------------------------------------------- */

typedef struct tb_string tb_string;
TIPBENCH_API const char* tb_string_data(const tb_string* s);
TIPBENCH_API size_t tb_string_size(const tb_string* s);
TIPBENCH_API void tb_string_free(tb_string* s);

/* ---- Utilities -------------------------------------------------------- */

TIPBENCH_API uint64_t tb_derive_seed(uint64_t parent, const char* label, uint64_t index);
/* "fnv1a64:<16 hex>" of the bytes. */
TIPBENCH_API tb_status tb_content_hash(const char* data, size_t size, tb_string** out);
/* Machine-readable system catalog (JSON array). */
TIPBENCH_API tb_status tb_catalog_json(tb_string** out);
/* Default parameters of a catalog system as a JSON object. */
TIPBENCH_API tb_status tb_system_params_json(const char* system, tb_string** out);

/* ---- Generative processes (prior samples) ----------------------------- */

typedef struct tb_process_list tb_process_list;

/* Samples n processes; process i uses seed tb_derive_seed(seed, "process", i).
 * A process whose retry budget runs out is recorded as a failure and leaves
 * an empty slot. threads <= 0 uses the hardware concurrency. */
TIPBENCH_API tb_status tb_process_sample(uint64_t seed, size_t n, int threads, tb_process_list** out);
TIPBENCH_API tb_status tb_process_list_new(tb_process_list** out);
/* Appends one process parsed from JSON. */
TIPBENCH_API tb_status tb_process_list_add_json(tb_process_list* list, const char* json);
TIPBENCH_API size_t tb_process_list_size(const tb_process_list* list);
/* 1 if slot i holds a process. */
TIPBENCH_API int tb_process_list_ok(const tb_process_list* list, size_t i);
/* Failure message of slot i (empty for successful slots). */
TIPBENCH_API tb_status tb_process_list_failure(const tb_process_list* list, size_t i, tb_string** out);
TIPBENCH_API tb_status tb_process_to_json(const tb_process_list* list, size_t i, tb_string** out);
TIPBENCH_API tb_status tb_process_hash(const tb_process_list* list, size_t i, tb_string** out);
/* Sampling summary of slot i as JSON: seed, target class, bifurcation class,
 * models drawn, scans, screened models. */
TIPBENCH_API tb_status tb_process_summary_json(const tb_process_list* list, size_t i, tb_string** out);
TIPBENCH_API void tb_process_list_free(tb_process_list* list);

/* ---- Episodes ---------------------------------------------------------- */

typedef struct tb_episodes tb_episodes;

TIPBENCH_API tb_status tb_episodes_new(tb_episodes** out);
TIPBENCH_API void tb_episodes_free(tb_episodes* eps);
TIPBENCH_API size_t tb_episodes_size(const tb_episodes* eps);
/* Parses JSONL and appends every line. */
TIPBENCH_API tb_status tb_episodes_add_jsonl(tb_episodes* eps, const char* text);
TIPBENCH_API tb_status tb_episodes_to_jsonl(const tb_episodes* eps, tb_string** out);
/* Basic facts about episode i. t_crit is -1 when unset. */
TIPBENCH_API tb_status tb_episode_info(const tb_episodes* eps, size_t i, int* length, int* tipped,
                                       int* t_crit, int* valid);
TIPBENCH_API tb_status tb_episode_forcing_class(const tb_episodes* eps, size_t i, tb_string** out);

/* K-episode ensembles for every process in the list; ensemble i draws from
 * tb_derive_seed(seed, "ensemble", i). Valid episodes are appended in process
 * order; *invalid receives the number of discarded episodes. */
TIPBENCH_API tb_status tb_episodes_simulate_prior(tb_episodes* eps, const tb_process_list* list,
                                                  uint64_t seed, int k, int length, int threads,
                                                  int* invalid);

/* n validation episodes of a catalog system; episode j uses
 * tb_derive_seed(seed, system, j). forcing_class NULL draws the class;
 * length <= 0 uses the catalog length; params_json NULL or "{}" keeps the
 * defaults, otherwise it overrides named parameters. Invalid episodes are
 * appended too and counted in *invalid. */
TIPBENCH_API tb_status tb_episodes_simulate_system(tb_episodes* eps, const char* system, uint64_t seed,
                                                   size_t n, const char* forcing_class, int length,
                                                   const char* params_json, int threads, int* invalid);

/* ---- Tasks ------------------------------------------------------------- */

typedef struct tb_tasks tb_tasks;

/* Groups episodes by process_ref (first-appearance order) and builds
 * tasks_per_ensemble tasks per group; task t of group g uses
 * tb_derive_seed(tb_derive_seed(seed, "group", g), "task", t). */
TIPBENCH_API tb_status tb_tasks_generate(const tb_episodes* eps, uint64_t seed, int tasks_per_ensemble,
                                         int force_zero_context, int threads, tb_tasks** out);
TIPBENCH_API size_t tb_tasks_size(const tb_tasks* tasks);
TIPBENCH_API tb_status tb_task_id(const tb_tasks* tasks, size_t i, tb_string** out);
TIPBENCH_API tb_status tb_task_to_json(const tb_tasks* tasks, size_t i, tb_string** out);
TIPBENCH_API tb_status tb_task_to_csv(const tb_tasks* tasks, size_t i, tb_string** out);
/* rows, query rows, context episodes used, drawn N_ctx, forecast flag. */
TIPBENCH_API tb_status tb_task_info(const tb_tasks* tasks, size_t i, int* rows, int* query_rows,
                                    int* n_ctx, int* n_ctx_drawn, int* forecast);
TIPBENCH_API void tb_tasks_free(tb_tasks* tasks);

/* ---- Query windows ----------------------------------------------------- */

typedef struct tb_windows tb_windows;

typedef struct tb_window_report {
  int critical_windows;
  int noncritical_windows;
  int skipped_no_tcrit;
  int skipped_too_short;
  int skipped_invalid;
} tb_window_report;

/* Appends windows of length W for each lead time; report may be NULL. */
TIPBENCH_API tb_status tb_windows_new(tb_windows** out);
TIPBENCH_API tb_status tb_windows_build(tb_windows* windows, const tb_episodes* eps, int window_len,
                                        const int* deltas, size_t n_deltas, uint64_t seed,
                                        tb_window_report* report);
TIPBENCH_API size_t tb_windows_size(const tb_windows* windows);
TIPBENCH_API tb_status tb_window_query_id(const tb_windows* windows, size_t i, tb_string** out);
/* time,value CSV with time re-indexed from 0. */
TIPBENCH_API tb_status tb_window_values_csv(const tb_windows* windows, size_t i, tb_string** out);
TIPBENCH_API void tb_windows_free(tb_windows* windows);

/* ---- Scores and reports ----------------------------------------------- */

typedef struct tb_scores tb_scores;

TIPBENCH_API tb_status tb_scores_new(tb_scores** out);
TIPBENCH_API tb_status tb_scores_add_csv(tb_scores* scores, const char* csv);
TIPBENCH_API tb_status tb_scores_to_csv(const tb_scores* scores, tb_string** out);
TIPBENCH_API size_t tb_scores_size(const tb_scores* scores);
/* EWS Kendall-tau scores for every window. indicators: names among var, ar1,
 * acf, skw, lambd (NULL/0 for all). rolling_window <= 0 uses
 * max(8, floor(rolling_factor * W)). */
TIPBENCH_API tb_status tb_scores_add_ews(tb_scores* scores, const tb_windows* windows,
                                         const char* const* indicators, size_t n_indicators,
                                         int rolling_window, double rolling_factor, int threads);
/* Six risk heads per scope from an external prediction CSV. */
TIPBENCH_API tb_status tb_scores_add_predictions(tb_scores* scores, const tb_windows* windows,
                                                 const char* csv, const char* model,
                                                 int exponential_tails);
TIPBENCH_API void tb_scores_free(tb_scores* scores);

typedef struct tb_report tb_report;

TIPBENCH_API tb_status tb_report_build(const tb_scores* scores, int positive_deltas_only, uint64_t seed,
                                       int k, tb_report** out);
/* which: 0 per-cell CSV, 1 long macro CSV, 2 wide macro CSV. */
TIPBENCH_API tb_status tb_report_csv(const tb_report* report, int which, tb_string** out);
TIPBENCH_API void tb_report_free(tb_report* report);
/* fpr,tpr,threshold for one (system, method, delta) cell. */
TIPBENCH_API tb_status tb_roc_csv(const tb_scores* scores, const char* system, const char* method,
                                  int delta, tb_string** out);
/* Distinct (system, method, delta) cells as CSV "system,method,delta". */
TIPBENCH_API tb_status tb_scores_cells_csv(const tb_scores* scores, tb_string** out);

/* ---- Metric primitives ------------------------------------------------- */

TIPBENCH_API tb_status tb_auroc(const double* scores, const uint8_t* labels, size_t n, double* out);
TIPBENCH_API tb_status tb_kendall_tau(const double* x, size_t n, double* out);
TIPBENCH_API tb_status tb_hanley_mcneil_se(double auroc, int64_t n_min_pooled, double* out);
TIPBENCH_API double tb_rdtc_transform(double rdtc);

#ifdef __cplusplus
}
#endif

#endif /* TIPBENCH_H_ */
