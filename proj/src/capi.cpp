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

#include "tipbench.h"

#include <cstring>
#include <exception>
#include <map>
#include <memory>
#include <new>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "tipbench/dynamics.hpp"
#include "tipbench/error.hpp"
#include "tipbench/eval.hpp"
#include "tipbench/ews.hpp"
#include "tipbench/io.hpp"
#include "tipbench/parallel.hpp"
#include "tipbench/prior.hpp"
#include "tipbench/rng.hpp"
#include "tipbench/simulate.hpp"
#include "tipbench/taskgen.hpp"

struct tb_string {
  std::string s;
};

struct tb_process_list {
  std::vector<std::optional<tipbench::GenerativeProcess>> items;
  std::vector<std::string> failures;
};

struct tb_episodes {
  std::vector<tipbench::Episode> items;
};

struct tb_tasks {
  std::vector<std::string> ids;
  std::vector<tipbench::Task> items;
};

struct tb_windows {
  std::vector<tipbench::QueryWindow> items;
};

struct tb_scores {
  tipbench::ScoreTable table;
};

struct tb_report {
  tipbench::Report report;
};

namespace {

using namespace tipbench;

thread_local std::string g_last_error;

tb_status StatusOf(ErrorKind k) {
  switch (k) {
    case ErrorKind::kInvalidArgument:
      return TB_ERR_INVALID_ARGUMENT;
    case ErrorKind::kConfig:
      return TB_ERR_CONFIG;
    case ErrorKind::kData:
      return TB_ERR_DATA;
    case ErrorKind::kNumerical:
      return TB_ERR_NUMERICAL;
    case ErrorKind::kIo:
      return TB_ERR_IO;
  }
  return TB_ERR_INTERNAL;
}

// Runs fn, translating exceptions into status codes.
template <typename Fn>
tb_status Guard(Fn&& fn) {
  try {
    fn();
    return TB_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return StatusOf(e.kind());
  } catch (const nlohmann::json::exception& e) {
    g_last_error = std::string("json: ") + e.what();
    return TB_ERR_DATA;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return TB_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return TB_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown exception";
    return TB_ERR_INTERNAL;
  }
}

void NotNull(const void* p, const char* what) {
  Require(p != nullptr, std::string(what) + " must not be null");
}

void Emit(std::string s, tb_string** out) {
  NotNull(out, "out");
  *out = new tb_string{std::move(s)};
}

template <typename T>
const T& At(const std::vector<T>& v, size_t i, const char* what) {
  Require(i < v.size(), std::string(what) + ": index out of range");
  return v[i];
}

const GenerativeProcess& ProcessAt(const tb_process_list* list, size_t i) {
  NotNull(list, "list");
  const auto& slot = At(list->items, i, "process");
  if (!slot) Fail(ErrorKind::kData, "process slot " + std::to_string(i) + " is empty");
  return *slot;
}

}  // namespace

extern "C" {

const char* tb_version(void) { return TIPBENCH_VERSION; }

const char* tb_last_error(void) { return g_last_error.c_str(); }

const char* tb_status_name(tb_status s) {
  switch (s) {
    case TB_OK:
      return "ok";
    case TB_ERR_INVALID_ARGUMENT:
      return "invalid_argument";
    case TB_ERR_CONFIG:
      return "config";
    case TB_ERR_DATA:
      return "data";
    case TB_ERR_NUMERICAL:
      return "numerical";
    case TB_ERR_IO:
      return "io";
    case TB_ERR_INTERNAL:
      return "internal";
  }
  return "unknown";
}

const char* tb_string_data(const tb_string* s) { return s ? s->s.c_str() : ""; }
size_t tb_string_size(const tb_string* s) { return s ? s->s.size() : 0; }
void tb_string_free(tb_string* s) { delete s; }

uint64_t tb_derive_seed(uint64_t parent, const char* label, uint64_t index) {
  return DeriveSeed(parent, label ? label : "", index);
}

tb_status tb_content_hash(const char* data, size_t size, tb_string** out) {
  return Guard([&] {
    Require(data != nullptr || size == 0, "data must not be null");
    Emit(ContentHash(std::string_view(data ? data : "", size)), out);
  });
}

tb_status tb_catalog_json(tb_string** out) {
  return Guard([&] { Emit(CatalogJson(), out); });
}

tb_status tb_system_params_json(const char* system, tb_string** out) {
  return Guard([&] {
    NotNull(system, "system");
    const SystemParams p = DefaultParams(SystemFromName(system));
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (size_t i = 0; i < p.names.size(); ++i) j[p.names[i]] = p.values[i];
    Emit(j.dump(), out);
  });
}

// ---- Processes -----------------------------------------------------------

tb_status tb_process_sample(uint64_t seed, size_t n, int threads, tb_process_list** out) {
  return Guard([&] {
    NotNull(out, "out");
    auto list = std::make_unique<tb_process_list>();
    list->items.resize(n);
    list->failures.resize(n);
    ParallelFor(n, threads, [&](size_t i) {
      try {
        list->items[i] = SampleProcess(DeriveSeed(seed, "process", i));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kNumerical) throw;
        list->failures[i] = e.what();
      }
    });
    *out = list.release();
  });
}

tb_status tb_process_list_new(tb_process_list** out) {
  return Guard([&] {
    NotNull(out, "out");
    *out = new tb_process_list;
  });
}

tb_status tb_process_list_add_json(tb_process_list* list, const char* json) {
  return Guard([&] {
    NotNull(list, "list");
    NotNull(json, "json");
    list->items.emplace_back(ProcessFromJson(json));
    list->failures.emplace_back();
  });
}

size_t tb_process_list_size(const tb_process_list* list) { return list ? list->items.size() : 0; }

int tb_process_list_ok(const tb_process_list* list, size_t i) {
  return list && i < list->items.size() && list->items[i].has_value() ? 1 : 0;
}

tb_status tb_process_list_failure(const tb_process_list* list, size_t i, tb_string** out) {
  return Guard([&] {
    NotNull(list, "list");
    Emit(At(list->failures, i, "process"), out);
  });
}

tb_status tb_process_to_json(const tb_process_list* list, size_t i, tb_string** out) {
  return Guard([&] { Emit(ProcessToJson(ProcessAt(list, i)), out); });
}

tb_status tb_process_hash(const tb_process_list* list, size_t i, tb_string** out) {
  return Guard([&] { Emit(ProcessHash(ProcessAt(list, i)), out); });
}

tb_status tb_process_summary_json(const tb_process_list* list, size_t i, tb_string** out) {
  return Guard([&] {
    const GenerativeProcess& p = ProcessAt(list, i);
    nlohmann::ordered_json j;
    j["seed"] = p.seed;
    j["hash"] = ProcessHash(p);
    j["target"] = std::string(BifClassName(p.stats.target));
    j["bifurcation"] = std::string(BifClassName(p.driver.bif_class));
    j["models"] = p.stats.models;
    j["scans"] = p.stats.attempts;
    j["screened_ok"] = p.stats.screened_ok;
    Emit(j.dump(), out);
  });
}

void tb_process_list_free(tb_process_list* list) { delete list; }

// ---- Episodes ------------------------------------------------------------

tb_status tb_episodes_new(tb_episodes** out) {
  return Guard([&] {
    NotNull(out, "out");
    *out = new tb_episodes;
  });
}

void tb_episodes_free(tb_episodes* eps) { delete eps; }

size_t tb_episodes_size(const tb_episodes* eps) { return eps ? eps->items.size() : 0; }

tb_status tb_episodes_add_jsonl(tb_episodes* eps, const char* text) {
  return Guard([&] {
    NotNull(eps, "episodes");
    NotNull(text, "text");
    std::vector<Episode> parsed;
    const auto lines = SplitLines(text);
    for (size_t i = 0; i < lines.size(); ++i) {
      try {
        parsed.push_back(EpisodeFromJson(lines[i]));
      } catch (const Error& e) {
        Fail(ErrorKind::kData, "episode line " + std::to_string(i + 1) + ": " + e.what());
      }
    }
    for (auto& e : parsed) eps->items.push_back(std::move(e));
  });
}

tb_status tb_episodes_to_jsonl(const tb_episodes* eps, tb_string** out) {
  return Guard([&] {
    NotNull(eps, "episodes");
    std::string s;
    for (const Episode& e : eps->items) {
      s += EpisodeToJsonl(e);
      s += '\n';
    }
    Emit(std::move(s), out);
  });
}

tb_status tb_episode_info(const tb_episodes* eps, size_t i, int* length, int* tipped, int* t_crit,
                          int* valid) {
  return Guard([&] {
    NotNull(eps, "episodes");
    const Episode& e = At(eps->items, i, "episode");
    if (length) *length = e.length;
    if (tipped) *tipped = e.tipped ? 1 : 0;
    if (t_crit) *t_crit = e.t_crit ? *e.t_crit : -1;
    if (valid) *valid = e.valid ? 1 : 0;
  });
}

tb_status tb_episode_forcing_class(const tb_episodes* eps, size_t i, tb_string** out) {
  return Guard([&] {
    NotNull(eps, "episodes");
    Emit(std::string(ForcingClassName(At(eps->items, i, "episode").forcing_class)), out);
  });
}

tb_status tb_episodes_simulate_prior(tb_episodes* eps, const tb_process_list* list, uint64_t seed,
                                     int k, int length, int threads, int* invalid) {
  return Guard([&] {
    NotNull(eps, "episodes");
    NotNull(list, "list");
    Require(k >= 1, "k must be >= 1");
    Require(length >= 2, "length must be >= 2");
    std::vector<EpisodeEnsemble> ens(list->items.size());
    ParallelFor(ens.size(), threads, [&](size_t i) {
      if (!list->items[i]) return;
      ens[i] = SimulateEnsemble(*list->items[i], CounterRng(DeriveSeed(seed, "ensemble", i)), k, length);
    });
    int bad = 0;
    for (auto& en : ens) {
      bad += en.invalid_count;
      for (auto& e : en.episodes) eps->items.push_back(std::move(e));
    }
    if (invalid) *invalid = bad;
  });
}

tb_status tb_episodes_simulate_system(tb_episodes* eps, const char* system, uint64_t seed, size_t n,
                                      const char* forcing_class, int length, const char* params_json,
                                      int threads, int* invalid) {
  return Guard([&] {
    NotNull(eps, "episodes");
    NotNull(system, "system");
    const SystemId id = SystemFromName(system);
    SystemParams p = DefaultParams(id);
    if (params_json && *params_json) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(params_json);
      } catch (const nlohmann::json::exception& e) {
        Fail(ErrorKind::kConfig, std::string("params: ") + e.what());
      }
      if (!j.is_object()) Fail(ErrorKind::kConfig, "params must be a JSON object");
      for (const auto& [name, value] : j.items()) {
        if (!p.Has(name)) Fail(ErrorKind::kConfig, "unknown parameter '" + name + "' for " + system);
        if (!value.is_number()) Fail(ErrorKind::kConfig, "parameter '" + name + "' must be a number");
        p.Set(name, value.get<double>());
      }
    }
    std::optional<ForcingClass> cls;
    if (forcing_class && *forcing_class) {
      try {
        cls = ForcingClassFromName(forcing_class);
      } catch (const Error& e) {
        Fail(ErrorKind::kConfig, e.what());
      }
    }
    std::optional<int> len;
    if (length > 0) len = length;
    std::vector<Episode> out(n);
    ParallelFor(n, threads, [&](size_t j) {
      out[j] = SimulateValidationEpisode(id, p, DeriveSeed(seed, system, j), cls, len);
    });
    int bad = 0;
    for (auto& e : out) {
      if (!e.valid) ++bad;
      eps->items.push_back(std::move(e));
    }
    if (invalid) *invalid = bad;
  });
}

// ---- Tasks ---------------------------------------------------------------

tb_status tb_tasks_generate(const tb_episodes* eps, uint64_t seed, int tasks_per_ensemble,
                            int force_zero_context, int threads, tb_tasks** out) {
  return Guard([&] {
    NotNull(eps, "episodes");
    NotNull(out, "out");
    Require(tasks_per_ensemble >= 0, "tasks_per_ensemble must be >= 0");
    std::vector<std::string> refs;
    std::map<std::string, std::vector<Episode>> groups;
    for (const Episode& e : eps->items) {
      auto [it, fresh] = groups.try_emplace(e.process_ref);
      if (fresh) refs.push_back(e.process_ref);
      it->second.push_back(e);
    }
    auto tasks = std::make_unique<tb_tasks>();
    const size_t per = static_cast<size_t>(tasks_per_ensemble);
    tasks->items.resize(refs.size() * per);
    tasks->ids.resize(refs.size() * per);
    TaskOptions opt;
    opt.force_zero_context = force_zero_context != 0;
    ParallelFor(tasks->items.size(), threads, [&](size_t idx) {
      const size_t g = idx / per, t = idx % per;
      const uint64_t s = DeriveSeed(DeriveSeed(seed, "group", g), "task", t);
      tasks->items[idx] = MakeTask(groups.at(refs[g]), s, opt);
      tasks->ids[idx] = refs[g] + ":t" + std::to_string(t);
    });
    *out = tasks.release();
  });
}

size_t tb_tasks_size(const tb_tasks* tasks) { return tasks ? tasks->items.size() : 0; }

tb_status tb_task_id(const tb_tasks* tasks, size_t i, tb_string** out) {
  return Guard([&] {
    NotNull(tasks, "tasks");
    Emit(At(tasks->ids, i, "task"), out);
  });
}

tb_status tb_task_to_json(const tb_tasks* tasks, size_t i, tb_string** out) {
  return Guard([&] {
    NotNull(tasks, "tasks");
    Emit(TaskToJson(At(tasks->items, i, "task"), tasks->ids[i]), out);
  });
}

tb_status tb_task_to_csv(const tb_tasks* tasks, size_t i, tb_string** out) {
  return Guard([&] {
    NotNull(tasks, "tasks");
    Emit(TaskToCsv(At(tasks->items, i, "task")), out);
  });
}

tb_status tb_task_info(const tb_tasks* tasks, size_t i, int* rows, int* query_rows, int* n_ctx,
                       int* n_ctx_drawn, int* forecast) {
  return Guard([&] {
    NotNull(tasks, "tasks");
    const Task& t = At(tasks->items, i, "task");
    if (rows) *rows = t.rows();
    if (query_rows) *query_rows = t.query_rows();
    if (n_ctx) *n_ctx = static_cast<int>(t.partition.context.size());
    if (n_ctx_drawn) *n_ctx_drawn = t.partition.n_ctx_drawn;
    if (forecast) *forecast = t.kind == TaskKind::kForecast ? 1 : 0;
  });
}

void tb_tasks_free(tb_tasks* tasks) { delete tasks; }

// ---- Windows -------------------------------------------------------------

tb_status tb_windows_new(tb_windows** out) {
  return Guard([&] {
    NotNull(out, "out");
    *out = new tb_windows;
  });
}

tb_status tb_windows_build(tb_windows* windows, const tb_episodes* eps, int window_len, const int* deltas,
                           size_t n_deltas, uint64_t seed, tb_window_report* report) {
  return Guard([&] {
    NotNull(windows, "windows");
    NotNull(eps, "episodes");
    Require(deltas != nullptr || n_deltas == 0, "deltas must not be null");
    WindowReport rep;
    auto w = BuildQueryWindows(eps->items, window_len, std::span<const int>(deltas, n_deltas), seed, &rep);
    for (auto& x : w) windows->items.push_back(std::move(x));
    if (report) {
      report->critical_windows = rep.critical_windows;
      report->noncritical_windows = rep.noncritical_windows;
      report->skipped_no_tcrit = rep.skipped_no_tcrit;
      report->skipped_too_short = rep.skipped_too_short;
      report->skipped_invalid = rep.skipped_invalid;
    }
  });
}

size_t tb_windows_size(const tb_windows* windows) { return windows ? windows->items.size() : 0; }

tb_status tb_window_query_id(const tb_windows* windows, size_t i, tb_string** out) {
  return Guard([&] {
    NotNull(windows, "windows");
    Emit(At(windows->items, i, "window").query_id, out);
  });
}

tb_status tb_window_values_csv(const tb_windows* windows, size_t i, tb_string** out) {
  return Guard([&] {
    NotNull(windows, "windows");
    Emit(WindowValuesCsv(At(windows->items, i, "window")), out);
  });
}

void tb_windows_free(tb_windows* windows) { delete windows; }

// ---- Scores --------------------------------------------------------------

tb_status tb_scores_new(tb_scores** out) {
  return Guard([&] {
    NotNull(out, "out");
    *out = new tb_scores;
  });
}

tb_status tb_scores_add_csv(tb_scores* scores, const char* csv) {
  return Guard([&] {
    NotNull(scores, "scores");
    NotNull(csv, "csv");
    for (auto& r : ParseScoreTableCsv(csv)) scores->table.push_back(std::move(r));
  });
}

tb_status tb_scores_to_csv(const tb_scores* scores, tb_string** out) {
  return Guard([&] {
    NotNull(scores, "scores");
    Emit(ScoreTableCsv(scores->table), out);
  });
}

size_t tb_scores_size(const tb_scores* scores) { return scores ? scores->table.size() : 0; }

tb_status tb_scores_add_ews(tb_scores* scores, const tb_windows* windows, const char* const* indicators,
                            size_t n_indicators, int rolling_window, double rolling_factor, int threads) {
  return Guard([&] {
    NotNull(scores, "scores");
    NotNull(windows, "windows");
    std::vector<Indicator> inds;
    if (indicators == nullptr || n_indicators == 0) {
      inds.assign(AllIndicators().begin(), AllIndicators().end());
    } else {
      for (size_t i = 0; i < n_indicators; ++i) {
        NotNull(indicators[i], "indicator");
        inds.push_back(IndicatorFromName(indicators[i]));
      }
    }
    Require(rolling_window > 0 || (rolling_factor > 0.0 && rolling_factor <= 1.0),
            "rolling_factor must lie in (0, 1]");
    std::optional<int> rw;
    if (rolling_window > 0) rw = rolling_window;
    const auto& w = windows->items;
    std::vector<ScoreTable> parts(w.size());
    ParallelFor(w.size(), threads, [&](size_t i) {
      parts[i] = ScoreEws(std::span<const QueryWindow>(&w[i], 1), inds, rw, rolling_factor);
    });
    for (auto& part : parts) {
      for (auto& r : part) scores->table.push_back(std::move(r));
    }
  });
}

tb_status tb_scores_add_predictions(tb_scores* scores, const tb_windows* windows, const char* csv,
                                    const char* model, int exponential_tails) {
  return Guard([&] {
    NotNull(scores, "scores");
    NotNull(windows, "windows");
    NotNull(csv, "csv");
    const std::string m = model && *model ? model : "tippfn";
    const auto preds = ParsePredictionsCsv(csv);
    for (auto& r : ScorePredictions(windows->items, preds, m, exponential_tails != 0)) {
      scores->table.push_back(std::move(r));
    }
  });
}

void tb_scores_free(tb_scores* scores) { delete scores; }

tb_status tb_report_build(const tb_scores* scores, int positive_deltas_only, uint64_t seed, int k,
                          tb_report** out) {
  return Guard([&] {
    NotNull(scores, "scores");
    NotNull(out, "out");
    auto r = std::make_unique<tb_report>();
    r->report = MacroAuroc(scores->table, positive_deltas_only != 0, seed, k);
    *out = r.release();
  });
}

tb_status tb_report_csv(const tb_report* report, int which, tb_string** out) {
  return Guard([&] {
    NotNull(report, "report");
    switch (which) {
      case 0:
        Emit(CellsCsv(report->report), out);
        break;
      case 1:
        Emit(MacroLongCsv(report->report), out);
        break;
      case 2:
        Emit(MacroWideCsv(report->report), out);
        break;
      default:
        Fail(ErrorKind::kInvalidArgument, "report kind must be 0, 1 or 2");
    }
  });
}

void tb_report_free(tb_report* report) { delete report; }

tb_status tb_roc_csv(const tb_scores* scores, const char* system, const char* method, int delta,
                     tb_string** out) {
  return Guard([&] {
    NotNull(scores, "scores");
    NotNull(system, "system");
    NotNull(method, "method");
    std::vector<double> s;
    std::vector<uint8_t> l;
    for (const ScoreRecord& r : scores->table) {
      if (r.system == system && r.method == method && r.delta == delta && !std::isnan(r.score)) {
        s.push_back(r.score);
        l.push_back(r.label ? 1 : 0);
      }
    }
    Emit(RocCsv(RocCurve(s, l)), out);
  });
}

tb_status tb_scores_cells_csv(const tb_scores* scores, tb_string** out) {
  return Guard([&] {
    NotNull(scores, "scores");
    std::set<std::tuple<std::string, std::string, int>> cells;
    for (const ScoreRecord& r : scores->table) cells.emplace(r.system, r.method, r.delta);
    std::string s = "system,method,delta\n";
    for (const auto& [sys, m, d] : cells) s += sys + ',' + m + ',' + std::to_string(d) + '\n';
    Emit(std::move(s), out);
  });
}

// ---- Primitives ----------------------------------------------------------

tb_status tb_auroc(const double* scores, const uint8_t* labels, size_t n, double* out) {
  return Guard([&] {
    NotNull(scores, "scores");
    NotNull(labels, "labels");
    NotNull(out, "out");
    *out = Auroc(std::span<const double>(scores, n), std::span<const uint8_t>(labels, n));
  });
}

tb_status tb_kendall_tau(const double* x, size_t n, double* out) {
  return Guard([&] {
    NotNull(x, "x");
    NotNull(out, "out");
    *out = KendallTau(std::span<const double>(x, n));
  });
}

tb_status tb_hanley_mcneil_se(double auroc, int64_t n_min_pooled, double* out) {
  return Guard([&] {
    NotNull(out, "out");
    *out = HanleyMcNeilSe(auroc, n_min_pooled);
  });
}

double tb_rdtc_transform(double rdtc) { return RdtcTransform(rdtc); }

}  // extern "C"
