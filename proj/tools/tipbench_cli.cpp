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

// tipbench command-line front end. Talks to the library only through the C
// API in tipbench.h.
//
// Precedence for every setting: command-line flag, then the subcommand
// section of --config, then the top-level keys of --config, then the
// built-in default.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tipbench.h"

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

struct CliError {
  int code;
  std::string message;
};

int ExitCodeOf(tb_status s) {
  switch (s) {
    case TB_ERR_INVALID_ARGUMENT:
    case TB_ERR_CONFIG:
      return kExitConfig;
    case TB_ERR_DATA:
    case TB_ERR_IO:
      return kExitData;
    case TB_ERR_NUMERICAL:
      return kExitNumerical;
    default:
      return kExitInternal;
  }
}

void Check(tb_status s, const std::string& context) {
  if (s != TB_OK) throw CliError{ExitCodeOf(s), context + ": " + tb_last_error()};
}

// ---- RAII over the C handles -----------------------------------------------

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using StringPtr = std::unique_ptr<tb_string, Deleter<tb_string, tb_string_free>>;
using ProcessesPtr = std::unique_ptr<tb_process_list, Deleter<tb_process_list, tb_process_list_free>>;
using EpisodesPtr = std::unique_ptr<tb_episodes, Deleter<tb_episodes, tb_episodes_free>>;
using TasksPtr = std::unique_ptr<tb_tasks, Deleter<tb_tasks, tb_tasks_free>>;
using WindowsPtr = std::unique_ptr<tb_windows, Deleter<tb_windows, tb_windows_free>>;
using ScoresPtr = std::unique_ptr<tb_scores, Deleter<tb_scores, tb_scores_free>>;
using ReportPtr = std::unique_ptr<tb_report, Deleter<tb_report, tb_report_free>>;

// Calls fn(&out) and returns the string content.
template <typename Fn>
std::string Take(Fn&& fn, const std::string& context) {
  tb_string* raw = nullptr;
  Check(fn(&raw), context);
  StringPtr s(raw);
  return std::string(tb_string_data(s.get()), tb_string_size(s.get()));
}

// ---- Files -----------------------------------------------------------------

std::string ReadText(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError{kExitData, "cannot read '" + path + "'"};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string Hash(const std::string& bytes) {
  return Take([&](tb_string** o) { return tb_content_hash(bytes.data(), bytes.size(), o); }, "hash");
}

// Single writer per file; records the content hash for the manifest.
class OutputDir {
 public:
  explicit OutputDir(std::string root) : root_(std::move(root)) {}

  void Write(const std::string& rel, const std::string& content) {
    const fs::path p = fs::path(root_) / rel;
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
    if (ec) throw CliError{kExitData, "cannot create '" + p.parent_path().string() + "'"};
    const std::string tmp = p.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out.write(content.data(), static_cast<std::streamsize>(content.size()));
      if (!out) throw CliError{kExitData, "cannot write '" + tmp + "'"};
    }
    fs::rename(tmp, p, ec);
    if (ec) throw CliError{kExitData, "cannot rename '" + tmp + "'"};
    hashes_[rel] = Hash(content);
  }

  const std::map<std::string, std::string>& hashes() const { return hashes_; }
  const std::string& root() const { return root_; }

 private:
  std::string root_;
  std::map<std::string, std::string> hashes_;
};

std::string Sanitize(std::string s) {
  for (char& c : s) {
    const bool keep = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    if (!keep) c = '_';
  }
  return s;
}

std::string Pad(size_t i, int width) {
  std::string s = std::to_string(i);
  return std::string(s.size() < static_cast<size_t>(width) ? width - s.size() : 0, '0') + s;
}

// ---- Options and configuration ---------------------------------------------

struct Binding {
  std::string name;
  CLI::Option* option;
  std::function<void(const nlohmann::json&)> apply;
  std::function<Json()> value;
};

class Registry {
 public:
  template <typename T>
  CLI::Option* Add(CLI::App* app, const std::string& name, T& var, const std::string& desc) {
    CLI::Option* o = app->add_option("--" + name, var, desc)->capture_default_str();
    Push(app, name, o, var);
    return o;
  }

  CLI::Option* Flag(CLI::App* app, const std::string& name, bool& var, const std::string& desc) {
    CLI::Option* o = app->add_flag("--" + name, var, desc);
    Push(app, name, o, var);
    return o;
  }

  std::vector<Binding>& For(CLI::App* app) { return bindings_[app]; }

 private:
  template <typename T>
  void Push(CLI::App* app, const std::string& name, CLI::Option* o, T& var) {
    bindings_[app].push_back(Binding{
        name, o,
        [&var, name](const nlohmann::json& j) {
          try {
            var = j.get<T>();
          } catch (const nlohmann::json::exception&) {
            throw CliError{kExitConfig, "config key '" + name + "' has the wrong type"};
          }
        },
        [&var] { return Json(var); }});
  }

  std::map<CLI::App*, std::vector<Binding>> bindings_;
};

// Applies config values to options not given on the command line.
void ApplyConfig(const nlohmann::json& section, std::vector<Binding>& bindings,
                 const std::vector<std::string>& reserved) {
  for (const auto& [key, value] : section.items()) {
    if (std::find(reserved.begin(), reserved.end(), key) != reserved.end()) continue;
    auto it = std::find_if(bindings.begin(), bindings.end(), [&](const Binding& b) { return b.name == key; });
    if (it == bindings.end()) throw CliError{kExitConfig, "unknown config key '" + key + "'"};
    if (it->option->count() == 0) it->apply(value);
  }
}

Json Effective(const std::vector<Binding>& bindings) {
  Json j = Json::object();
  for (const Binding& b : bindings) j[b.name] = b.value();
  return j;
}

struct Globals {
  uint64_t seed = 0;
  int threads = 1;
  std::string out = "tipbench_out";
  std::string format = "jsonl";
  std::string config;
  bool print_config = false;
};

struct Run {
  std::string command;
  Json config;
  Json stats = Json::object();
  Json inputs = Json::object();
  std::string status = "ok";
};

void WriteManifest(OutputDir& out, const Run& run, const Globals& g, const std::vector<std::string>& argv) {
  Json m;
  m["schema"] = "tipbench-manifest/1";
  m["tool"] = "tipbench";
  m["version"] = tb_version();
  m["command"] = run.command;
  m["argv"] = argv;
  m["status"] = run.status;
  m["rng"] = "tb-ctr64/1";
  m["seed"] = g.seed;
  m["config"] = run.config;
  m["inputs"] = run.inputs;
  Json outputs = Json::object();
  for (const auto& [path, hash] : out.hashes()) outputs[path] = hash;
  m["outputs"] = outputs;
  m["stats"] = run.stats;
  out.Write("manifest_" + run.command + ".json", m.dump(2) + "\n");
}

std::vector<std::string> Catalog() {
  const nlohmann::json doc =
      nlohmann::json::parse(Take([](tb_string** o) { return tb_catalog_json(o); }, "catalog"));
  std::vector<std::string> names;
  for (const auto& s : doc.at("systems")) names.push_back(s.at("id").get<std::string>());
  return names;
}

std::vector<std::string> SplitList(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

EpisodesPtr LoadEpisodes(const std::vector<std::string>& files, Run& run) {
  if (files.empty()) throw CliError{kExitConfig, "--episodes is required"};
  tb_episodes* raw = nullptr;
  Check(tb_episodes_new(&raw), "episodes");
  EpisodesPtr eps(raw);
  for (const std::string& f : files) {
    const std::string text = ReadText(f);
    run.inputs[f] = Hash(text);
    Check(tb_episodes_add_jsonl(eps.get(), text.c_str()), f);
  }
  return eps;
}

// ---- sample-prior ------------------------------------------------------------

struct PriorOpts {
  int n = 10;
  double max_failure_rate = 0.5;
};

void CmdSamplePrior(const Globals& g, const PriorOpts& o, OutputDir& out, Run& run) {
  if (o.n < 0) throw CliError{kExitConfig, "--n must be >= 0"};
  tb_process_list* raw = nullptr;
  Check(tb_process_sample(g.seed, static_cast<size_t>(o.n), g.threads, &raw), "sample-prior");
  ProcessesPtr list(raw);
  Json summary = Json::object();
  Json entries = Json::array();
  Json failures = Json::array();
  std::map<std::string, int> classes{{"fold", 0}, {"hopf", 0}, {"transcritical", 0}};
  for (size_t i = 0; i < tb_process_list_size(list.get()); ++i) {
    if (!tb_process_list_ok(list.get(), i)) {
      failures.push_back({{"index", i},
                          {"message", Take([&](tb_string** s) { return tb_process_list_failure(list.get(), i, s); },
                                           "failure")}});
      continue;
    }
    const std::string json = Take([&](tb_string** s) { return tb_process_to_json(list.get(), i, s); }, "process");
    out.Write("processes/psi_" + Pad(i, 6) + ".json", json + "\n");
    Json e = Json::parse(Take([&](tb_string** s) { return tb_process_summary_json(list.get(), i, s); }, "summary"));
    e["index"] = i;
    classes[e["bifurcation"].get<std::string>()]++;
    entries.push_back(e);
  }
  summary["requested"] = o.n;
  summary["sampled"] = entries.size();
  summary["failed"] = failures.size();
  summary["class_counts"] = classes;
  summary["processes"] = entries;
  summary["failures"] = failures;
  out.Write("prior_summary.json", summary.dump(2) + "\n");
  run.stats["sampled"] = entries.size();
  run.stats["failed"] = failures.size();
  run.stats["class_counts"] = classes;
  if (o.n > 0 && static_cast<double>(failures.size()) / o.n > o.max_failure_rate) {
    run.status = "failed";
    throw CliError{kExitNumerical, "retry budget exhausted for " + std::to_string(failures.size()) + " of " +
                                       std::to_string(o.n) + " processes; see prior_summary.json"};
  }
}

// ---- simulate ----------------------------------------------------------------

struct SimOpts {
  std::string processes;
  std::string system;
  int n = 40;
  int k = 6;
  int length = 0;
  std::string forcing_class;
  std::string params;
  double max_invalid_rate = 0.5;
};

std::string EpisodeSummaryCsv(const tb_episodes* eps) {
  std::string s = "index,forcing_class,length,tipped,t_crit,valid\n";
  for (size_t i = 0; i < tb_episodes_size(eps); ++i) {
    int len = 0, tipped = 0, tc = 0, valid = 0;
    Check(tb_episode_info(eps, i, &len, &tipped, &tc, &valid), "episode");
    const std::string cls = Take([&](tb_string** o) { return tb_episode_forcing_class(eps, i, o); }, "episode");
    s += std::to_string(i) + ',' + cls + ',' + std::to_string(len) + ',' + std::to_string(tipped) + ',' +
         (tc >= 0 ? std::to_string(tc) : "NA") + ',' + std::to_string(valid) + '\n';
  }
  return s;
}

Json EpisodeStats(const tb_episodes* eps) {
  std::map<std::string, int> by_class, tipped_by_class;
  for (size_t i = 0; i < tb_episodes_size(eps); ++i) {
    int tipped = 0;
    Check(tb_episode_info(eps, i, nullptr, &tipped, nullptr, nullptr), "episode");
    const std::string cls = Take([&](tb_string** o) { return tb_episode_forcing_class(eps, i, o); }, "episode");
    by_class[cls]++;
    tipped_by_class[cls] += tipped;
  }
  return Json{{"episodes", tb_episodes_size(eps)}, {"by_class", by_class}, {"tipped_by_class", tipped_by_class}};
}

void CheckInvalidRate(int invalid, size_t total, double limit, Run& run) {
  if (total > 0 && static_cast<double>(invalid) / static_cast<double>(total) > limit) {
    run.status = "failed";
    throw CliError{kExitNumerical, "blow-up rate " + std::to_string(invalid) + "/" + std::to_string(total) +
                                       " exceeds --max-invalid-rate"};
  }
}

void CmdSimulate(const Globals& g, const SimOpts& o, OutputDir& out, Run& run) {
  if (o.processes.empty() == o.system.empty()) {
    throw CliError{kExitConfig, "exactly one of --processes and --system is required"};
  }
  const bool csv = g.format == "csv";
  if (!o.processes.empty()) {
    if (o.k < 1) throw CliError{kExitConfig, "--k must be >= 1"};
    tb_process_list* raw = nullptr;
    Check(tb_process_list_new(&raw), "processes");
    ProcessesPtr list(raw);
    std::vector<std::string> files;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(o.processes, ec)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path().string());
    }
    if (ec) throw CliError{kExitData, "cannot list '" + o.processes + "'"};
    std::sort(files.begin(), files.end());
    for (const std::string& f : files) {
      const std::string text = ReadText(f);
      run.inputs[f] = Hash(text);
      Check(tb_process_list_add_json(list.get(), text.c_str()), f);
    }
    tb_episodes* er = nullptr;
    Check(tb_episodes_new(&er), "episodes");
    EpisodesPtr eps(er);
    int invalid = 0;
    const int length = o.length > 0 ? o.length : 400;
    Check(tb_episodes_simulate_prior(eps.get(), list.get(), g.seed, o.k, length, g.threads, &invalid), "simulate");
    out.Write("episodes.jsonl", Take([&](tb_string** s) { return tb_episodes_to_jsonl(eps.get(), s); }, "jsonl"));
    if (csv) out.Write("episodes_summary.csv", EpisodeSummaryCsv(eps.get()));
    run.stats = EpisodeStats(eps.get());
    run.stats["processes"] = files.size();
    run.stats["invalid"] = invalid;
    CheckInvalidRate(invalid, files.size() * static_cast<size_t>(o.k), o.max_invalid_rate, run);
    return;
  }
  if (o.n < 0) throw CliError{kExitConfig, "--n must be >= 0"};
  std::vector<std::string> systems = o.system == "all" ? Catalog() : SplitList(o.system);
  for (const std::string& sys : systems) {
    tb_episodes* er = nullptr;
    Check(tb_episodes_new(&er), "episodes");
    EpisodesPtr eps(er);
    int invalid = 0;
    Check(tb_episodes_simulate_system(eps.get(), sys.c_str(), g.seed, static_cast<size_t>(o.n),
                                      o.forcing_class.empty() ? nullptr : o.forcing_class.c_str(), o.length,
                                      o.params.empty() ? nullptr : o.params.c_str(), g.threads, &invalid),
          "simulate " + sys);
    out.Write("episodes_" + sys + ".jsonl",
              Take([&](tb_string** s) { return tb_episodes_to_jsonl(eps.get(), s); }, "jsonl"));
    if (csv) out.Write("episodes_" + sys + "_summary.csv", EpisodeSummaryCsv(eps.get()));
    Json st = EpisodeStats(eps.get());
    st["invalid"] = invalid;
    run.stats[sys] = st;
    CheckInvalidRate(invalid, static_cast<size_t>(o.n), o.max_invalid_rate, run);
  }
}

// ---- gen-tasks ---------------------------------------------------------------

struct TaskOpts {
  std::vector<std::string> episodes;
  int tasks_per_ensemble = 1;
  bool zero_context = false;
  int shard_size = 1000;
};

void CmdGenTasks(const Globals& g, const TaskOpts& o, OutputDir& out, Run& run) {
  if (o.shard_size < 1) throw CliError{kExitConfig, "--shard-size must be >= 1"};
  EpisodesPtr eps = LoadEpisodes(o.episodes, run);
  tb_tasks* raw = nullptr;
  Check(tb_tasks_generate(eps.get(), g.seed, o.tasks_per_ensemble, o.zero_context ? 1 : 0, g.threads, &raw),
        "gen-tasks");
  TasksPtr tasks(raw);
  const size_t n = tb_tasks_size(tasks.get());
  std::vector<int> drawn(4, 0), used(4, 0);
  int forecast = 0;
  long long rows_total = 0;
  std::string shard;
  size_t shard_index = 0;
  for (size_t i = 0; i < n; ++i) {
    int rows = 0, qrows = 0, nctx = 0, ndrawn = 0, fc = 0;
    Check(tb_task_info(tasks.get(), i, &rows, &qrows, &nctx, &ndrawn, &fc), "task");
    drawn.at(static_cast<size_t>(ndrawn))++;
    used.at(static_cast<size_t>(nctx))++;
    forecast += fc;
    rows_total += rows;
    if (g.format == "csv") {
      const std::string id = Take([&](tb_string** s) { return tb_task_id(tasks.get(), i, s); }, "task");
      out.Write("tasks/" + Sanitize(id) + ".csv",
                Take([&](tb_string** s) { return tb_task_to_csv(tasks.get(), i, s); }, "task"));
    } else {
      shard += Take([&](tb_string** s) { return tb_task_to_json(tasks.get(), i, s); }, "task");
      shard += '\n';
      if ((i + 1) % static_cast<size_t>(o.shard_size) == 0 || i + 1 == n) {
        out.Write("tasks/shard_" + Pad(shard_index++, 4) + ".jsonl", shard);
        shard.clear();
      }
    }
  }
  Json hist = Json::array();
  for (int c : drawn) hist.push_back(n ? static_cast<double>(c) / static_cast<double>(n) : 0.0);
  run.stats["tasks"] = n;
  run.stats["n_ctx_drawn_counts"] = drawn;
  run.stats["n_ctx_drawn_fraction"] = hist;
  run.stats["n_ctx_used_counts"] = used;
  run.stats["forecast_fraction"] = n ? static_cast<double>(forecast) / static_cast<double>(n) : 0.0;
  run.stats["mean_rows"] = n ? static_cast<double>(rows_total) / static_cast<double>(n) : 0.0;
}

// ---- score -------------------------------------------------------------------

struct ScoreOpts {
  std::vector<std::string> episodes;
  std::vector<int> windows{128};
  std::vector<int> deltas{-10, 0, 10, 20};
  std::string ews = "var,ar1,acf,skw,lambd";
  int rolling_window = 0;
  double rolling_factor = 0.5;
  std::string predictions;
  std::string model = "tippfn";
  bool exp_tails = false;
  bool export_windows = false;
};

void CmdScore(const Globals& g, const ScoreOpts& o, OutputDir& out, Run& run) {
  EpisodesPtr eps = LoadEpisodes(o.episodes, run);
  tb_windows* wr = nullptr;
  Check(tb_windows_new(&wr), "windows");
  WindowsPtr windows(wr);
  Json reports = Json::object();
  for (int w : o.windows) {
    tb_window_report rep{};
    Check(tb_windows_build(windows.get(), eps.get(), w, o.deltas.data(), o.deltas.size(), g.seed, &rep),
          "windows W=" + std::to_string(w));
    reports["w" + std::to_string(w)] = {{"critical", rep.critical_windows},
                                        {"noncritical", rep.noncritical_windows},
                                        {"skipped_no_tcrit", rep.skipped_no_tcrit},
                                        {"skipped_too_short", rep.skipped_too_short},
                                        {"skipped_invalid", rep.skipped_invalid}};
  }
  run.stats["windows"] = reports;
  run.stats["noncritical_placement"] = "uniform end position per (episode, delta)";
  if (o.export_windows) {
    std::string index = "query_id,file\n";
    for (size_t i = 0; i < tb_windows_size(windows.get()); ++i) {
      const std::string id = Take([&](tb_string** s) { return tb_window_query_id(windows.get(), i, s); }, "window");
      const std::string file = "windows/" + Sanitize(id) + ".csv";
      out.Write(file, Take([&](tb_string** s) { return tb_window_values_csv(windows.get(), i, s); }, "window"));
      index += id + ',' + file + '\n';
    }
    out.Write("windows/index.csv", index);
  }
  tb_scores* sr = nullptr;
  Check(tb_scores_new(&sr), "scores");
  ScoresPtr scores(sr);
  const std::vector<std::string> inds = o.ews == "none" ? std::vector<std::string>{} : SplitList(o.ews);
  if (!inds.empty()) {
    std::vector<const char*> ptrs;
    for (const auto& s : inds) ptrs.push_back(s.c_str());
    Check(tb_scores_add_ews(scores.get(), windows.get(), ptrs.data(), ptrs.size(), o.rolling_window,
                            o.rolling_factor, g.threads),
          "ews");
  }
  if (!o.predictions.empty()) {
    const std::string text = ReadText(o.predictions);
    run.inputs[o.predictions] = Hash(text);
    Check(tb_scores_add_predictions(scores.get(), windows.get(), text.c_str(), o.model.c_str(), o.exp_tails ? 1 : 0),
          o.predictions);
  }
  if (inds.empty() && o.predictions.empty()) {
    throw CliError{kExitConfig, "nothing to score: give --ews indicators or --predictions"};
  }
  out.Write("scores.csv", Take([&](tb_string** s) { return tb_scores_to_csv(scores.get(), s); }, "scores"));
  run.stats["score_rows"] = tb_scores_size(scores.get());
}

// ---- report ------------------------------------------------------------------

struct ReportOpts {
  std::vector<std::string> scores;
  bool all_deltas = false;
  std::vector<int> deltas;
  int k = 10;
  bool roc = false;
};

// Keeps header plus rows whose delta column is in `keep`.
std::string FilterDeltas(const std::string& csv, const std::vector<int>& keep) {
  std::stringstream in(csv);
  std::string line, outp;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      outp += line + '\n';
      header = false;
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string item;
    while (std::getline(ls, item, ',')) f.push_back(item);
    if (f.size() < 5) throw CliError{kExitData, "malformed score row: " + line};
    int d = 0;
    try {
      d = std::stoi(f[4]);
    } catch (const std::exception&) {
      throw CliError{kExitData, "malformed delta in score row: " + line};
    }
    if (std::find(keep.begin(), keep.end(), d) != keep.end()) outp += line + '\n';
  }
  return outp;
}

void CmdReport(const Globals& g, const ReportOpts& o, OutputDir& out, Run& run) {
  if (o.scores.empty()) throw CliError{kExitConfig, "--scores is required"};
  tb_scores* sr = nullptr;
  Check(tb_scores_new(&sr), "scores");
  ScoresPtr scores(sr);
  for (const std::string& f : o.scores) {
    std::string text = ReadText(f);
    run.inputs[f] = Hash(text);
    if (!o.deltas.empty()) text = FilterDeltas(text, o.deltas);
    Check(tb_scores_add_csv(scores.get(), text.c_str()), f);
  }
  const bool positives_only = !o.all_deltas;
  tb_report* rr = nullptr;
  Check(tb_report_build(scores.get(), positives_only ? 1 : 0, g.seed, o.k, &rr), "report");
  ReportPtr report(rr);
  out.Write("report_cells.csv", Take([&](tb_string** s) { return tb_report_csv(report.get(), 0, s); }, "report"));
  out.Write("report_macro.csv", Take([&](tb_string** s) { return tb_report_csv(report.get(), 1, s); }, "report"));
  out.Write("report_table.csv", Take([&](tb_string** s) { return tb_report_csv(report.get(), 2, s); }, "report"));
  run.stats["positive_deltas_only"] = positives_only;
  run.stats["k"] = o.k;
  if (o.roc) {
    const std::string cells = Take([&](tb_string** s) { return tb_scores_cells_csv(scores.get(), s); }, "cells");
    std::stringstream in(cells);
    std::string line;
    std::getline(in, line);
    int dumped = 0, skipped = 0;
    while (std::getline(in, line)) {
      const size_t a = line.find(','), b = line.rfind(',');
      const std::string sys = line.substr(0, a), method = line.substr(a + 1, b - a - 1);
      const int delta = std::stoi(line.substr(b + 1));
      tb_string* raw = nullptr;
      const tb_status st = tb_roc_csv(scores.get(), sys.c_str(), method.c_str(), delta, &raw);
      if (st == TB_ERR_DATA) {
        ++skipped;  // single-class cell
        continue;
      }
      Check(st, "roc");
      StringPtr s(raw);
      out.Write("roc/" + Sanitize(sys + "__" + method + "__d" + std::to_string(delta)) + ".csv",
                std::string(tb_string_data(s.get()), tb_string_size(s.get())));
      ++dumped;
    }
    run.stats["roc_dumps"] = dumped;
    run.stats["roc_single_class_cells"] = skipped;
  }
}

int Main(int argc, char** argv) {
  CLI::App app{"tipbench: synthetic tipping-point prior, simulation and early-warning evaluation"};
  app.require_subcommand(1);
  Registry reg;
  Globals g;
  reg.Add(&app, "seed", g.seed, "master seed");
  reg.Add(&app, "threads", g.threads, "worker threads (0 = hardware concurrency)");
  reg.Add(&app, "out", g.out, "output directory");
  reg.Add(&app, "format", g.format, "output format for task and episode summaries")
      ->check(CLI::IsMember({"jsonl", "csv"}));
  app.add_option("--config", g.config, "JSON config file; flags override its values");
  app.add_flag("--print-config", g.print_config, "print the effective configuration as JSON and exit");

  PriorOpts po;
  CLI::App* sp = app.add_subcommand("sample-prior", "sample generative processes");
  reg.Add(sp, "n", po.n, "number of processes");
  reg.Add(sp, "max-failure-rate", po.max_failure_rate, "abort when more processes than this fraction fail");

  SimOpts so;
  CLI::App* sim = app.add_subcommand("simulate", "simulate prior ensembles or catalog validation episodes");
  reg.Add(sim, "processes", so.processes, "directory of process JSON files (prior mode)");
  reg.Add(sim, "system", so.system, "catalog systems, comma separated, or 'all'");
  reg.Add(sim, "n", so.n, "episodes per catalog system");
  reg.Add(sim, "k", so.k, "episodes per prior ensemble");
  reg.Add(sim, "length", so.length, "output steps (0 = default)");
  reg.Add(sim, "forcing-class", so.forcing_class, "fixed validation class (default: drawn)");
  reg.Add(sim, "params", so.params, "JSON object overriding catalog parameters");
  reg.Add(sim, "max-invalid-rate", so.max_invalid_rate, "fail when the blow-up rate exceeds this");

  TaskOpts to;
  CLI::App* gt = app.add_subcommand("gen-tasks", "build masked, normalized tasks from prior episodes");
  reg.Add(gt, "episodes", to.episodes, "episode JSONL files");
  reg.Add(gt, "tasks-per-ensemble", to.tasks_per_ensemble, "tasks per process ensemble");
  reg.Flag(gt, "zero-context", to.zero_context, "force empty context");
  reg.Add(gt, "shard-size", to.shard_size, "tasks per JSONL shard");

  ScoreOpts sco;
  CLI::App* sc = app.add_subcommand("score", "score query windows with EWS or external predictions");
  reg.Add(sc, "episodes", sco.episodes, "episode JSONL files");
  reg.Add(sc, "windows", sco.windows, "query window lengths W")->delimiter(',');
  reg.Add(sc, "deltas", sco.deltas, "lead times in steps")->delimiter(',');
  reg.Add(sc, "ews", sco.ews, "EWS indicators, comma separated, or 'none'");
  reg.Add(sc, "rolling-window", sco.rolling_window, "rolling window (0 = max(8, factor * W))");
  reg.Add(sc, "rolling-factor", sco.rolling_factor, "rolling window as a fraction of W");
  reg.Add(sc, "predictions", sco.predictions, "external quantile prediction CSV");
  reg.Add(sc, "model", sco.model, "method prefix for external predictions");
  reg.Flag(sc, "exp-tails", sco.exp_tails, "exponential tails for the 1-mean head");
  reg.Flag(sc, "export-windows", sco.export_windows, "write re-indexed window CSVs");

  ReportOpts ro;
  CLI::App* rp = app.add_subcommand("report", "balanced AUROC report with standard errors");
  reg.Add(rp, "scores", ro.scores, "score table CSV files");
  reg.Flag(rp, "all-deltas", ro.all_deltas, "macro average over all lead times, not only delta > 0");
  reg.Add(rp, "deltas", ro.deltas, "keep only these lead times")->delimiter(',');
  reg.Add(rp, "k", ro.k, "balanced subsamples per cell");
  reg.Flag(rp, "roc", ro.roc, "dump ROC points per cell");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  std::vector<std::string> args(argv, argv + argc);
  try {
    CLI::App* sub = app.get_subcommands().front();
    if (!g.config.empty()) {
      nlohmann::json cfg;
      try {
        cfg = nlohmann::json::parse(ReadText(g.config));
      } catch (const nlohmann::json::exception& e) {
        throw CliError{kExitConfig, "config: " + std::string(e.what())};
      }
      if (!cfg.is_object()) throw CliError{kExitConfig, "config must be a JSON object"};
      const std::vector<std::string> sections = {"sample-prior", "simulate", "gen-tasks", "score", "report"};
      if (cfg.contains(sub->get_name())) {
        if (!cfg[sub->get_name()].is_object()) throw CliError{kExitConfig, "config section must be an object"};
        ApplyConfig(cfg[sub->get_name()], reg.For(sub), {});
      }
      std::vector<Binding> flat = reg.For(&app);
      // Top-level keys may also name subcommand options.
      for (const Binding& b : reg.For(sub)) flat.push_back(b);
      std::vector<std::string> reserved = sections;
      reserved.push_back("config");
      nlohmann::json top = cfg;
      for (const auto& s : sections) top.erase(s);
      // Keys for options of other subcommands are ignored at top level.
      for (CLI::App* other : {sp, sim, gt, sc, rp}) {
        if (other == sub) continue;
        for (const Binding& b : reg.For(other)) {
          const bool ours = std::any_of(flat.begin(), flat.end(), [&](const Binding& x) { return x.name == b.name; });
          if (!ours) top.erase(b.name);
        }
      }
      ApplyConfig(top, flat, reserved);
    }
    Run run;
    run.command = sub->get_name();
    run.config = Effective(reg.For(&app));
    const Json sub_config = Effective(reg.For(sub));
    for (const auto& [k, v] : sub_config.items()) run.config[k] = v;
    if (g.print_config) {
      std::cout << run.config.dump(2) << "\n";
      return kExitOk;
    }
    OutputDir out(g.out);
    int code = kExitOk;
    std::string message;
    try {
      if (sub == sp) {
        CmdSamplePrior(g, po, out, run);
      } else if (sub == sim) {
        CmdSimulate(g, so, out, run);
      } else if (sub == gt) {
        CmdGenTasks(g, to, out, run);
      } else if (sub == sc) {
        CmdScore(g, sco, out, run);
      } else {
        CmdReport(g, ro, out, run);
      }
    } catch (const CliError& e) {
      if (run.status != "failed") throw;  // nothing useful written
      code = e.code;
      message = e.message;
      run.stats["error"] = message;
    }
    WriteManifest(out, run, g, args);
    if (code != kExitOk) {
      std::cerr << "tipbench: " << message << "\n";
      return code;
    }
    return kExitOk;
  } catch (const CliError& e) {
    std::cerr << "tipbench: " << e.message << "\n";
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "tipbench: internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace

int main(int argc, char** argv) { return Main(argc, argv); }
