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

// Exercises the shared library through its C interface only.

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "catch_amalgamated.hpp"
#include "tipbench.h"

namespace {

// Takes ownership of a tb_string and returns its contents.
std::string Take(tb_string* s) {
  REQUIRE(s != nullptr);
  std::string out(tb_string_data(s), tb_string_size(s));
  tb_string_free(s);
  return out;
}

}  // namespace

TEST_CASE("status names and version") {
  CHECK(std::strlen(tb_version()) > 0);
  CHECK(std::string(tb_status_name(TB_OK)) == "ok");
  CHECK(std::string(tb_status_name(TB_ERR_DATA)) != std::string(tb_status_name(TB_ERR_CONFIG)));
}

TEST_CASE("argument errors are reported, not thrown") {
  double v = -1.0;
  CHECK(tb_auroc(nullptr, nullptr, 3, &v) == TB_ERR_INVALID_ARGUMENT);
  CHECK(v == -1.0);
  CHECK(std::strlen(tb_last_error()) > 0);
  tb_string* s = nullptr;
  CHECK(tb_system_params_json("no_such_system", &s) == TB_ERR_CONFIG);
  CHECK(s == nullptr);
  CHECK(tb_hanley_mcneil_se(0.5, 0, &v) != TB_OK);
  const double x[] = {1.0, 1.0};
  const uint8_t l[] = {1, 1};
  CHECK(tb_auroc(x, l, 2, &v) == TB_ERR_DATA);
  tb_scores* scores = nullptr;
  REQUIRE(tb_scores_new(&scores) == TB_OK);
  CHECK(tb_scores_add_csv(scores, "not,a,score,table\n") == TB_ERR_DATA);
  CHECK(tb_scores_size(scores) == 0);
  tb_scores_free(scores);
  // Freeing null handles is a no-op.
  tb_scores_free(nullptr);
  tb_string_free(nullptr);
}

TEST_CASE("metric primitives") {
  const double s[] = {0.1, 0.4, 0.35, 0.8};
  const uint8_t l[] = {0, 0, 1, 1};
  double v = 0.0;
  REQUIRE(tb_auroc(s, l, 4, &v) == TB_OK);
  CHECK(v == Catch::Approx(0.75));
  const double x[] = {1, 2, 3, 4, 5};
  REQUIRE(tb_kendall_tau(x, 5, &v) == TB_OK);
  CHECK(v == Catch::Approx(1.0));
  REQUIRE(tb_hanley_mcneil_se(0.5, 100, &v) == TB_OK);
  CHECK(v == Catch::Approx(0.05));
  CHECK(tb_rdtc_transform(0.0) == 0.0);
  CHECK(tb_rdtc_transform(0.1) == Catch::Approx(std::tanh(0.5)));
  CHECK(tb_derive_seed(1, "a", 0) != tb_derive_seed(1, "b", 0));
  CHECK(tb_derive_seed(1, "a", 0) == tb_derive_seed(1, "a", 0));
  tb_string* h = nullptr;
  REQUIRE(tb_content_hash("abc", 3, &h) == TB_OK);
  const std::string hash = Take(h);
  CHECK(hash.rfind("fnv1a64:", 0) == 0);
  CHECK(hash.size() == 8 + 16);
}

TEST_CASE("catalog") {
  tb_string* s = nullptr;
  REQUIRE(tb_catalog_json(&s) == TB_OK);
  const std::string cat = Take(s);
  CHECK(cat.find("b_harvesting") != std::string::npos);
  CHECK(cat.find("r_compost_bomb") != std::string::npos);
  REQUIRE(tb_system_params_json("b_harvesting", &s) == TB_OK);
  CHECK(Take(s).find("\"sigma_x\"") != std::string::npos);
}

TEST_CASE("episodes, windows, scores and report end to end") {
  tb_episodes* eps = nullptr;
  REQUIRE(tb_episodes_new(&eps) == TB_OK);
  int invalid = -1;
  CHECK(tb_episodes_simulate_system(eps, "b_fold", 5, 4, "critical", 0, nullptr, 1, &invalid) == TB_OK);
  CHECK(tb_episodes_simulate_system(eps, "b_fold", 6, 4, "flat", 0, "{}", 1, &invalid) == TB_OK);
  CHECK(tb_episodes_simulate_system(eps, "b_fold", 6, 1, "sideways", 0, nullptr, 1, &invalid) ==
        TB_ERR_CONFIG);
  CHECK(tb_episodes_simulate_system(eps, "b_fold", 6, 1, nullptr, 0, "{\"nope\": 1}", 1, &invalid) ==
        TB_ERR_CONFIG);
  REQUIRE(tb_episodes_size(eps) == 8);

  int length = 0, tipped = 0, t_crit = 0, valid = 0;
  REQUIRE(tb_episode_info(eps, 0, &length, &tipped, &t_crit, &valid) == TB_OK);
  CHECK(length > 0);
  CHECK(valid == 1);
  CHECK(tb_episode_info(eps, 99, &length, &tipped, &t_crit, &valid) == TB_ERR_INVALID_ARGUMENT);
  tb_string* s = nullptr;
  REQUIRE(tb_episode_forcing_class(eps, 4, &s) == TB_OK);
  CHECK(Take(s) == "flat");

  // JSONL round trip.
  REQUIRE(tb_episodes_to_jsonl(eps, &s) == TB_OK);
  const std::string jsonl = Take(s);
  tb_episodes* copy = nullptr;
  REQUIRE(tb_episodes_new(&copy) == TB_OK);
  REQUIRE(tb_episodes_add_jsonl(copy, jsonl.c_str()) == TB_OK);
  REQUIRE(tb_episodes_to_jsonl(copy, &s) == TB_OK);
  CHECK(Take(s) == jsonl);
  tb_episodes_free(copy);

  tb_windows* w = nullptr;
  REQUIRE(tb_windows_new(&w) == TB_OK);
  const int deltas[] = {0, 10};
  tb_window_report rep{};
  REQUIRE(tb_windows_build(w, eps, 64, deltas, 2, 9, &rep) == TB_OK);
  CHECK(tb_windows_size(w) > 0);
  CHECK(rep.noncritical_windows == 8);
  REQUIRE(tb_window_query_id(w, 0, &s) == TB_OK);
  CHECK(Take(s).rfind("b_fold:", 0) == 0);
  REQUIRE(tb_window_values_csv(w, 0, &s) == TB_OK);
  CHECK(Take(s).rfind("time,value\n0,", 0) == 0);

  tb_scores* scores = nullptr;
  REQUIRE(tb_scores_new(&scores) == TB_OK);
  const char* inds[] = {"var", "ar1"};
  REQUIRE(tb_scores_add_ews(scores, w, inds, 2, 0, 0.5, 1) == TB_OK);
  CHECK(tb_scores_size(scores) == 2 * tb_windows_size(w));
  const char* bad_inds[] = {"kurtosis"};
  CHECK(tb_scores_add_ews(scores, w, bad_inds, 1, 0, 0.5, 1) == TB_ERR_CONFIG);
  CHECK(tb_scores_add_predictions(scores, w, "query_id,scope,position\n", "m", 0) == TB_ERR_DATA);

  REQUIRE(tb_scores_to_csv(scores, &s) == TB_OK);
  const std::string csv = Take(s);
  tb_scores* again = nullptr;
  REQUIRE(tb_scores_new(&again) == TB_OK);
  REQUIRE(tb_scores_add_csv(again, csv.c_str()) == TB_OK);
  CHECK(tb_scores_size(again) == tb_scores_size(scores));
  tb_scores_free(again);

  tb_report* report = nullptr;
  REQUIRE(tb_report_build(scores, 0, 3, 10, &report) == TB_OK);
  for (int which = 0; which < 3; ++which) {
    REQUIRE(tb_report_csv(report, which, &s) == TB_OK);
    CHECK(Take(s).find("b_fold") != std::string::npos);
  }
  CHECK(tb_report_csv(report, 7, &s) == TB_ERR_INVALID_ARGUMENT);
  tb_report_free(report);

  REQUIRE(tb_scores_cells_csv(scores, &s) == TB_OK);
  CHECK(Take(s).rfind("system,method,delta\n", 0) == 0);
  REQUIRE(tb_roc_csv(scores, "b_fold", "dews:w64:var_tau", 0, &s) == TB_OK);
  CHECK(Take(s).rfind("fpr,tpr,threshold\n0,0,inf\n", 0) == 0);

  tb_scores_free(scores);
  tb_windows_free(w);
  tb_episodes_free(eps);
}

TEST_CASE("prior processes through the C interface") {
  tb_process_list* list = nullptr;
  REQUIRE(tb_process_sample(17, 2, 1, &list) == TB_OK);
  REQUIRE(tb_process_list_size(list) == 2);
  REQUIRE(tb_process_list_ok(list, 0) == 1);
  tb_string* s = nullptr;
  REQUIRE(tb_process_to_json(list, 0, &s) == TB_OK);
  const std::string json = Take(s);
  REQUIRE(tb_process_hash(list, 0, &s) == TB_OK);
  const std::string hash = Take(s);
  CHECK(hash.rfind("psi-", 0) == 0);
  REQUIRE(tb_process_summary_json(list, 0, &s) == TB_OK);
  CHECK(Take(s).find("seed") != std::string::npos);

  tb_process_list* parsed = nullptr;
  REQUIRE(tb_process_list_new(&parsed) == TB_OK);
  REQUIRE(tb_process_list_add_json(parsed, json.c_str()) == TB_OK);
  CHECK(tb_process_list_add_json(parsed, "{\"bad\": true}") != TB_OK);
  REQUIRE(tb_process_list_size(parsed) == 1);
  REQUIRE(tb_process_hash(parsed, 0, &s) == TB_OK);
  CHECK(Take(s) == hash);

  tb_episodes* eps = nullptr;
  REQUIRE(tb_episodes_new(&eps) == TB_OK);
  int invalid = -1;
  REQUIRE(tb_episodes_simulate_prior(eps, parsed, 4, 2, 120, 1, &invalid) == TB_OK);
  CHECK(tb_episodes_size(eps) + static_cast<size_t>(invalid) == 2);

  tb_tasks* tasks = nullptr;
  if (tb_episodes_size(eps) > 0) {
    REQUIRE(tb_tasks_generate(eps, 8, 2, 0, 1, &tasks) == TB_OK);
    REQUIRE(tb_tasks_size(tasks) == 2);
    int rows = 0, qrows = 0, n_ctx = 0, drawn = 0, fc = 0;
    REQUIRE(tb_task_info(tasks, 0, &rows, &qrows, &n_ctx, &drawn, &fc) == TB_OK);
    CHECK(rows >= qrows);
    CHECK(qrows > 0);
    REQUIRE(tb_task_to_csv(tasks, 0, &s) == TB_OK);
    CHECK(tb_string_size(s) > 0);
    tb_string_free(s);
    REQUIRE(tb_task_id(tasks, 1, &s) == TB_OK);
    CHECK(tb_string_size(s) > 0);
    tb_string_free(s);
    tb_tasks_free(tasks);
  }
  tb_episodes_free(eps);
  tb_process_list_free(parsed);
  tb_process_list_free(list);
}
