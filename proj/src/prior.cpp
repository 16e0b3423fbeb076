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

#include "tipbench/prior.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "json.hpp"

#include "tipbench/error.hpp"

namespace tipbench {
namespace {

using Json = nlohmann::ordered_json;

constexpr double kScreenDt = 0.01;
constexpr double kScreenTime = 100.0;
constexpr double kScreenRangeTol = 1e-8;
constexpr double kScreenAmplitude = 1e3;
constexpr int kScreenTail = 10;

Coefficients DrawCoefficients(CounterRng& rng) {
  Coefficients c{};
  for (double& v : c) v = rng.Normal();
  // Exactly half of the coefficients are zeroed: partial Fisher-Yates.
  std::array<int, 2 * kNumMonomials> idx{};
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < kNumMonomials; ++i) {
    const int j = i + static_cast<int>(rng.Below(static_cast<uint64_t>(idx.size() - i)));
    std::swap(idx[i], idx[j]);
    c[idx[i]] = 0.0;
  }
  for (int k = 0; k < 2 * kNumMonomials; ++k) {
    if (IsCubicCoefficient(k)) c[k] = -std::fabs(c[k]);
  }
  return c;
}

std::optional<BifClass> ToClass(BifurcationKind kind) {
  switch (kind) {
    case BifurcationKind::kFold:
      return BifClass::kFold;
    case BifurcationKind::kHopf:
      return BifClass::kHopf;
    case BifurcationKind::kRealCrossing:
      return BifClass::kTranscritical;
    case BifurcationKind::kNone:
      return std::nullopt;
  }
  return std::nullopt;
}

Json Matrix(const std::vector<double>& data, int rows, int cols) {
  Json m;
  m["shape"] = {rows, cols};
  m["data"] = data;
  return m;
}

std::vector<double> ReadMatrix(const Json& m, int rows, int cols) {
  const auto shape = m.at("shape").get<std::vector<int>>();
  if (shape.size() != 2 || shape[0] != rows || shape[1] != cols) {
    Fail(ErrorKind::kData, "process json: unexpected matrix shape");
  }
  auto data = m.at("data").get<std::vector<double>>();
  if (data.size() != static_cast<size_t>(rows) * static_cast<size_t>(cols)) {
    Fail(ErrorKind::kData, "process json: matrix data length does not match shape");
  }
  return data;
}

}  // namespace

std::string_view BifClassName(BifClass c) {
  switch (c) {
    case BifClass::kFold:
      return "fold";
    case BifClass::kHopf:
      return "hopf";
    case BifClass::kTranscritical:
      return "transcritical";
  }
  return "fold";
}

BifClass BifClassFromName(std::string_view name) {
  if (name == "fold") return BifClass::kFold;
  if (name == "hopf") return BifClass::kHopf;
  if (name == "transcritical") return BifClass::kTranscritical;
  Fail(ErrorKind::kData, "unknown bifurcation class '" + std::string(name) + "'");
}

void Monomials(double x, double y, double* m) {
  m[0] = 1.0;
  m[1] = x;
  m[2] = y;
  m[3] = x * x;
  m[4] = x * y;
  m[5] = y * y;
  m[6] = x * x * x;
  m[7] = x * x * y;
  m[8] = x * y * y;
  m[9] = y * y * y;
}

void PolynomialDrift(const Coefficients& c, const double* z, int index, double value,
                     double* out) {
  double m[kNumMonomials];
  Monomials(z[0], z[1], m);
  double fx = 0.0, fy = 0.0;
  for (int k = 0; k < kNumMonomials; ++k) {
    const double cx = k == index ? value : c[k];
    const double cy = k + kNumMonomials == index ? value : c[k + kNumMonomials];
    fx += cx * m[k];
    fy += cy * m[k];
  }
  out[0] = fx;
  out[1] = fy;
}

VectorField PolynomialField(const Coefficients& c, int index) {
  VectorField f;
  f.dim = 2;
  f.eval = [c, index](const double* z, double p, double* out) {
    PolynomialDrift(c, z, index, index >= 0 ? p : 0.0, out);
  };
  return f;
}

ScreenResult ScreenDriver(const Coefficients& c, CounterRng& rng) {
  ScreenResult res;
  double z[2] = {2.0 * rng.Normal(), 2.0 * rng.Normal()};
  double tail[kScreenTail][2];
  const int steps = static_cast<int>(std::lround(kScreenTime / kScreenDt));
  bool converged = false;
  double f[2];
  for (int s = 0; s < steps; ++s) {
    PolynomialDrift(c, z, -1, 0.0, f);
    z[0] += kScreenDt * f[0];
    z[1] += kScreenDt * f[1];
    if (!std::isfinite(z[0]) || !std::isfinite(z[1]) ||
        std::max(std::fabs(z[0]), std::fabs(z[1])) >= kScreenAmplitude) {
      res.reason = "amplitude";
      return res;
    }
    tail[s % kScreenTail][0] = z[0];
    tail[s % kScreenTail][1] = z[1];
    if (s + 1 >= kScreenTail) {
      double rx = 0.0, ry = 0.0;
      double lo_x = tail[0][0], hi_x = tail[0][0], lo_y = tail[0][1], hi_y = tail[0][1];
      for (int i = 1; i < kScreenTail; ++i) {
        lo_x = std::min(lo_x, tail[i][0]);
        hi_x = std::max(hi_x, tail[i][0]);
        lo_y = std::min(lo_y, tail[i][1]);
        hi_y = std::max(hi_y, tail[i][1]);
      }
      rx = hi_x - lo_x;
      ry = hi_y - lo_y;
      if (std::hypot(rx, ry) < kScreenRangeTol) {
        converged = true;
        break;
      }
    }
  }
  if (!converged) {
    res.reason = "not converged";
    return res;
  }
  const VectorField field = PolynomialField(c, -1);
  StateVector guess(2);
  guess << z[0], z[1];
  auto eq = NewtonSolve(field, 0.0, guess);
  if (!eq) {
    res.reason = "polish failed";
    return res;
  }
  const LeadingEigen le = Leading(FdJacobian(field, *eq, 0.0));
  if (!(le.re < 0.0)) {
    res.reason = "unstable";
    return res;
  }
  res.accepted = true;
  res.equilibrium = *eq;
  res.recovery = std::fabs(le.re);
  return res;
}

std::optional<ScanHit> ScanBifurcations(const Coefficients& c, const StateVector& equilibrium,
                                        BifClass target) {
  std::optional<ScanHit> best;
  for (int j = 0; j < 2 * kNumMonomials; ++j) {
    const double p0 = c[j];
    if (p0 == 0.0 || std::fabs(p0) >= kScanRange) continue;
    const VectorField field = PolynomialField(c, j);
    for (double end : {kScanRange, -kScanRange}) {
      const int n = std::max(2, static_cast<int>(std::lround(
                                    kScanSteps * std::fabs(end - p0) / (2.0 * kScanRange))));
      BifurcationPoint bp;
      try {
        const EquilibriumBranch br = ContinueBranch(field, p0, end, n, equilibrium);
        if (br.samples.size() < 2) continue;
        bp = DetectBifurcation(field, br);
      } catch (const Error&) {
        continue;
      }
      const auto cls = ToClass(bp.kind);
      if (!cls || *cls != target || bp.degenerate_frequency) continue;
      const double dist = std::fabs(bp.control_crit - p0);
      if (!best || dist < std::fabs(best->p_crit - best->p0)) {
        best = ScanHit{j, p0, bp.control_crit, *cls};
      }
    }
  }
  return best;
}

PolynomialDriver SampleDriver(CounterRng& rng, DriverSamplingStats* stats,
                              std::optional<BifClass> target) {
  DriverSamplingStats local;
  DriverSamplingStats& st = stats ? *stats : local;
  st = {};
  st.target = target ? *target : static_cast<BifClass>(rng.Below(3));
  for (int attempt = 0; attempt < kAttemptsPerSample; ++attempt) {
    Coefficients c{};
    ScreenResult screen;
    for (int m = 0; m < kModelsPerAttempt && !screen.accepted; ++m) {
      c = DrawCoefficients(rng);
      ++st.models;
      screen = ScreenDriver(c, rng);
    }
    if (!screen.accepted) continue;
    ++st.screened_ok;
    ++st.attempts;
    const auto hit = ScanBifurcations(c, screen.equilibrium, st.target);
    if (!hit) continue;
    PolynomialDriver d;
    d.coeffs = c;
    d.equilibrium = screen.equilibrium;
    d.recovery = screen.recovery;
    d.bif_param_index = hit->index;
    d.p0 = hit->p0;
    d.p_crit = hit->p_crit;
    d.bif_class = hit->cls;
    return d;
  }
  Fail(ErrorKind::kNumerical,
       "sample_driver: retry budget exhausted (target " + std::string(BifClassName(st.target)) +
           ", " + std::to_string(st.models) + " models, " + std::to_string(st.screened_ok) +
           " screened, " + std::to_string(st.attempts) + " scans)");
}

std::array<double, 8> DegreePmf() {
  std::array<double, 8> pmf{};
  double z = 0.0;
  for (int d = 1; d <= 8; ++d) z += 1.0 / (d * d);
  for (int d = 1; d <= 8; ++d) pmf[d - 1] = 1.0 / (d * d) / z;
  return pmf;
}

std::vector<int> InteractionGraph::Parents(int j) const {
  std::vector<int> out;
  for (const auto& [a, b] : edges) {
    if (b == j) out.push_back(a);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> InteractionGraph::DriverInputs(int j) const {
  std::vector<int> out;
  for (const auto& [ch, v] : driver_edges) {
    if (v == j) out.push_back(ch);
  }
  std::sort(out.begin(), out.end());
  return out;
}

InteractionGraph ProjectBipartite(int n_vars, int n_hidden,
                                  std::vector<std::pair<int, int>> var_to_hidden,
                                  std::vector<std::pair<int, int>> hidden_to_var) {
  InteractionGraph g;
  g.n_vars = n_vars;
  g.n_hidden = n_hidden;
  std::vector<std::vector<char>> in_h(n_hidden, std::vector<char>(n_vars, 0));
  std::vector<std::vector<char>> out_h(n_hidden, std::vector<char>(n_vars, 0));
  for (const auto& [i, h] : var_to_hidden) {
    Require(i >= 0 && i < n_vars && h >= 0 && h < n_hidden, "graph: edge index out of range");
    in_h[h][i] = 1;
  }
  for (const auto& [h, j] : hidden_to_var) {
    Require(j >= 0 && j < n_vars && h >= 0 && h < n_hidden, "graph: edge index out of range");
    out_h[h][j] = 1;
  }
  for (int i = 0; i < n_vars; ++i) {
    for (int j = 0; j < n_vars; ++j) {
      for (int h = 0; h < n_hidden; ++h) {
        if (in_h[h][i] && out_h[h][j]) {
          g.edges.emplace_back(i, j);
          break;
        }
      }
    }
  }
  g.var_to_hidden = std::move(var_to_hidden);
  g.hidden_to_var = std::move(hidden_to_var);
  return g;
}

InteractionGraph SampleGraph(CounterRng& rng, int n_vars, int n_hidden, double p_input) {
  const auto pmf = DegreePmf();
  std::vector<int> d_out(n_vars), d_in(n_vars);
  for (int i = 0; i < n_vars; ++i) {
    d_out[i] = 1 + static_cast<int>(rng.Categorical(pmf));
    d_in[i] = 1 + static_cast<int>(rng.Categorical(pmf));
  }
  std::vector<std::pair<int, int>> v2h, h2v;
  for (int i = 0; i < n_vars; ++i) {
    for (int h = 0; h < n_hidden; ++h) {
      if (rng.Bernoulli(d_out[i] / 8.0)) v2h.emplace_back(i, h);
    }
  }
  for (int i = 0; i < n_vars; ++i) {
    for (int h = 0; h < n_hidden; ++h) {
      if (rng.Bernoulli(d_in[i] / 8.0)) h2v.emplace_back(h, i);
    }
  }
  InteractionGraph g = ProjectBipartite(n_vars, n_hidden, std::move(v2h), std::move(h2v));
  g.d_out = std::move(d_out);
  g.d_in = std::move(d_in);
  for (int ch = 0; ch < 2; ++ch) {
    for (int v = 0; v < n_vars; ++v) {
      if (rng.Bernoulli(p_input)) g.driver_edges.emplace_back(ch, v);
    }
  }
  return g;
}

double FlowMlp::Eval(const double* in) const {
  double out = b2;
  for (int h = 0; h < kHiddenUnits; ++h) {
    double a = b1[h];
    const double* row = w1.data() + static_cast<size_t>(h) * in_dim;
    for (int k = 0; k < in_dim; ++k) a += row[k] * in[k];
    out += w2[h] * std::tanh(a);
  }
  return out;
}

AuxiliarySde SampleAuxSde(CounterRng& rng, const InteractionGraph& graph) {
  AuxiliarySde sde;
  for (int i = 0; i < graph.n_vars; ++i) {
    AuxVariable v;
    v.parents = graph.Parents(i);
    v.drivers = graph.DriverInputs(i);
    int draws = 0;
    do {
      if (++draws > kResampleCap) Fail(ErrorKind::kNumerical, "sample_aux_sde: s_w resampling cap hit");
      v.s_w = 1.0 + rng.HalfCauchy(1.0);
    } while (v.s_w > 1.5);
    draws = 0;
    do {
      if (++draws > kResampleCap) Fail(ErrorKind::kNumerical, "sample_aux_sde: s_p resampling cap hit");
      v.s_p = 0.5 - rng.HalfCauchy(0.5);
    } while (v.s_p < 0.1);
    FlowMlp& f = v.flow;
    f.in_dim = static_cast<int>(v.parents.size() + v.drivers.size());
    f.w1.resize(static_cast<size_t>(kHiddenUnits) * f.in_dim);
    f.b1.resize(kHiddenUnits);
    f.w2.resize(kHiddenUnits);
    for (double& w : f.w1) w = v.s_w * rng.Normal();
    for (double& w : f.b1) w = v.s_w * rng.Normal();
    for (double& w : f.w2) w = v.s_w * rng.Normal();
    f.b2 = v.s_w * rng.Normal();
    v.gamma = 20.0 * std::fabs(rng.Normal());
    v.eta = 0.5 * std::fabs(rng.Normal());
    v.sigma = 0.05 * std::fabs(rng.Normal());
    sde.vars.push_back(std::move(v));
  }
  return sde;
}

GenerativeProcess SampleProcess(uint64_t seed) {
  GenerativeProcess psi;
  psi.seed = seed;
  CounterRng driver_rng(DeriveSeed(seed, "driver"));
  CounterRng graph_rng(DeriveSeed(seed, "graph"));
  CounterRng aux_rng(DeriveSeed(seed, "aux"));
  psi.driver = SampleDriver(driver_rng, &psi.stats);
  psi.graph = SampleGraph(graph_rng);
  psi.aux = SampleAuxSde(aux_rng, psi.graph);
  return psi;
}

std::string ProcessToJson(const GenerativeProcess& psi) {
  Json doc;
  doc["schema"] = "tipbench-process/1";
  doc["rng"] = std::string(CounterRng::kName) + "/" + std::to_string(CounterRng::kVersion);
  doc["seed"] = psi.seed;
  doc["sub_seeds"] = {{"driver", DeriveSeed(psi.seed, "driver")},
                      {"graph", DeriveSeed(psi.seed, "graph")},
                      {"aux", DeriveSeed(psi.seed, "aux")}};
  doc["hyperparameters"] = {
      {"monomials", "1,x,y,x^2,xy,y^2,x^3,x^2y,xy^2,y^3"},
      {"zero_fraction", 0.5},
      {"screen_dt", kScreenDt},
      {"screen_time", kScreenTime},
      {"screen_range_tol", kScreenRangeTol},
      {"screen_amplitude", kScreenAmplitude},
      {"scan_range", kScanRange},
      {"scan_steps", kScanSteps},
      {"models_per_attempt", kModelsPerAttempt},
      {"attempts_per_sample", kAttemptsPerSample},
      {"n_vars", psi.graph.n_vars},
      {"n_hidden", psi.graph.n_hidden},
      {"p_input", 0.8},
      {"hidden_units", kHiddenUnits},
      {"activation", "tanh"},
      {"gamma_scale", 20.0},
      {"eta_scale", 0.5},
      {"sigma_scale", 0.05},
  };
  const PolynomialDriver& d = psi.driver;
  Json drv;
  drv["coeffs_x"] = std::vector<double>(d.coeffs.begin(), d.coeffs.begin() + kNumMonomials);
  drv["coeffs_y"] = std::vector<double>(d.coeffs.begin() + kNumMonomials, d.coeffs.end());
  drv["equilibrium"] = std::vector<double>(d.equilibrium.data(),
                                           d.equilibrium.data() + d.equilibrium.size());
  drv["recovery"] = d.recovery;
  drv["bif_param_index"] = d.bif_param_index;
  drv["p0"] = d.p0;
  drv["p_crit"] = d.p_crit;
  drv["bif_class"] = std::string(BifClassName(d.bif_class));
  doc["driver"] = drv;
  doc["sampling_stats"] = {{"target", std::string(BifClassName(psi.stats.target))},
                           {"models", psi.stats.models},
                           {"screened_ok", psi.stats.screened_ok},
                           {"scans", psi.stats.attempts}};
  const InteractionGraph& g = psi.graph;
  Json gj;
  gj["n_vars"] = g.n_vars;
  gj["n_hidden"] = g.n_hidden;
  gj["d_out"] = g.d_out;
  gj["d_in"] = g.d_in;
  gj["var_to_hidden"] = g.var_to_hidden;
  gj["hidden_to_var"] = g.hidden_to_var;
  gj["edges"] = g.edges;
  gj["driver_edges"] = g.driver_edges;
  doc["graph"] = gj;
  Json aux = Json::array();
  for (const AuxVariable& v : psi.aux.vars) {
    Json a;
    a["parents"] = v.parents;
    a["drivers"] = v.drivers;
    a["w1"] = Matrix(v.flow.w1, kHiddenUnits, v.flow.in_dim);
    a["b1"] = Matrix(v.flow.b1, kHiddenUnits, 1);
    a["w2"] = Matrix(v.flow.w2, 1, kHiddenUnits);
    a["b2"] = v.flow.b2;
    a["s_w"] = v.s_w;
    a["s_p"] = v.s_p;
    a["gamma"] = v.gamma;
    a["eta"] = v.eta;
    a["sigma"] = v.sigma;
    aux.push_back(a);
  }
  doc["aux"] = aux;
  return doc.dump();
}

GenerativeProcess ProcessFromJson(std::string_view text) {
  GenerativeProcess psi;
  try {
    const Json doc = Json::parse(text);
    if (doc.at("schema") != "tipbench-process/1") {
      Fail(ErrorKind::kData, "process json: unsupported schema");
    }
    psi.seed = doc.at("seed").get<uint64_t>();
    const Json& drv = doc.at("driver");
    const auto cx = drv.at("coeffs_x").get<std::vector<double>>();
    const auto cy = drv.at("coeffs_y").get<std::vector<double>>();
    if (cx.size() != kNumMonomials || cy.size() != kNumMonomials) {
      Fail(ErrorKind::kData, "process json: driver needs 10 coefficients per equation");
    }
    std::copy(cx.begin(), cx.end(), psi.driver.coeffs.begin());
    std::copy(cy.begin(), cy.end(), psi.driver.coeffs.begin() + kNumMonomials);
    const auto eq = drv.at("equilibrium").get<std::vector<double>>();
    if (eq.size() != 2) Fail(ErrorKind::kData, "process json: equilibrium must have 2 components");
    psi.driver.equilibrium = StateVector(2);
    psi.driver.equilibrium << eq[0], eq[1];
    psi.driver.recovery = drv.at("recovery").get<double>();
    psi.driver.bif_param_index = drv.at("bif_param_index").get<int>();
    psi.driver.p0 = drv.at("p0").get<double>();
    psi.driver.p_crit = drv.at("p_crit").get<double>();
    psi.driver.bif_class = BifClassFromName(drv.at("bif_class").get<std::string>());
    if (psi.driver.bif_param_index < 0 || psi.driver.bif_param_index >= 2 * kNumMonomials) {
      Fail(ErrorKind::kData, "process json: bif_param_index out of range");
    }
    const Json& st = doc.at("sampling_stats");
    psi.stats.target = BifClassFromName(st.at("target").get<std::string>());
    psi.stats.models = st.at("models").get<int>();
    psi.stats.screened_ok = st.at("screened_ok").get<int>();
    psi.stats.attempts = st.at("scans").get<int>();
    const Json& gj = doc.at("graph");
    psi.graph.n_vars = gj.at("n_vars").get<int>();
    psi.graph.n_hidden = gj.at("n_hidden").get<int>();
    psi.graph.d_out = gj.at("d_out").get<std::vector<int>>();
    psi.graph.d_in = gj.at("d_in").get<std::vector<int>>();
    psi.graph.var_to_hidden = gj.at("var_to_hidden").get<std::vector<std::pair<int, int>>>();
    psi.graph.hidden_to_var = gj.at("hidden_to_var").get<std::vector<std::pair<int, int>>>();
    psi.graph.edges = gj.at("edges").get<std::vector<std::pair<int, int>>>();
    psi.graph.driver_edges = gj.at("driver_edges").get<std::vector<std::pair<int, int>>>();
    const Json& aux = doc.at("aux");
    if (!aux.is_array() || static_cast<int>(aux.size()) != psi.graph.n_vars) {
      Fail(ErrorKind::kData, "process json: aux must list one entry per variable");
    }
    for (const Json& a : aux) {
      AuxVariable v;
      v.parents = a.at("parents").get<std::vector<int>>();
      v.drivers = a.at("drivers").get<std::vector<int>>();
      for (int p : v.parents) {
        if (p < 0 || p >= psi.graph.n_vars) Fail(ErrorKind::kData, "process json: parent out of range");
      }
      for (int ch : v.drivers) {
        if (ch < 0 || ch > 1) Fail(ErrorKind::kData, "process json: driver channel out of range");
      }
      v.flow.in_dim = static_cast<int>(v.parents.size() + v.drivers.size());
      v.flow.w1 = ReadMatrix(a.at("w1"), kHiddenUnits, v.flow.in_dim);
      v.flow.b1 = ReadMatrix(a.at("b1"), kHiddenUnits, 1);
      v.flow.w2 = ReadMatrix(a.at("w2"), 1, kHiddenUnits);
      v.flow.b2 = a.at("b2").get<double>();
      v.s_w = a.at("s_w").get<double>();
      v.s_p = a.at("s_p").get<double>();
      v.gamma = a.at("gamma").get<double>();
      v.eta = a.at("eta").get<double>();
      v.sigma = a.at("sigma").get<double>();
      psi.aux.vars.push_back(std::move(v));
    }
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kData, std::string("process json: ") + e.what());
  }
  return psi;
}

std::string ProcessHash(const GenerativeProcess& psi) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "psi-%016llx",
                static_cast<unsigned long long>(Fnv1a64(ProcessToJson(psi))));
  return buf;
}

}  // namespace tipbench
