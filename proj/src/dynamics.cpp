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

#include "tipbench/dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "json.hpp"

#include "tipbench/amoc_constants.hpp"
#include "tipbench/error.hpp"

namespace tipbench {
namespace {

using ParamTable = std::vector<std::pair<std::string, double>>;

// Parameter order per system. Drift code indexes these positions.
ParamTable AmocTable(bool rate) {
  ParamTable t = {
      {"V_N", amoc::kVN},          {"V_T", amoc::kVT},
      {"V_S", amoc::kVS},          {"V_IP", amoc::kVIP},
      {"V_B", amoc::kVB},          {"F_N", amoc::kFN},
      {"F_T", amoc::kFT},          {"A_N", amoc::kAN},
      {"A_T", amoc::kAT},          {"S_S", amoc::kSS},
      {"S_B", amoc::kSB},          {"S_IP0", amoc::kSIP0},
      {"S_N0", amoc::kSN0},        {"S_T0", amoc::kST0},
      {"lambda", amoc::kLambda},   {"alpha", amoc::kAlpha},
      {"beta", amoc::kBeta},       {"S_0", amoc::kS0},
      {"K_N", amoc::kKN},          {"K_S", amoc::kKS},
      {"gamma", amoc::kGamma},     {"T_S", amoc::kTS},
      {"T_0", amoc::kT0},          {"mu", amoc::kMu},
      {"sigma_N", 1.0},            {"sigma_T", 1.0},
      {"hosing_scale", amoc::kHosingScale},
  };
  if (rate) {
    t.insert(t.end(), {{"H0", 0.0}, {"dH", 0.38}, {"r", 0.017}, {"r_flat", 0.005}});
  }
  return t;
}

enum AmocIdx {
  kVN = 0, kVT, kVS, kVIP, kVB, kFN, kFT, kAN, kAT, kSS, kSB, kSIP0, kSN0, kST0,
  kLam, kAlpha, kBeta, kS0, kKN, kKS, kGam, kTS, kT0, kMuA, kSigN, kSigT, kHosing,
  kH0, kDH, kRate, kRateFlat,
};

constexpr double kSv = 1.0e6;                 // m^3 s^-1
constexpr double kSecondsPerYear = 3.15576e7;  // Julian year

ParamTable TableFor(SystemId id) {
  switch (id) {
    case SystemId::kBFold:
      return {{"sigma_x", 0.05}};
    case SystemId::kBHopf:
      return {{"omega", 1.0}, {"sigma_x", 0.05}, {"sigma_y", 0.05}};
    case SystemId::kBTranscritical:
      return {{"sigma_x", 0.05}};
    case SystemId::kBHarvesting:
      return {{"r", 1.0}, {"k", 1.0}, {"s", 0.1}, {"sigma_x", 0.01}};
    case SystemId::kBRmTc:
    case SystemId::kBRmHopf:
      return {{"r", 4.0}, {"k", 1.7}, {"e", 0.5}, {"h", 0.15}, {"m", 2.0},
              {"sigma_x", 0.01}, {"sigma_y", 0.01}};
    case SystemId::kBSeirx:
      return {{"N", 100000.0}, {"mu", 0.02 / 52.0}, {"beta", 10.5}, {"epsilon", 0.7},
              {"gamma", 0.7},  {"kappa", 0.007},    {"delta", 50.0}, {"sigma_S", 5.0},
              {"sigma_E", 5.0}, {"sigma_I", 5.0},   {"sigma_x", 5e-4}};
    case SystemId::kBAmoc:
      return AmocTable(false);
    case SystemId::kRSaddleNode:
      return {{"lambda_max", 3.0}, {"epsilon", 1.25}, {"epsilon_flat", 0.625},
              {"sigma_x", 0.008}};
    case SystemId::kRBautin:
      return {{"a", 0.1}, {"omega", 3.0}, {"b", 1.0}, {"sigma_z", 0.2},
              {"lambda_max", 8.0}, {"r", 0.10}, {"r_flat", 0.05}};
    case SystemId::kRCompostBomb:
      return {{"mu", 2.5e6},  {"lambda", 5.049e6},         {"A", 3.9e7},
              {"Pi", 1.055},  {"r0", 0.01},                {"alpha", std::log(2.5) / 10.0},
              {"D3", 50.0},   {"T_ref", 0.0},              {"v", 0.2},
              {"v_flat", 0.03}, {"dT_max", 15.0}};
    case SystemId::kRAmoc:
      return AmocTable(true);
  }
  Fail(ErrorKind::kInvalidArgument, "unknown system id");
}

StateVector Vec(std::initializer_list<double> v) {
  StateVector s(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) s[i++] = d;
  return s;
}

std::vector<SystemInfo> BuildInfos() {
  std::vector<SystemInfo> out;
  auto add = [&](SystemInfo info) { out.push_back(std::move(info)); };
  const double kHarvestCrit = 0.26043651706511;
  const double kRmTcCrit = 2.0 / (1.7 * (0.5 - 2.0 * 0.15));
  const double kRmHopfCrit = 15.686274509803921;

  add({SystemId::kBFold, "b_fold", TippingKind::kBifurcation, 1, {"x"}, "mu", 1.0, 0.0,
       "x < -1", "x", "x >= -5", 0.01, 1.0, 400, Vec({1.0}), RateForcing::kNone, "", ""});
  add({SystemId::kBHopf, "b_hopf", TippingKind::kBifurcation, 2, {"x", "y"}, "mu", -1.0, 0.0,
       "sqrt(x^2+y^2) >= 0.5", "x", "none", 0.01, 1.0, 400, Vec({0.1, 0.1}),
       RateForcing::kNone, "", ""});
  add({SystemId::kBTranscritical, "b_transcritical", TippingKind::kBifurcation, 1, {"x"}, "mu",
       -1.0, 0.0, "x <= -0.5", "x", "x >= -5", 0.01, 1.0, 400, Vec({0.01}),
       RateForcing::kNone, "", ""});
  add({SystemId::kBHarvesting, "b_harvesting", TippingKind::kBifurcation, 1, {"x"}, "h", 0.15,
       kHarvestCrit, "x < 0.1 k", "x", "x >= 0", 0.01, 1.0, 400, Vec({0.9}),
       RateForcing::kNone, "", ""});
  add({SystemId::kBRmTc, "b_rm_tc", TippingKind::kBifurcation, 2, {"x", "y"}, "a", 3.0,
       kRmTcCrit, "y > 0.1", "y", "x >= 0, y >= 0", 0.01, 1.0, 400, Vec({1.7, 0.0}),
       RateForcing::kNone, "", ""});
  add({SystemId::kBRmHopf, "b_rm_hopf", TippingKind::kBifurcation, 2, {"x", "y"}, "a", 12.0,
       kRmHopfCrit,
       "|x - pre mean| > 3 pre std for >= 20 consecutive samples (pre = first 10%, >= 10 samples)",
       "x", "x >= 0, y >= 0", 0.01, 1.0, 400, Vec({0.8, 2.0}), RateForcing::kNone, "", ""});
  add({SystemId::kBSeirx, "b_seirx", TippingKind::kBifurcation, 4, {"S", "E", "I", "x"},
       "omega", 0.0, 50.0, "x < 0.5", "x", "S, E, I >= 0; 0 <= x <= 1", 0.01, 1.0, 400,
       Vec({0.0, 0.0, 0.0, 1.0}), RateForcing::kNone, "", ""});
  add({SystemId::kBAmoc, "b_amoc", TippingKind::kBifurcation, 2, {"S_N", "S_T"}, "H", 0.0,
       amoc::kFoldH, "Q < 0.2 Q(0)", "Q", "none", 0.1, 1.0, 1000,
       Vec({amoc::kSN0, amoc::kST0}), RateForcing::kNone, "", ""});
  add({SystemId::kRSaddleNode, "r_saddle_node", TippingKind::kRate, 1, {"x"}, "lambda", 0.0,
       std::nullopt, "x >= 0", "x", "x <= 10", 0.01, 0.1, 400, Vec({-1.0}),
       RateForcing::kSaddleTanh, "epsilon", "epsilon_flat"});
  add({SystemId::kRBautin, "r_bautin", TippingKind::kRate, 2, {"x", "y"}, "Lambda", 0.0,
       std::nullopt, "sqrt(x^2+y^2) >= 10", "rho", "|z - Lambda| <= 20", 0.01, 0.1, 400,
       Vec({0.0, 0.0}), RateForcing::kBautinTanh, "r", "r_flat"});
  add({SystemId::kRCompostBomb, "r_compost_bomb", TippingKind::kRate, 2, {"T_s", "C_s"}, "T_a",
       0.0, std::nullopt, "T_s > 30", "T_s", "T_s <= 100, C_s >= 0", 0.01, 1.0, 400,
       Vec({8.0, 100.0}), RateForcing::kCompostRamp, "v", "v_flat"});
  add({SystemId::kRAmoc, "r_amoc", TippingKind::kRate, 2, {"S_N", "S_T"}, "H", 0.0,
       std::nullopt, "Q < 0.2 Q(0)", "Q", "none", 0.1, 1.0, 1000,
       Vec({amoc::kSN0, amoc::kST0}), RateForcing::kAmocSech, "r", "r_flat"});
  return out;
}

const std::vector<SystemInfo>& Infos() {
  static const std::vector<SystemInfo> infos = BuildInfos();
  return infos;
}

void CheckFinite(const double* x, int n, double control) {
  for (int i = 0; i < n; ++i) {
    if (!std::isfinite(x[i])) Fail(ErrorKind::kNumerical, "drift: non-finite state");
  }
  if (!std::isfinite(control)) Fail(ErrorKind::kNumerical, "drift: non-finite control");
}

double AmocQ(const double* p, double s_n) {
  return p[kLam] * (p[kAlpha] * (p[kTS] - p[kT0]) + p[kBeta] * (s_n - p[kSS])) /
         (1.0 + p[kLam] * p[kAlpha] * p[kMuA]);
}

void AmocDrift(const double* p, const double* x, double hosing, int branch, double* out) {
  const double s_n = x[0];
  const double s_t = x[1];
  const double q = AmocQ(p, s_n);
  const double total = p[kVN] * p[kSN0] + p[kVT] * p[kST0] + p[kVS] * p[kSS] +
                       p[kVIP] * p[kSIP0] + p[kVB] * p[kSB];
  const double s_ip = (total - p[kVN] * s_n - p[kVT] * s_t - p[kVS] * p[kSS] -
                       p[kVB] * p[kSB]) / p[kVIP];
  const double f_n = (p[kFN] + p[kHosing] * p[kAN] * hosing) * kSv;
  const double f_t = (p[kFT] + p[kHosing] * p[kAT] * hosing) * kSv;
  const double k_n = p[kKN] * kSv;
  const double k_s = p[kKS] * kSv;
  const double g = p[kGam];
  const bool positive = branch > 0 || (branch == 0 && q >= 0.0);
  double d_n;
  double d_t;
  if (positive) {
    d_n = q * (s_t - s_n) + k_n * (s_t - s_n) - f_n * p[kS0];
    d_t = q * (g * p[kSS] + (1.0 - g) * s_ip - s_t) + k_s * (p[kSS] - s_t) +
          k_n * (s_n - s_t) - f_t * p[kS0];
  } else {
    const double aq = std::fabs(q);
    d_n = aq * (p[kSB] - s_n) + k_n * (s_t - s_n) - f_n * p[kS0];
    d_t = aq * (s_n - s_t) + k_s * (p[kSS] - s_t) + k_n * (s_n - s_t) - f_t * p[kS0];
  }
  out[0] = d_n / p[kVN] * kSecondsPerYear;
  out[1] = d_t / p[kVT] * kSecondsPerYear;
}

// Radius of the stable small cycle of r' = a r - b r^3 + r^5.
double BautinCycleRadius(double a, double b) {
  const double disc = b * b - 4.0 * a;
  if (disc < 0.0) return 0.0;
  return std::sqrt((b - std::sqrt(disc)) / 2.0);
}

}  // namespace

std::string_view SystemName(SystemId id) { return GetSystemInfo(id).name; }

SystemId SystemFromName(std::string_view name) {
  for (const auto& info : Infos()) {
    if (info.name == name) return info.id;
  }
  Fail(ErrorKind::kConfig, "unknown system '" + std::string(name) + "'");
}

std::span<const SystemId> AllSystems() {
  static const std::array<SystemId, kNumSystems> all = {
      SystemId::kBFold,       SystemId::kBHopf,     SystemId::kBTranscritical,
      SystemId::kBHarvesting, SystemId::kBRmTc,     SystemId::kBRmHopf,
      SystemId::kBSeirx,      SystemId::kBAmoc,     SystemId::kRSaddleNode,
      SystemId::kRBautin,     SystemId::kRCompostBomb, SystemId::kRAmoc};
  return all;
}

const SystemInfo& GetSystemInfo(SystemId id) {
  return Infos().at(static_cast<size_t>(id));
}

double SystemParams::Get(std::string_view name) const {
  for (size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return values[i];
  }
  Fail(ErrorKind::kConfig, "system " + std::string(SystemName(system)) +
                               " has no parameter '" + std::string(name) + "'");
}

void SystemParams::Set(std::string_view name, double value) {
  if (!std::isfinite(value)) Fail(ErrorKind::kConfig, "parameter values must be finite");
  for (size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) {
      values[i] = value;
      return;
    }
  }
  Fail(ErrorKind::kConfig, "system " + std::string(SystemName(system)) +
                               " has no parameter '" + std::string(name) + "'");
}

bool SystemParams::Has(std::string_view name) const {
  return std::find(names.begin(), names.end(), name) != names.end();
}

SystemParams DefaultParams(SystemId id) {
  SystemParams p;
  p.system = id;
  for (auto& [name, value] : TableFor(id)) {
    p.names.push_back(name);
    p.values.push_back(value);
  }
  return p;
}

void DriftInto(SystemId id, const SystemParams& params, const double* x, double c,
               double* out) {
  const double* p = params.values.data();
  switch (id) {
    case SystemId::kBFold:
      out[0] = c - x[0] * x[0];
      return;
    case SystemId::kBHopf: {
      const double r2 = x[0] * x[0] + x[1] * x[1];
      out[0] = c * x[0] - p[0] * x[1] - x[0] * r2;
      out[1] = p[0] * x[0] + c * x[1] - x[1] * r2;
      return;
    }
    case SystemId::kBTranscritical:
      out[0] = c * x[0] - x[0] * x[0];
      return;
    case SystemId::kBHarvesting: {
      const double r = p[0], k = p[1], s = p[2];
      out[0] = r * x[0] * (1.0 - x[0] / k) - c * x[0] * x[0] / (s * s + x[0] * x[0]);
      return;
    }
    case SystemId::kBRmTc:
    case SystemId::kBRmHopf: {
      const double r = p[0], k = p[1], e = p[2], h = p[3], m = p[4];
      const double uptake = c * x[0] * x[1] / (1.0 + c * h * x[0]);
      out[0] = r * x[0] * (1.0 - x[0] / k) - uptake;
      out[1] = e * uptake - m * x[1];
      return;
    }
    case SystemId::kBSeirx: {
      const double n = p[0], mu = p[1], beta = p[2], eps = p[3], gam = p[4], kap = p[5],
                   del = p[6];
      const double s = x[0], e = x[1], i = x[2], v = x[3];
      const double infection = beta * s * i / n;
      out[0] = mu * n * (1.0 - v) - infection - mu * s;
      out[1] = infection - (eps + mu) * e;
      out[2] = eps * e - (gam + mu) * i;
      out[3] = kap * v * (1.0 - v) * (-c + i + del * (2.0 * v - 1.0));
      return;
    }
    case SystemId::kBAmoc:
    case SystemId::kRAmoc:
      AmocDrift(p, x, c, 0, out);
      return;
    case SystemId::kRSaddleNode: {
      const double y = x[0] + c;
      out[0] = y * y - 1.0;
      return;
    }
    case SystemId::kRBautin: {
      const double a = p[0], om = p[1], b = p[2];
      const double wr = x[0] - c, wi = x[1];
      const double r2 = wr * wr + wi * wi;
      const double g = a - b * r2 + r2 * r2;
      out[0] = g * wr - om * wi;
      out[1] = om * wr + g * wi;
      return;
    }
    case SystemId::kRCompostBomb: {
      const double mu = p[0], lam = p[1], big_a = p[2], pi = p[3], r0 = p[4], al = p[5],
                   t_ref = p[7];
      const double resp = x[1] * r0 * std::exp(al * (x[0] - t_ref));
      out[0] = (-lam * (x[0] - c) + big_a * resp) / mu;
      out[1] = pi - resp;
      return;
    }
  }
}

StateVector Drift(SystemId id, const SystemParams& p, const StateVector& x, double control,
                  double /*time*/) {
  const SystemInfo& info = GetSystemInfo(id);
  if (x.size() != info.dim) {
    Fail(ErrorKind::kInvalidArgument, "drift: state dimension " + std::to_string(x.size()) +
                                          " does not match " + info.name);
  }
  if (p.system != id || p.values.size() != TableFor(id).size()) {
    Fail(ErrorKind::kInvalidArgument, "drift: parameters belong to another system");
  }
  CheckFinite(x.data(), info.dim, control);
  StateVector out(info.dim);
  DriftInto(id, p, x.data(), control, out.data());
  return out;
}

StateVector NoiseAmplitude(SystemId id, const SystemParams& p) {
  switch (id) {
    case SystemId::kBFold:
    case SystemId::kBTranscritical:
      return Vec({p.Get("sigma_x")});
    case SystemId::kBHopf:
      return Vec({p.Get("sigma_x"), p.Get("sigma_y")});
    case SystemId::kBHarvesting:
      return Vec({p.Get("sigma_x")});
    case SystemId::kBRmTc:
    case SystemId::kBRmHopf:
      return Vec({p.Get("sigma_x"), p.Get("sigma_y")});
    case SystemId::kBSeirx:
      return Vec({p.Get("sigma_S"), p.Get("sigma_E"), p.Get("sigma_I"), p.Get("sigma_x")});
    case SystemId::kBAmoc:
    case SystemId::kRAmoc: {
      // sigma in Sv psu per sqrt(year), divided by the box volume.
      const double scale = kSv * kSecondsPerYear;
      return Vec({p.Get("sigma_N") * scale / p.Get("V_N"), p.Get("sigma_T") * scale / p.Get("V_T")});
    }
    case SystemId::kRSaddleNode:
      return Vec({std::sqrt(2.0 * p.Get("sigma_x"))});
    case SystemId::kRBautin: {
      // Complex white noise with E|dW|^2 = sigma^2 dt.
      const double s = p.Get("sigma_z") / std::sqrt(2.0);
      return Vec({s, s});
    }
    case SystemId::kRCompostBomb:
      return Vec({p.Get("D3") / p.Get("mu"), 0.0});
  }
  Fail(ErrorKind::kInvalidArgument, "unknown system id");
}

void ProjectState(SystemId id, const SystemParams& p, double* x, double control) {
  switch (id) {
    case SystemId::kBFold:
    case SystemId::kBTranscritical:
      x[0] = std::max(x[0], -5.0);
      return;
    case SystemId::kBHopf:
    case SystemId::kBAmoc:
    case SystemId::kRAmoc:
      return;
    case SystemId::kBHarvesting:
      x[0] = std::max(x[0], 0.0);
      return;
    case SystemId::kBRmTc:
    case SystemId::kBRmHopf:
      x[0] = std::max(x[0], 0.0);
      x[1] = std::max(x[1], 0.0);
      return;
    case SystemId::kBSeirx:
      for (int i = 0; i < 3; ++i) x[i] = std::max(x[i], 0.0);
      x[3] = std::clamp(x[3], 0.0, 1.0);
      return;
    case SystemId::kRSaddleNode:
      x[0] = std::min(x[0], 10.0);
      return;
    case SystemId::kRBautin: {
      const double wr = x[0] - control;
      const double rad = std::hypot(wr, x[1]);
      if (rad > 20.0) {
        x[0] = control + wr * 20.0 / rad;
        x[1] = x[1] * 20.0 / rad;
      }
      return;
    }
    case SystemId::kRCompostBomb:
      x[0] = std::min(x[0], 100.0);
      x[1] = std::max(x[1], 0.0);
      return;
  }
  (void)p;
}

double AmocStrength(const SystemParams& p, const StateVector& x) {
  Require(x.size() == 2, "amoc_strength: state must be (S_N, S_T)");
  CheckFinite(x.data(), 2, 0.0);
  return AmocQ(p.values.data(), x[0]) / kSv;
}

StateVector AmocDriftBranch(const SystemParams& p, const StateVector& x, double hosing,
                            bool positive_branch) {
  Require(x.size() == 2, "amoc drift: state must be (S_N, S_T)");
  StateVector out(2);
  AmocDrift(p.values.data(), x.data(), hosing, positive_branch ? 1 : -1, out.data());
  return out;
}

double RForcingSaddle(double lambda_max, double epsilon, double time) {
  Require(lambda_max > 0.0, "r_forcing_saddle: lambda_max must be positive");
  return 0.5 * lambda_max * (std::tanh(0.5 * lambda_max * epsilon * time) + 1.0);
}

double RForcingSech(double h0, double dh, double rate, double t_crit, double time) {
  Require(rate > 0.0, "r_forcing_sech: rate must be positive");
  if (time >= t_crit) return h0 + dh;
  return h0 + dh / std::cosh(rate * (time - t_crit));
}

VectorField CatalogField(SystemId id, const SystemParams& p) {
  VectorField f;
  f.dim = GetSystemInfo(id).dim;
  f.eval = [id, p](const double* x, double c, double* out) { DriftInto(id, p, x, c, out); };
  if (id == SystemId::kBAmoc || id == SystemId::kRAmoc) {
    f.smooth_guard = [p](const StateVector& x, double /*c*/, double h_max) {
      const double lo = AmocQ(p.values.data(), x[0] - h_max);
      const double hi = AmocQ(p.values.data(), x[0] + h_max);
      if ((lo < 0.0) != (hi < 0.0) || lo == 0.0 || hi == 0.0) {
        Fail(ErrorKind::kNumerical, "jacobian: AMOC stencil straddles the Q = 0 switching surface");
      }
    };
  }
  return f;
}

Eigen::MatrixXd FdJacobian(const VectorField& field, const StateVector& x, double control) {
  const int n = field.dim;
  Require(x.size() == n, "jacobian: state dimension mismatch");
  for (int i = 0; i < n; ++i) {
    if (!std::isfinite(x[i])) Fail(ErrorKind::kNumerical, "jacobian: non-finite state");
  }
  if (field.smooth_guard) {
    double h_max = 0.0;
    for (int i = 0; i < n; ++i) h_max = std::max(h_max, std::max(1e-6, 1e-6 * std::fabs(x[i])));
    field.smooth_guard(x, control, h_max);
  }
  Eigen::MatrixXd jac(n, n);
  StateVector xp = x, xm = x, fp(n), fm(n);
  for (int i = 0; i < n; ++i) {
    const double h = std::max(1e-6, 1e-6 * std::fabs(x[i]));
    xp[i] = x[i] + h;
    xm[i] = x[i] - h;
    field.eval(xp.data(), control, fp.data());
    field.eval(xm.data(), control, fm.data());
    jac.col(i) = (fp - fm) / ((x[i] + h) - (x[i] - h));
    xp[i] = x[i];
    xm[i] = x[i];
  }
  return jac;
}

Eigen::MatrixXd Jacobian(SystemId id, const SystemParams& p, const StateVector& x,
                         double control) {
  Require(x.size() == GetSystemInfo(id).dim, "jacobian: state dimension mismatch");
  return FdJacobian(CatalogField(id, p), x, control);
}

double Observable(SystemId id, const SystemParams& p, const StateVector& x) {
  switch (id) {
    case SystemId::kBRmTc:
      return x[1];
    case SystemId::kBSeirx:
      return x[3];
    case SystemId::kBAmoc:
    case SystemId::kRAmoc:
      return AmocQ(p.values.data(), x[0]) / kSv;
    case SystemId::kRBautin:
      return std::hypot(x[0], x[1]);
    default:
      return x[0];
  }
}

std::optional<size_t> FirstTipIndex(SystemId id, const SystemParams& p,
                                    std::span<const StateVector> traj) {
  if (traj.empty()) Fail(ErrorKind::kInvalidArgument, "tip_criterion: empty trajectory");
  const size_t n = traj.size();
  auto first = [&](auto pred) -> std::optional<size_t> {
    for (size_t t = 0; t < n; ++t) {
      if (pred(traj[t])) return t;
    }
    return std::nullopt;
  };
  switch (id) {
    case SystemId::kBFold:
      return first([](const StateVector& s) { return s[0] < -1.0; });
    case SystemId::kBHopf:
      return first([](const StateVector& s) { return std::hypot(s[0], s[1]) >= 0.5; });
    case SystemId::kBTranscritical:
      return first([](const StateVector& s) { return s[0] <= -0.5; });
    case SystemId::kBHarvesting: {
      const double k = p.Get("k");
      return first([k](const StateVector& s) { return s[0] < 0.1 * k; });
    }
    case SystemId::kBRmTc:
      return first([](const StateVector& s) { return s[1] > 0.1; });
    case SystemId::kBRmHopf: {
      const size_t n_pre = std::min(n, std::max<size_t>(10, n / 10));
      double mean = 0.0;
      for (size_t t = 0; t < n_pre; ++t) mean += traj[t][0];
      mean /= static_cast<double>(n_pre);
      double var = 0.0;
      for (size_t t = 0; t < n_pre; ++t) var += (traj[t][0] - mean) * (traj[t][0] - mean);
      const double sd = n_pre > 1 ? std::sqrt(var / static_cast<double>(n_pre - 1)) : 0.0;
      size_t run = 0;
      for (size_t t = n_pre; t < n; ++t) {
        run = std::fabs(traj[t][0] - mean) > 3.0 * sd ? run + 1 : 0;
        if (run >= 20) return t - 19;
      }
      return std::nullopt;
    }
    case SystemId::kBSeirx:
      return first([](const StateVector& s) { return s[3] < 0.5; });
    case SystemId::kBAmoc:
    case SystemId::kRAmoc: {
      const double q0 = AmocQ(p.values.data(), traj[0][0]);
      return first([&](const StateVector& s) {
        return AmocQ(p.values.data(), s[0]) < 0.2 * q0;
      });
    }
    case SystemId::kRSaddleNode:
      return first([](const StateVector& s) { return s[0] >= 0.0; });
    case SystemId::kRBautin:
      return first([](const StateVector& s) { return std::hypot(s[0], s[1]) >= 10.0; });
    case SystemId::kRCompostBomb:
      return first([](const StateVector& s) { return s[0] > 30.0; });
  }
  return std::nullopt;
}

bool TipCriterion(SystemId id, const SystemParams& p, std::span<const StateVector> traj) {
  return FirstTipIndex(id, p, traj).has_value();
}

std::string CatalogJson() {
  nlohmann::ordered_json doc;
  doc["schema"] = "tipbench-catalog/1";
  doc["amoc_constants_version"] = std::string(amoc::kVersion);
  nlohmann::ordered_json systems = nlohmann::ordered_json::array();
  for (SystemId id : AllSystems()) {
    const SystemInfo& info = GetSystemInfo(id);
    const SystemParams p = DefaultParams(id);
    nlohmann::ordered_json s;
    s["id"] = info.name;
    s["tipping"] = info.kind == TippingKind::kBifurcation ? "bifurcation" : "rate";
    s["dimension"] = info.dim;
    s["state"] = info.state_names;
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    for (size_t i = 0; i < p.names.size(); ++i) params[p.names[i]] = p.values[i];
    s["parameters"] = params;
    s["control"] = info.control_name;
    s["control_start"] = info.control_start;
    if (info.control_crit) {
      s["critical_value"] = *info.control_crit;
    } else {
      s["critical_value"] = nullptr;
    }
    if (!info.rate_param.empty()) {
      s["rate_parameter"] = info.rate_param;
      s["flat_rate_parameter"] = info.rate_flat_param;
    }
    s["tip_criterion"] = info.tip_rule;
    s["observable"] = info.observable;
    s["state_bounds"] = info.bounds;
    s["dt"] = info.dt;
    s["out_interval"] = info.out_interval;
    s["length"] = info.length;
    systems.push_back(s);
  }
  doc["systems"] = systems;
  return doc.dump(2);
}

double BautinRestRadius(const SystemParams& p) {
  return BautinCycleRadius(p.Get("a"), p.Get("b"));
}

}  // namespace tipbench
