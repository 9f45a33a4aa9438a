/*
 * Copyright 2026 The sparse-hjb Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/// @file
/// Adjoint integration along a trajectory and a check of the first-order
/// sparsity structure: at every node the applied control should be the
/// closed-form maximizer of sum_i (c_i u_i - |u_i|^p) for the switching
/// vector c(t) built from the adjoint.

#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "sparse_hjb/errors.hpp"
#include "sparse_hjb/feedback.hpp"
#include "sparse_hjb/hjb_solver.hpp"
#include "sparse_hjb/maximizer.hpp"

namespace sparse_hjb {

struct AdjointTrace {
  std::vector<double> times;
  std::vector<Vec> phi;
  /// c_i(t) = -f_i(y(t)) . phi(t) e^{lambda t} / gamma
  std::vector<Vec> c;
};

/// Integrates
///   phi' = -(df/dy)^T phi - e^{-lambda s} grad l1(y),   phi(T_trunc) = 0,
/// backwards with RK4 on the trajectory's own nodes. The state is linear
/// between nodes and the control constant on each step. If the trajectory
/// stops before T_trunc it is extended at rest with zero control and the
/// last step size.
inline AdjointTrace integrate_adjoint(const Trajectory &traj,
                                      const Problem &problem, double t_trunc) {
  if (traj.size() < 2)
    throw ArgumentError("adjoint integration needs at least two nodes");
  if (!problem.dynamics.has_jacobian())
    throw UnsupportedError(
        "adjoint integration needs a Jacobian for the dynamics");
  if (!problem.cost.has_gradient())
    throw UnsupportedError("adjoint integration needs grad l1");
  if (!(problem.cost.gamma() > 0.0))
    throw ArgumentError("switching functions need gamma > 0");
  const double lambda = problem.cfg.lambda;
  const auto d = static_cast<std::size_t>(problem.cfg.d);
  const auto m = static_cast<std::size_t>(problem.cfg.m);

  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<Vec> controls;
  for (std::size_t i = 0; i < traj.size() && traj.times[i] <= t_trunc + 1e-12; ++i) {
    times.push_back(traj.times[i]);
    states.push_back(traj.states[i]);
    if (i < traj.controls.size())
      controls.push_back(traj.controls[i]);
  }
  const double h_last = traj.times[traj.size() - 1] - traj.times[traj.size() - 2];
  while (times.back() < t_trunc - 1e-12) {
    times.push_back(std::min(t_trunc, times.back() + h_last));
    states.push_back(states.back());
  }
  controls.resize(times.size() - 1, Vec(m, 0.0));

  auto rhs = [&](double s, std::span<const double> y, std::span<const double> u,
                 std::span<const double> phi) {
    const Vec jac = problem.dynamics.jacobian(y, u);
    const Vec grad = problem.cost.state_gradient(y);
    const double disc = std::exp(-lambda * s);
    Vec out(d);
    for (std::size_t i = 0; i < d; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < d; ++j)
        acc += jac[j * d + i] * phi[j];
      out[i] = -acc - disc * grad[i];
    }
    return out;
  };

  const std::size_t n = times.size();
  std::vector<Vec> phi(n, Vec(d, 0.0));
  for (std::size_t k = n - 1; k > 0; --k) {
    const double ta = times[k - 1];
    const double tb = times[k];
    const double h = ta - tb;
    const Vec &ya = states[k - 1];
    const Vec &yb = states[k];
    const Vec &u = controls[k - 1];
    Vec ym(d);
    for (std::size_t i = 0; i < d; ++i)
      ym[i] = 0.5 * (ya[i] + yb[i]);
    const Vec &p0 = phi[k];
    const Vec k1 = rhs(tb, yb, u, p0);
    Vec tmp(d);
    for (std::size_t i = 0; i < d; ++i)
      tmp[i] = p0[i] + 0.5 * h * k1[i];
    const Vec k2 = rhs(tb + 0.5 * h, ym, u, tmp);
    for (std::size_t i = 0; i < d; ++i)
      tmp[i] = p0[i] + 0.5 * h * k2[i];
    const Vec k3 = rhs(tb + 0.5 * h, ym, u, tmp);
    for (std::size_t i = 0; i < d; ++i)
      tmp[i] = p0[i] + h * k3[i];
    const Vec k4 = rhs(ta, ya, u, tmp);
    for (std::size_t i = 0; i < d; ++i)
      phi[k - 1][i] = p0[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }

  AdjointTrace out;
  out.times = times;
  out.c.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    Vec c(m);
    const double scale = std::exp(lambda * times[k]) / problem.cost.gamma();
    for (std::size_t j = 0; j < m; ++j) {
      const Vec fj = problem.dynamics.channel(static_cast<int>(j), states[k]);
      double dot = 0.0;
      for (std::size_t i = 0; i < d; ++i)
        dot += fj[i] * phi[k][i];
      c[j] = -dot * scale;
    }
    out.c.push_back(std::move(c));
  }
  out.phi = std::move(phi);
  return out;
}

inline void write_adjoint_csv(const AdjointTrace &adj, const std::string &path) {
  if (path.empty())
    throw IoError("cannot write adjoint trace: empty path");
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot open '" + path + "' for writing");
  const std::size_t d = adj.phi.empty() ? 0 : adj.phi.front().size();
  const std::size_t m = adj.c.empty() ? 0 : adj.c.front().size();
  out << 't';
  for (std::size_t i = 0; i < d; ++i)
    out << ",phi" << (i + 1);
  for (std::size_t i = 0; i < m; ++i)
    out << ",c" << (i + 1);
  out << '\n';
  for (std::size_t k = 0; k < adj.times.size(); ++k) {
    out << format_double(adj.times[k]);
    for (double v : adj.phi[k])
      out << ',' << format_double(v);
    for (double v : adj.c[k])
      out << ',' << format_double(v);
    out << '\n';
  }
  if (!out)
    throw IoError("write failed for '" + path + "'");
}

struct StructureReport {
  std::size_t nodes = 0;
  std::size_t matched = 0;
  /// Nodes where some rho^{1-p}|c_i| lies within tol_c of 1, so the
  /// maximizer is set-valued or numerically undecided. They count as
  /// matched when the applied control respects the support condition.
  std::size_t ambiguous = 0;
  double match_fraction = 0.0;
  std::vector<char> node_match;
  /// Nodes with u_i != 0 but rho^{1-p}|c_i| < 1 - tol_c.
  std::size_t support_violations = 0;
  /// Largest |c_i| at nodes after the control has switched off for good.
  double max_abs_c_after_switch_off = 0.0;
  /// Per coordinate: end of the last interval with u_i != 0 (0 if never).
  std::vector<double> switch_off_control;
  /// Per coordinate: first node time from which |c_i| <= 1 + tol_c holds
  /// on every later node.
  std::vector<double> switch_off_c;
  /// Whether every |c_i(t)| is nonincreasing (1e-8 slack). Only evaluated
  /// for Eikonal dynamics.
  bool c_nonincreasing = true;
  bool monotonicity_checked = false;
};

inline StructureReport verify_structure(const Trajectory &traj,
                                        const AdjointTrace &adj,
                                        const Problem &problem,
                                        double tol_c = 1e-3) {
  const ProblemConfig &cfg = problem.cfg;
  const auto m = static_cast<std::size_t>(cfg.m);
  StructureReport rep;
  const std::size_t n = std::min(traj.controls.size(), adj.c.size());
  rep.nodes = n;
  rep.node_match.assign(n, 0);
  rep.switch_off_control.assign(m, 0.0);
  rep.switch_off_c.assign(m, 0.0);

  auto scaled = [&](std::size_t j, double cj) {
    return std::pow(cfg.radius(static_cast<int>(j)), 1.0 - cfg.p) * std::abs(cj);
  };
  double rmax = 0.0;
  for (int j = 0; j < cfg.m; ++j)
    rmax = std::max(rmax, cfg.radius(j));

  double last_active = -1.0;
  for (std::size_t k = 0; k < n; ++k) {
    const Vec &u = traj.controls[k];
    const Vec &c = adj.c[k];
    bool near = false;
    for (std::size_t j = 0; j < m; ++j)
      near = near || std::abs(scaled(j, c[j]) - 1.0) <= tol_c;

    bool support_ok = true;
    for (std::size_t j = 0; j < m; ++j) {
      if (u[j] != 0.0) {
        last_active = traj.times[k + 1];
        rep.switch_off_control[j] = traj.times[k + 1];
        if (scaled(j, c[j]) < 1.0 - tol_c || u[j] * c[j] < 0.0) {
          support_ok = false;
          ++rep.support_violations;
        }
      }
    }

    bool match = false;
    try {
      const auto best = maximize_closed_form(SwitchingVector(c), cfg);
      double dist = 0.0;
      for (std::size_t j = 0; j < m; ++j)
        dist = std::max(dist, std::abs(best.u_star[j] - u[j]));
      match = dist <= 1e-6 * rmax;
    } catch (const RegimeError &) {
      near = true;
    }
    if (!match && near) {
      ++rep.ambiguous;
      match = support_ok;
    }
    rep.node_match[k] = match ? 1 : 0;
    rep.matched += match ? 1 : 0;
  }
  rep.match_fraction = n ? static_cast<double>(rep.matched) / n : 1.0;

  for (std::size_t j = 0; j < m; ++j) {
    double t_off = 0.0;
    for (std::size_t k = adj.c.size(); k-- > 0;) {
      if (std::abs(adj.c[k][j]) > 1.0 + tol_c) {
        t_off = k + 1 < adj.times.size() ? adj.times[k + 1] : adj.times[k];
        break;
      }
    }
    rep.switch_off_c[j] = t_off;
  }
  for (std::size_t k = 0; k < adj.c.size(); ++k)
    if (adj.times[k] >= last_active)
      for (double cj : adj.c[k])
        rep.max_abs_c_after_switch_off =
            std::max(rep.max_abs_c_after_switch_off, std::abs(cj));

  if (problem.dynamics.kind() == Dynamics::Kind::eikonal) {
    rep.monotonicity_checked = true;
    for (std::size_t k = 1; k < adj.c.size(); ++k)
      for (std::size_t j = 0; j < m; ++j)
        if (std::abs(adj.c[k][j]) > std::abs(adj.c[k - 1][j]) + 1e-8)
          rep.c_nonincreasing = false;
  }
  return rep;
}

} // namespace sparse_hjb
