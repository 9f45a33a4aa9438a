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
/// Feedback synthesis from a value field and closed-loop simulation with
/// piecewise-constant controls.

#pragma once

#include <cmath>
#include <fstream>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sparse_hjb/errors.hpp"
#include "sparse_hjb/grid.hpp"
#include "sparse_hjb/hjb_solver.hpp"
#include "sparse_hjb/problem.hpp"

namespace sparse_hjb {

/// States at times t_0 = 0 < t_1 < ...; controls[i] acts on [t_i, t_{i+1}).
/// accumulated_cost[i] is the discounted cost collected on [0, t_i].
struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<Vec> controls;
  std::vector<double> accumulated_cost;

  std::size_t size() const { return times.size(); }
  double total_cost() const {
    return accumulated_cost.empty() ? 0.0 : accumulated_cost.back();
  }
};

/// Header `t,x1..xd,u1..um,cost`. The final node repeats the last control.
inline void write_trajectory_csv(const Trajectory &traj, const std::string &path) {
  if (path.empty())
    throw IoError("cannot write trajectory: empty path");
  if (traj.states.empty())
    throw ArgumentError("empty trajectory");
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot open '" + path + "' for writing");
  const std::size_t d = traj.states.front().size();
  const std::size_t m = traj.controls.empty() ? 0 : traj.controls.front().size();
  out << 't';
  for (std::size_t i = 0; i < d; ++i)
    out << ",x" << (i + 1);
  for (std::size_t i = 0; i < m; ++i)
    out << ",u" << (i + 1);
  out << ",cost\n";
  for (std::size_t k = 0; k < traj.size(); ++k) {
    out << format_double(traj.times[k]);
    for (double xi : traj.states[k])
      out << ',' << format_double(xi);
    if (m > 0) {
      const Vec &u = traj.controls[std::min(k, traj.controls.size() - 1)];
      for (double ui : u)
        out << ',' << format_double(ui);
    }
    out << ',' << format_double(traj.accumulated_cost[k]) << '\n';
  }
  if (!out)
    throw IoError("write failed for '" + path + "'");
}

/// argmin of the scheme at clamp(x), with the solver's candidate set and
/// tie-breaking.
inline Vec feedback(const ValueField &v, std::span<const double> x,
                    const Problem &problem, const SolverConfig &scfg) {
  return SemiLagrangian(problem, scfg).update(v, problem.grid.clamp(x)).control;
}

/// mesh / (2 max |f|).
inline double default_sim_step(const Problem &problem, const SolverConfig &scfg) {
  const double mesh = *std::min_element(problem.grid.mesh().begin(),
                                        problem.grid.mesh().end());
  const double speed = max_speed(
      problem, candidate_controls(problem.controls, scfg.control_density));
  return speed > 0.0 ? mesh / (2.0 * speed) : mesh / 2.0;
}

using Controller = std::function<Vec(double t, std::span<const double> x)>;

/// Explicit Euler with the control held on each step. Control cost uses the
/// exact weights (e^{-lambda t_i} - e^{-lambda t_{i+1}}) / lambda; the state
/// cost uses the midpoint rule with discount taken at the midpoint.
inline Trajectory simulate_controller(const Controller &controller,
                                      std::span<const double> x0, double horizon,
                                      double dt_sim, const Problem &problem) {
  if (!(horizon > 0.0) || !(dt_sim > 0.0))
    throw ArgumentError("horizon and dt_sim must be positive");
  if (x0.size() != static_cast<std::size_t>(problem.cfg.d))
    throw ArgumentError("initial state has the wrong dimension");
  const double lambda = problem.cfg.lambda;
  const auto steps =
      static_cast<std::size_t>(std::max(1.0, std::round(horizon / dt_sim)));
  const double h = horizon / static_cast<double>(steps);
  const double limit = 10.0 * problem.grid.diameter();

  Trajectory traj;
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  traj.controls.reserve(steps);
  traj.accumulated_cost.reserve(steps + 1);
  Vec y(x0.begin(), x0.end());
  traj.times.push_back(0.0);
  traj.states.push_back(y);
  traj.accumulated_cost.push_back(0.0);
  double cost = 0.0;
  for (std::size_t i = 0; i < steps; ++i) {
    const double t0 = h * static_cast<double>(i);
    const double t1 = h * static_cast<double>(i + 1);
    Vec u = controller(t0, y);
    const Vec f = problem.dynamics(y, u);
    Vec mid = y;
    for (std::size_t j = 0; j < y.size(); ++j) {
      mid[j] += 0.5 * h * f[j];
      y[j] += h * f[j];
    }
    const double weight = (std::exp(-lambda * t0) - std::exp(-lambda * t1)) / lambda;
    cost += weight * problem.cost.control_cost(u) +
            h * std::exp(-lambda * (t0 + 0.5 * h)) * problem.cost.state_cost(mid);
    double norm = 0.0;
    for (double yj : y)
      norm += yj * yj;
    if (!std::isfinite(norm) || std::sqrt(norm) > limit)
      throw DivergenceError("closed-loop state left 10x the domain diameter at t=" +
                            format_double(t1));
    traj.controls.push_back(std::move(u));
    traj.times.push_back(t1);
    traj.states.push_back(y);
    traj.accumulated_cost.push_back(cost);
  }
  return traj;
}

/// Closed loop under the synthesized feedback of v.
inline Trajectory simulate(const ValueField &v, std::span<const double> x0,
                           double horizon, double dt_sim, const Problem &problem,
                           const SolverConfig &scfg) {
  const SemiLagrangian scheme(problem, scfg);
  return simulate_controller(
      [&](double, std::span<const double> x) {
        return scheme.update(v, problem.grid.clamp(x)).control;
      },
      x0, horizon, dt_sim, problem);
}

struct CostComparison {
  /// Discounted closed-loop cost plus e^{-lambda T} v(y(T)).
  double simulated = 0.0;
  double value = 0.0;
  double gap = 0.0;
  Trajectory trajectory;
};

inline CostComparison simulated_cost_vs_value(const ValueField &v,
                                              std::span<const double> x0,
                                              const Problem &problem,
                                              const SolverConfig &scfg,
                                              double horizon, double dt_sim) {
  CostComparison out;
  out.trajectory = simulate(v, x0, horizon, dt_sim, problem, scfg);
  const double tail = std::exp(-problem.cfg.lambda * out.trajectory.times.back()) *
                      interpolate(v, out.trajectory.states.back());
  out.simulated = out.trajectory.total_cost() + tail;
  out.value = interpolate(v, x0);
  out.gap = std::abs(out.simulated - out.value);
  return out;
}

} // namespace sparse_hjb
