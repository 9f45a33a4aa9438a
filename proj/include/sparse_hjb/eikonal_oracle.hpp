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
/// Exact optimal control of y' = u, |u|_2 <= rho, with running cost
/// |y|^2 / 2 + gamma |u|_1 and discount lambda.
///
/// Coordinates with |x_i| <= lambda*gamma never move. The others are driven
/// to sgn(x_i) lambda gamma in order of increasing |x_i|: during phase k the
/// still-active coordinates move radially at full speed rho until the k-th
/// smallest one reaches lambda*gamma, where it stops for good.

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "sparse_hjb/errors.hpp"
#include "sparse_hjb/feedback.hpp"
#include "sparse_hjb/problem.hpp"

namespace sparse_hjb {

struct EikonalPlan {
  Vec x0;
  double lambda = 0.0;
  double gamma = 0.0;
  double rho = 1.0;
  /// Active coordinates (|x_i| > lambda gamma) sorted by |x_i|, stable.
  std::vector<int> sorted_perm;
  /// t_0 = 0 < t_1 < ... < t_n; phase k spans [t_{k-1}, t_k).
  std::vector<double> switch_times{0.0};
  /// l^2 radius of the still-active sub-vector at the start of each phase.
  std::vector<double> radii;
  std::vector<Vec> phases;
  /// Exact state at t_{k-1} for each phase k.
  std::vector<Vec> phase_starts;
  Vec final_state;

  double last_switch() const { return switch_times.back(); }
  std::size_t phase_count() const { return phases.size(); }
};

inline EikonalPlan plan(std::span<const double> x0, double lambda, double gamma,
                        double rho) {
  if (!(rho > 0.0))
    throw ArgumentError("rho must be positive");
  if (!(lambda * gamma >= 0.0))
    throw ArgumentError("lambda * gamma must be nonnegative");
  for (double xi : x0)
    if (!std::isfinite(xi))
      throw ArgumentError("initial state must be finite");

  EikonalPlan pl;
  pl.x0.assign(x0.begin(), x0.end());
  pl.lambda = lambda;
  pl.gamma = gamma;
  pl.rho = rho;
  const double lg = lambda * gamma;
  const std::size_t d = x0.size();

  for (std::size_t i = 0; i < d; ++i)
    if (std::abs(x0[i]) > lg)
      pl.sorted_perm.push_back(static_cast<int>(i));
  std::stable_sort(pl.sorted_perm.begin(), pl.sorted_perm.end(),
                   [&](int a, int b) {
                     return std::abs(x0[static_cast<std::size_t>(a)]) <
                            std::abs(x0[static_cast<std::size_t>(b)]);
                   });

  Vec y = pl.x0;
  double t = 0.0;
  const std::size_t n = pl.sorted_perm.size();
  for (std::size_t k = 0; k < n; ++k) {
    const auto lead = static_cast<std::size_t>(pl.sorted_perm[k]);
    double r2 = 0.0;
    for (std::size_t j = k; j < n; ++j) {
      const double yj = y[static_cast<std::size_t>(pl.sorted_perm[j])];
      r2 += yj * yj;
    }
    const double r = std::sqrt(r2);
    const double lead_abs = std::abs(y[lead]);
    const double duration = r > 0.0 ? (r / rho) * (1.0 - lg / lead_abs) : 0.0;
    if (duration > 0.0) {
      Vec u(d, 0.0);
      for (std::size_t j = k; j < n; ++j) {
        const auto i = static_cast<std::size_t>(pl.sorted_perm[j]);
        u[i] = -rho * y[i] / r;
      }
      pl.phases.push_back(std::move(u));
      pl.phase_starts.push_back(y);
      pl.radii.push_back(r);
      t += duration;
      pl.switch_times.push_back(t);
      const double shrink = lg / lead_abs;
      for (std::size_t j = k; j < n; ++j) {
        const auto i = static_cast<std::size_t>(pl.sorted_perm[j]);
        y[i] *= shrink;
      }
    }
    // exact landing value for the coordinate that just concluded
    y[lead] = (pl.x0[lead] > 0.0 ? 1.0 : -1.0) * lg;
  }
  pl.final_state = std::move(y);
  return pl;
}

/// Index of the phase active at time t, or phase_count() once all stopped.
inline std::size_t phase_at(const EikonalPlan &pl, double t) {
  const auto it =
      std::upper_bound(pl.switch_times.begin(), pl.switch_times.end(), t);
  const auto k = static_cast<std::size_t>(it - pl.switch_times.begin());
  return k == 0 ? 0 : k - 1;
}

inline Vec control_at(const EikonalPlan &pl, double t) {
  const std::size_t k = phase_at(pl, t);
  if (k >= pl.phases.size())
    return Vec(pl.x0.size(), 0.0);
  return pl.phases[k];
}

inline Vec state_at(const EikonalPlan &pl, double t) {
  const std::size_t k = phase_at(pl, t);
  if (k >= pl.phases.size())
    return pl.phases.empty() ? pl.x0 : pl.final_state;
  Vec y = pl.phase_starts[k];
  const double s = t - pl.switch_times[k];
  for (std::size_t i = 0; i < y.size(); ++i)
    y[i] += s * pl.phases[k][i];
  return y;
}

namespace detail {

// Discounted cost of the exact plan on [a, b]: exact control weights per
// constant-control piece, composite Simpson for the state cost.
inline double plan_cost_between(const EikonalPlan &pl, double a, double b,
                                int quadrature_n) {
  const double lambda = pl.lambda;
  std::vector<double> cuts{a};
  for (double s : pl.switch_times)
    if (s > a && s < b)
      cuts.push_back(s);
  cuts.push_back(b);
  const int n = quadrature_n + (quadrature_n % 2);
  double total = 0.0;
  for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
    const double lo = cuts[j];
    const double hi = cuts[j + 1];
    if (!(hi > lo))
      continue;
    const Vec u = control_at(pl, 0.5 * (lo + hi));
    total += pl.gamma * lp_norm_p(u, 1.0) *
             (std::exp(-lambda * lo) - std::exp(-lambda * hi)) / lambda;
    const double h = (hi - lo) / n;
    auto integrand = [&](double s) {
      const Vec y = state_at(pl, s);
      double q = 0.0;
      for (double yi : y)
        q += yi * yi;
      return std::exp(-lambda * s) * 0.5 * q;
    };
    double acc = integrand(lo) + integrand(hi);
    for (int i = 1; i < n; ++i)
      acc += (i % 2 ? 4.0 : 2.0) * integrand(lo + i * h);
    total += acc * h / 3.0;
  }
  return total;
}

} // namespace detail

/// Exact state and control sampled on the uniform nodes 0, dt, ..., horizon.
/// accumulated_cost holds the exact discounted cost up to each node.
inline Trajectory oracle_trajectory(const EikonalPlan &pl, double dt_sim,
                                    double horizon) {
  if (!(dt_sim > 0.0) || !(horizon > 0.0))
    throw ArgumentError("dt_sim and horizon must be positive");
  const auto steps =
      static_cast<std::size_t>(std::max(1.0, std::round(horizon / dt_sim)));
  const double h = horizon / static_cast<double>(steps);
  Trajectory traj;
  double cost = 0.0;
  for (std::size_t i = 0; i <= steps; ++i) {
    const double t = h * static_cast<double>(i);
    traj.times.push_back(t);
    traj.states.push_back(state_at(pl, t));
    if (i > 0)
      cost += detail::plan_cost_between(pl, t - h, t, 8);
    traj.accumulated_cost.push_back(cost);
    if (i < steps)
      traj.controls.push_back(control_at(pl, t));
  }
  return traj;
}

/// Discounted cost of the exact solution, including the closed-form tail
/// e^{-lambda T} |y_final|^2 / (2 lambda) after the last switch T.
inline double oracle_value(const EikonalPlan &pl, int quadrature_n = 200) {
  if (quadrature_n < 100)
    throw ArgumentError("oracle_value needs quadrature_n >= 100");
  const double t_last = pl.last_switch();
  double value = 0.0;
  if (t_last > 0.0)
    value = detail::plan_cost_between(pl, 0.0, t_last, quadrature_n);
  double q = 0.0;
  for (double yi : pl.final_state)
    q += yi * yi;
  value += std::exp(-pl.lambda * t_last) * 0.5 * q / pl.lambda;
  return value;
}

} // namespace sparse_hjb
