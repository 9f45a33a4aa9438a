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
/// Semi-Lagrangian value iteration for the discounted stationary HJB
/// equation lambda v + H(x, Dv) = 0.
///
/// One step of the scheme at a node x reads
///   v(x) = min_u  dt * l(x, u) + exp(-lambda dt) * v[x + dt f(x, u)],
/// with v[.] the multilinear interpolant (foot points are clamped to the
/// grid box). The minimum runs over a fixed candidate set from
/// sample_control_set plus, for p <= 1, the closed-form maximizer evaluated
/// at a finite-difference gradient of v.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "sparse_hjb/errors.hpp"
#include "sparse_hjb/grid.hpp"
#include "sparse_hjb/maximizer.hpp"
#include "sparse_hjb/problem.hpp"

namespace sparse_hjb {

/// Everything that defines one control problem on one grid.
struct Problem {
  ProblemConfig cfg;
  Dynamics dynamics;
  RunningCost cost;
  ControlSet controls;
  GridSpec grid;
  /// Nodes with |x|_2 <= target_radius are held at v = 0 (minimum-time
  /// surrogate). Negative disables the target.
  double target_radius = -1.0;

  bool in_target(std::span<const double> x) const {
    if (target_radius < 0.0)
      return false;
    double s = 0.0;
    for (double xi : x)
      s += xi * xi;
    return std::sqrt(s) <= target_radius;
  }

  void validate() const {
    cfg.validate();
    if (dynamics.state_dim() != cfg.d || dynamics.control_dim() != cfg.m)
      throw ArgumentError("dynamics dimensions disagree with the config");
    if (controls.dim() != cfg.m)
      throw ArgumentError("control set dimension disagrees with the config");
    if (grid.dim() != cfg.d)
      throw ArgumentError("grid dimension disagrees with the config");
  }
};

enum class Sweep { jacobi, gauss_seidel };

struct SolverConfig {
  double dt = 0.025;
  double tol = 1e-7;
  int max_iters = 200000;
  Sweep sweep = Sweep::jacobi;
  int control_density = 16;
  bool use_closed_form_candidates = true;
  /// Solve the self-referencing part of each stencil exactly, i.e. use
  ///   (dt l + beta sum_{j != x} w_j v_j) / (1 - beta w_x)
  /// in place of dt l + beta sum_j w_j v_j. Same fixed point, contraction
  /// factor still <= beta, far fewer sweeps when controls keep x in place.
  bool eliminate_self_weight = true;
  /// 0 = SPARSE_HJB_THREADS or hardware concurrency.
  unsigned threads = 0;
};

struct SolveReport {
  int iterations = 0;
  double final_residual = std::numeric_limits<double>::infinity();
  std::vector<double> residual_history;
  bool converged = false;
};

struct SlUpdate {
  double value = 0.0;
  Vec control;
};

struct SolveResult {
  ValueField value;
  SolveReport report;
  /// Argmin of the scheme at every node, evaluated on the returned field.
  std::vector<Vec> policy;
};

namespace detail {

inline unsigned resolve_threads(unsigned requested) {
  if (requested > 0)
    return requested;
  if (const char *env = std::getenv("SPARSE_HJB_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0)
      return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn &&fn) {
  if (threads <= 1 || n < 256) {
    fn(std::size_t{0}, n);
    return;
  }
  std::vector<std::jthread> pool;
  const std::size_t chunk = (n + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t a = t * chunk;
    const std::size_t b = std::min(n, a + chunk);
    if (a >= b)
      break;
    pool.emplace_back([&fn, a, b] { fn(a, b); });
  }
}

} // namespace detail

/// Largest |f(x, u)|_2 over grid nodes and candidate controls.
inline double max_speed(const Problem &problem,
                        const std::vector<Vec> &candidates) {
  double best = 0.0;
  for (std::size_t k = 0; k < problem.grid.node_count(); ++k) {
    const Vec x = problem.grid.node_coords(k);
    for (const auto &u : candidates) {
      const Vec f = problem.dynamics(x, u);
      double s = 0.0;
      for (double fi : f)
        s += fi * fi;
      best = std::max(best, std::sqrt(s));
    }
  }
  return best;
}

/// Candidate controls in evaluation order: 0 first, then lexicographic.
inline std::vector<Vec> candidate_controls(const ControlSet &cs, int density) {
  auto pts = sample_control_set(cs, density).points;
  const Vec zero(static_cast<std::size_t>(cs.dim()), 0.0);
  std::erase(pts, zero);
  pts.insert(pts.begin(), zero);
  return pts;
}

/// dt = min mesh / max |f|, the default for the given problem.
inline SolverConfig default_solver_config(const Problem &problem,
                                          int control_density = 16) {
  SolverConfig scfg;
  scfg.control_density = control_density;
  const double mesh = *std::min_element(problem.grid.mesh().begin(),
                                        problem.grid.mesh().end());
  const double speed =
      max_speed(problem, candidate_controls(problem.controls, control_density));
  scfg.dt = speed > 0.0 ? mesh / speed : mesh;
  return scfg;
}

/// Gradient of the interpolant by central differences with step = mesh,
/// one-sided where x +- mesh leaves the grid box.
inline Vec gradient_estimate(const ValueField &v, std::span<const double> x) {
  const auto &spec = v.spec;
  const int d = spec.dim();
  Vec g(static_cast<std::size_t>(d));
  Vec probe(x.begin(), x.end());
  for (int i = 0; i < d; ++i) {
    const auto a = static_cast<std::size_t>(i);
    const double h = spec.mesh()[a];
    const double xp = std::min(x[a] + h, spec.hi()[a]);
    const double xm = std::max(x[a] - h, spec.lo()[a]);
    probe[a] = xp;
    const double vp = interpolate(v, probe);
    probe[a] = xm;
    const double vm = interpolate(v, probe);
    probe[a] = x[a];
    g[a] = xp > xm ? (vp - vm) / (xp - xm) : 0.0;
  }
  return g;
}

/// Candidate set and scheme constants for one (problem, solver config).
class SemiLagrangian {
public:
  SemiLagrangian(const Problem &problem, const SolverConfig &scfg)
      : problem_(&problem), scfg_(scfg),
        candidates_(candidate_controls(problem.controls, scfg.control_density)),
        beta_(std::exp(-problem.cfg.lambda * scfg.dt)) {
    problem.validate();
    if (!(scfg.dt > 0.0))
      throw ArgumentError("time step must be positive");
    if (!(scfg.tol > 0.0))
      throw ArgumentError("tolerance must be positive");
    closed_form_ = scfg.use_closed_form_candidates && problem.cfg.p <= 1.0 &&
                   problem.cost.gamma() > 0.0;
  }

  const std::vector<Vec> &candidates() const { return candidates_; }
  double discount() const { return beta_; }
  const Problem &problem() const { return *problem_; }
  const SolverConfig &config() const { return scfg_; }

  /// Closed-form maximizer at c_i = -f_i(x) . Dv / gamma, if the regime
  /// admits one.
  std::optional<Vec> closed_form_candidate(const ValueField &v,
                                           std::span<const double> x) const {
    if (!closed_form_)
      return std::nullopt;
    const Vec grad = gradient_estimate(v, x);
    const int m = problem_->cfg.m;
    Vec c(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) {
      const Vec fk = problem_->dynamics.channel(k, x);
      double dot = 0.0;
      for (std::size_t i = 0; i < fk.size(); ++i)
        dot += fk[i] * grad[i];
      c[static_cast<std::size_t>(k)] = -dot / problem_->cost.gamma();
    }
    try {
      return maximize_closed_form(SwitchingVector(std::move(c)), problem_->cfg)
          .u_star;
    } catch (const RegimeError &) {
      return std::nullopt;
    }
  }

  double stage_value(const ValueField &v, std::span<const double> x,
                     std::span<const double> u) const {
    const Vec f = problem_->dynamics(x, u);
    Vec foot(x.begin(), x.end());
    for (std::size_t i = 0; i < foot.size(); ++i)
      foot[i] += scfg_.dt * f[i];
    return scfg_.dt * problem_->cost(x, u) + beta_ * interpolate(v, foot);
  }

  /// One scheme step at an arbitrary point; ties prefer 0, then the
  /// lexicographically first candidate.
  SlUpdate update(const ValueField &v, std::span<const double> x) const {
    SlUpdate best;
    best.control.assign(static_cast<std::size_t>(problem_->cfg.m), 0.0);
    if (problem_->in_target(x)) {
      best.value = 0.0;
      return best;
    }
    best.value = std::numeric_limits<double>::infinity();
    for (const auto &u : candidates_) {
      const double val = stage_value(v, x, u);
      if (val < best.value) {
        best.value = val;
        best.control = u;
      }
    }
    if (auto u = closed_form_candidate(v, x)) {
      const double val = stage_value(v, x, *u);
      if (val < best.value) {
        best.value = val;
        best.control = std::move(*u);
      }
    }
    return best;
  }

  /// Full fixed-point iteration from `initial`.
  SolveResult solve(ValueField initial) const {
    const auto &spec = problem_->grid;
    if (!(initial.spec == spec))
      throw ArgumentError("initial field lives on a different grid");
    for (double vi : initial.values)
      if (!std::isfinite(vi))
        throw ArgumentError("initial field must be finite");
    build_tables();

    const std::size_t n = spec.node_count();
    const unsigned threads = scfg_.sweep == Sweep::jacobi
                                 ? detail::resolve_threads(scfg_.threads)
                                 : 1u;
    SolveResult result{std::move(initial), {}, {}};
    auto &report = result.report;
    ValueField next = result.value;

    for (int it = 0; it < scfg_.max_iters; ++it) {
      double residual = 0.0;
      if (scfg_.sweep == Sweep::jacobi) {
        std::vector<double> local(threads, 0.0);
        const std::size_t chunk = (n + threads - 1) / threads;
        detail::parallel_for(n, threads, [&](std::size_t a, std::size_t b) {
          double r = 0.0;
          for (std::size_t k = a; k < b; ++k) {
            next.values[k] = node_value(result.value, k);
            r = std::max(r, std::abs(next.values[k] - result.value.values[k]));
          }
          local[a / std::max<std::size_t>(chunk, 1)] = r;
        });
        for (double r : local)
          residual = std::max(residual, r);
        std::swap(result.value.values, next.values);
      } else {
        residual = gauss_seidel_sweep(result.value, it);
      }
      for (double vi : result.value.values)
        if (!std::isfinite(vi))
          throw NumericalError("non-finite value after sweep " +
                               std::to_string(it + 1));
      report.residual_history.push_back(residual);
      report.iterations = it + 1;
      report.final_residual = residual;
      if (residual <= scfg_.tol) {
        report.converged = true;
        break;
      }
    }

    result.policy.resize(n);
    detail::parallel_for(n, threads, [&](std::size_t a, std::size_t b) {
      for (std::size_t k = a; k < b; ++k)
        result.policy[k] = update(result.value, spec.node_coords(k)).control;
    });
    return result;
  }

  /// Applies one Jacobi sweep of the plain scheme (no self-weight
  /// elimination). Used for operator-level checks.
  ValueField apply(const ValueField &v) const {
    ValueField out = v;
    for (std::size_t k = 0; k < v.spec.node_count(); ++k)
      out.values[k] = update(v, v.spec.node_coords(k)).value;
    return out;
  }

private:
  // Per node and candidate: stage cost dt*l, lower cell corner, fractions,
  // and the interpolation weight falling on the node itself.
  struct Tables {
    std::size_t k = 0;
    int d = 0;
    std::vector<double> stage;
    std::vector<std::size_t> base;
    std::vector<double> frac;
    std::vector<double> self;
    std::vector<char> target;
    std::vector<Vec> coords;
  };

  void build_tables() const {
    if (tables_.k != 0)
      return;
    const auto &spec = problem_->grid;
    const std::size_t n = spec.node_count();
    const std::size_t kc = candidates_.size();
    const int d = spec.dim();
    Tables t;
    t.k = kc;
    t.d = d;
    t.stage.resize(n * kc);
    t.base.resize(n * kc);
    t.frac.resize(n * kc * static_cast<std::size_t>(d));
    t.self.resize(n * kc);
    t.target.resize(n);
    t.coords.resize(n);
    for (std::size_t node = 0; node < n; ++node) {
      const Vec x = spec.node_coords(node);
      t.target[node] = problem_->in_target(x) ? 1 : 0;
      for (std::size_t c = 0; c < kc; ++c) {
        const auto &u = candidates_[c];
        const Vec f = problem_->dynamics(x, u);
        Vec foot = x;
        for (std::size_t i = 0; i < foot.size(); ++i)
          foot[i] += scfg_.dt * f[i];
        const auto cell = spec.locate(foot);
        const std::size_t e = node * kc + c;
        t.stage[e] = scfg_.dt * problem_->cost(x, u);
        t.base[e] = cell.base;
        std::copy(cell.frac.begin(), cell.frac.end(),
                  t.frac.begin() + static_cast<std::ptrdiff_t>(e * d));
        t.self[e] = corner_weight(spec, cell, node);
      }
      t.coords[node] = x;
    }
    tables_ = std::move(t);
  }

  static double corner_weight(const GridSpec &spec, const GridSpec::Cell &cell,
                              std::size_t node) {
    const int d = spec.dim();
    for (unsigned mask = 0; mask < (1u << d); ++mask) {
      std::size_t idx = cell.base;
      double w = 1.0;
      for (int i = 0; i < d; ++i) {
        const double f = cell.frac[static_cast<std::size_t>(i)];
        if (mask & (1u << i)) {
          idx += spec.stride(i);
          w *= f;
        } else {
          w *= 1.0 - f;
        }
      }
      if (idx == node)
        return w;
    }
    return 0.0;
  }

  // Stencil sum excluding the node's own weight when `skip` is set.
  double stencil(std::span<const double> values, std::size_t e,
                 std::size_t skip_node, bool skip) const {
    const auto &spec = problem_->grid;
    const int d = tables_.d;
    const double *fr = tables_.frac.data() + e * static_cast<std::size_t>(d);
    double acc = 0.0;
    for (unsigned mask = 0; mask < (1u << d); ++mask) {
      double w = 1.0;
      std::size_t idx = tables_.base[e];
      for (int i = 0; i < d; ++i) {
        if (mask & (1u << i)) {
          w *= fr[i];
          idx += spec.stride(i);
        } else {
          w *= 1.0 - fr[i];
        }
      }
      if (w != 0.0 && !(skip && idx == skip_node))
        acc += w * values[idx];
    }
    return acc;
  }

  double node_value(const ValueField &v, std::size_t node) const {
    if (tables_.target[node])
      return 0.0;
    const std::size_t kc = tables_.k;
    const bool elim = scfg_.eliminate_self_weight;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < kc; ++c) {
      const std::size_t e = node * kc + c;
      double val;
      if (elim && tables_.self[e] > 0.0)
        val = (tables_.stage[e] + beta_ * stencil(v.values, e, node, true)) /
              (1.0 - beta_ * tables_.self[e]);
      else
        val = tables_.stage[e] + beta_ * stencil(v.values, e, node, false);
      best = std::min(best, val);
    }
    if (closed_form_) {
      const Vec &x = tables_.coords[node];
      if (auto u = closed_form_candidate(v, x)) {
        const Vec f = problem_->dynamics(x, *u);
        Vec foot = x;
        for (std::size_t i = 0; i < foot.size(); ++i)
          foot[i] += scfg_.dt * f[i];
        const auto cell = problem_->grid.locate(foot);
        const double stage = scfg_.dt * problem_->cost(x, *u);
        const double w = elim ? corner_weight(problem_->grid, cell, node) : 0.0;
        double val;
        if (w > 0.0) {
          const double full = interpolate_cell(problem_->grid, v.values, cell);
          val = (stage + beta_ * (full - w * v.values[node])) / (1.0 - beta_ * w);
        } else {
          val = stage + beta_ * interpolate_cell(problem_->grid, v.values, cell);
        }
        best = std::min(best, val);
      }
    }
    return best;
  }

  double gauss_seidel_sweep(ValueField &v, int iteration) const {
    const auto &spec = problem_->grid;
    const int d = spec.dim();
    const unsigned flips = static_cast<unsigned>(iteration) % (1u << d);
    const std::size_t n = spec.node_count();
    double residual = 0.0;
    std::vector<int> idx(static_cast<std::size_t>(d));
    for (std::size_t t = 0; t < n; ++t) {
      std::size_t rem = t;
      for (int i = 0; i < d; ++i) {
        const auto a = static_cast<std::size_t>(i);
        idx[a] = static_cast<int>(rem / spec.stride(i));
        rem %= spec.stride(i);
        if (flips & (1u << i))
          idx[a] = spec.n_per_dim()[a] - 1 - idx[a];
      }
      const std::size_t node = spec.flat_index(idx);
      const double updated = node_value(v, node);
      residual = std::max(residual, std::abs(updated - v.values[node]));
      v.values[node] = updated;
    }
    return residual;
  }

  const Problem *problem_;
  SolverConfig scfg_;
  std::vector<Vec> candidates_;
  double beta_;
  bool closed_form_ = false;
  mutable Tables tables_;
};

/// One scheme step at x: (value, argmin).
inline SlUpdate sl_update(const ValueField &v, std::span<const double> x,
                          const Problem &problem, const SolverConfig &scfg) {
  return SemiLagrangian(problem, scfg).update(v, x);
}

inline SolveResult solve(const ValueField &initial, const Problem &problem,
                         const SolverConfig &scfg) {
  return SemiLagrangian(problem, scfg).solve(initial);
}

inline SolveResult solve(const Problem &problem, const SolverConfig &scfg) {
  return solve(ValueField(problem.grid, 0.0), problem, scfg);
}

/// Geometric mean of the last 10 successive residual ratios. Zero
/// residuals contribute a ratio of 0.
inline double residual_rate(const SolveReport &report) {
  const auto &r = report.residual_history;
  if (r.size() < 10)
    throw ArgumentError("residual_rate needs at least 10 recorded residuals");
  const std::size_t last = r.size() - 1;
  const std::size_t first = last - 9;
  double log_sum = 0.0;
  int count = 0;
  for (std::size_t i = first + 1; i <= last; ++i) {
    if (r[i - 1] == 0.0 || r[i] == 0.0)
      return 0.0;
    log_sum += std::log(r[i] / r[i - 1]);
    ++count;
  }
  return std::exp(log_sum / count);
}

} // namespace sparse_hjb
