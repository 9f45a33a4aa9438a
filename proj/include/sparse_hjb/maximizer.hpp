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
/// Maximization of g(u) = sum_i (c_i u_i - |u_i|^p) over an l^q ball or box.
///
/// The closed forms cover p in (0, 1]: vertex rules for 0 < p < 1 (under the
/// convexity condition on c), per-coordinate thresholds for boxes, and the
/// Hoelder-equality formula for p = 1, 1 < q < inf. Above threshold the
/// active coordinates carry the sign of c_i. The brute-force search is an
/// independent check that never calls the closed form.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sparse_hjb/errors.hpp"
#include "sparse_hjb/problem.hpp"

namespace sparse_hjb {

enum class Regime {
  sparse_zero,
  single_vertex,
  hull_ambiguous,
  threshold_formula,
  box_threshold
};

inline const char *to_string(Regime r) {
  switch (r) {
  case Regime::sparse_zero:
    return "sparse_zero";
  case Regime::single_vertex:
    return "single_vertex";
  case Regime::hull_ambiguous:
    return "hull_ambiguous";
  case Regime::threshold_formula:
    return "threshold_formula";
  case Regime::box_threshold:
    return "box_threshold";
  }
  return "unknown";
}

/// Normalized switching coefficients c_i = -f_i(y) . phi e^{lambda s} / gamma.
struct SwitchingVector {
  Vec c;

  SwitchingVector() = default;
  explicit SwitchingVector(Vec coeffs) : c(std::move(coeffs)) {
    for (double ci : c)
      if (!std::isfinite(ci))
        throw ArgumentError("switching coefficients must be finite");
  }
  SwitchingVector(std::initializer_list<double> coeffs)
      : SwitchingVector(Vec(coeffs)) {}

  std::size_t size() const { return c.size(); }
  double operator[](std::size_t i) const { return c[i]; }
};

struct MaximizerResult {
  Vec u_star;
  double g_value = 0.0;
  std::vector<int> active_set;
  Regime regime = Regime::sparse_zero;
};

/// g(u) = sum_i c_i u_i - |u_i|^p.
inline double switching_objective(const SwitchingVector &c,
                                  std::span<const double> u, double p) {
  double g = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i)
    g += c[i] * u[i] - (u[i] == 0.0 ? 0.0 : std::pow(std::abs(u[i]), p));
  return g;
}

namespace detail {

inline double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

inline std::vector<int> nonzero_indices(std::span<const double> u,
                                        double eps = 0.0) {
  std::vector<int> idx;
  for (std::size_t i = 0; i < u.size(); ++i)
    if (std::abs(u[i]) > eps)
      idx.push_back(static_cast<int>(i));
  return idx;
}

inline void check_shape(const SwitchingVector &c, const ProblemConfig &cfg) {
  if (c.size() != static_cast<std::size_t>(cfg.m))
    throw ArgumentError("switching vector has " + std::to_string(c.size()) +
                        " entries, control dimension is " +
                        std::to_string(cfg.m));
}

inline MaximizerResult finish(const SwitchingVector &c, const ProblemConfig &cfg,
                              Vec u, Regime regime) {
  MaximizerResult res;
  res.g_value = switching_objective(c, u, cfg.p);
  res.active_set = nonzero_indices(u);
  res.u_star = std::move(u);
  res.regime = regime;
  return res;
}

/// Vertex rule shared by q = 1 and 0 < p < 1: compare 0 with the scaled
/// axis extremes rho e_i sgn c_i. Returns the lexicographically smallest
/// maximizer on ties.
inline MaximizerResult vertex_rule(const SwitchingVector &c,
                                   const ProblemConfig &cfg) {
  const auto m = c.size();
  const double rho = cfg.radius(0);
  const double scale = std::pow(rho, 1.0 - cfg.p);
  double top = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    top = std::max(top, scale * std::abs(c[i]));
  if (top < 1.0)
    return finish(c, cfg, Vec(m, 0.0), Regime::sparse_zero);

  std::vector<Vec> winners;
  if (top == 1.0)
    winners.emplace_back(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (scale * std::abs(c[i]) == top) {
      Vec e(m, 0.0);
      e[i] = rho * sgn(c[i]);
      winners.push_back(std::move(e));
    }
  }
  const bool unique = winners.size() == 1;
  Vec best = *std::min_element(winners.begin(), winners.end());
  return finish(c, cfg, std::move(best),
                unique ? Regime::single_vertex : Regime::hull_ambiguous);
}

inline MaximizerResult box_rule(const SwitchingVector &c,
                                const ProblemConfig &cfg) {
  const auto m = c.size();
  Vec u(m, 0.0);
  bool tie = false;
  bool any = false;
  for (std::size_t i = 0; i < m; ++i) {
    const double r = cfg.radius(static_cast<int>(i));
    const double t = std::pow(r, 1.0 - cfg.p) * std::abs(c[i]);
    if (t > 1.0) {
      u[i] = r * sgn(c[i]);
      any = true;
    } else if (t == 1.0) {
      // {0, r sgn c} for p < 1, the segment between them for p = 1; both
      // have the same lexicographically smallest extreme point.
      u[i] = std::min(0.0, r * sgn(c[i]));
      tie = true;
    }
  }
  Regime regime = tie ? Regime::hull_ambiguous
                      : (any ? Regime::box_threshold : Regime::sparse_zero);
  return finish(c, cfg, std::move(u), regime);
}

inline MaximizerResult holder_rule(const SwitchingVector &c,
                                   const ProblemConfig &cfg) {
  const auto m = c.size();
  const double q = cfg.q.value();
  const double qc = q / (q - 1.0);
  const double rho = cfg.radius(0);
  double denom = 0.0;
  bool boundary = false;
  for (std::size_t i = 0; i < m; ++i) {
    const double a = std::abs(c[i]);
    if (a > 1.0)
      denom += std::pow(a - 1.0, qc);
    else if (a == 1.0)
      boundary = true;
  }
  if (denom == 0.0) {
    if (!boundary)
      return finish(c, cfg, Vec(m, 0.0), Regime::sparse_zero);
    // Hull of 0 and rho e_i sgn c_i over |c_i| = 1, all with g = 0.
    std::vector<Vec> extremes{Vec(m, 0.0)};
    for (std::size_t i = 0; i < m; ++i)
      if (std::abs(c[i]) == 1.0) {
        Vec e(m, 0.0);
        e[i] = rho * sgn(c[i]);
        extremes.push_back(std::move(e));
      }
    return finish(c, cfg, *std::min_element(extremes.begin(), extremes.end()),
                  Regime::hull_ambiguous);
  }
  const double norm = std::pow(denom, 1.0 / q);
  Vec u(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const double a = std::abs(c[i]);
    if (a > 1.0)
      u[i] = rho * sgn(c[i]) * std::pow(a - 1.0, qc - 1.0) / norm;
  }
  return finish(c, cfg, std::move(u), Regime::threshold_formula);
}

} // namespace detail

/// Closed-form maximizer of g over the control set of cfg. Requires
/// 0 < p <= 1. For 0 < p < 1 and q > 1 the condition
///   |c_i| (q - 1) / (p (q - p)) * rho^(1-p) < 1   for all i
/// must hold, otherwise RegimeError is thrown and the caller has to
/// enumerate. Threshold comparisons are exact; ties resolve to the
/// lexicographically smallest extreme point with regime hull_ambiguous.
inline MaximizerResult maximize_closed_form(const SwitchingVector &c,
                                            const ProblemConfig &cfg) {
  detail::check_shape(c, cfg);
  if (cfg.p > 1.0)
    throw UnsupportedError(
        "closed-form maximizer covers 0 < p <= 1; enumerate for p > 1");
  if (!(cfg.p > 0.0))
    throw ArgumentError("p must be > 0");

  if (cfg.q.is_infinite())
    return detail::box_rule(c, cfg);

  const double q = cfg.q.value();
  if (cfg.p == 1.0)
    return q == 1.0 ? detail::vertex_rule(c, cfg) : detail::holder_rule(c, cfg);

  if (q > 1.0) {
    const double factor =
        (q - 1.0) / (cfg.p * (q - cfg.p)) * std::pow(cfg.radius(0), 1.0 - cfg.p);
    for (std::size_t i = 0; i < c.size(); ++i)
      if (!(std::abs(c[i]) * factor < 1.0))
        throw RegimeError("vertex condition fails at coordinate " +
                          std::to_string(i) +
                          "; use the brute-force/enumeration path");
  }
  return detail::vertex_rule(c, cfg);
}

/// Regime label maximize_closed_form would report. Does not throw on the
/// vertex condition: outside it the label is computed from the vertex rule.
inline Regime classify_sparsity(const SwitchingVector &c,
                                const ProblemConfig &cfg) {
  detail::check_shape(c, cfg);
  if (cfg.p > 1.0)
    throw UnsupportedError("sparsity classification needs p <= 1");
  if (cfg.q.is_infinite())
    return detail::box_rule(c, cfg).regime;
  if (cfg.p == 1.0 && cfg.q.value() > 1.0)
    return detail::holder_rule(c, cfg).regime;
  return detail::vertex_rule(c, cfg).regime;
}

/// Best of: the structured sample of the control set, n_samples seeded
/// random members (half uniform in the set, half on its boundary), and a
/// compass-search polish of the incumbent. Deterministic for a fixed seed.
inline MaximizerResult maximize_brute_force(const SwitchingVector &c,
                                            const ProblemConfig &cfg,
                                            int n_samples, std::uint64_t seed,
                                            int density = 64) {
  detail::check_shape(c, cfg);
  if (n_samples < 1000)
    throw ArgumentError("brute force needs at least 1000 samples");
  const ControlSet cs = ControlSet::from_config(cfg);
  const auto m = c.size();
  const double p = cfg.p;

  Vec best(m, 0.0);
  double best_g = 0.0;
  auto consider = [&](const Vec &u) {
    const double g = switching_objective(c, u, p);
    if (g > best_g || (g == best_g && u < best)) {
      best_g = g;
      best = u;
    }
  };

  for (const auto &u : sample_control_set(cs, density).points)
    consider(u);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Vec u(m);
  for (int s = 0; s < n_samples; ++s) {
    for (std::size_t i = 0; i < m; ++i)
      u[i] = unit(rng) * cs.radii()[i];
    if (s % 2 == 1) {
      // push onto the boundary
      if (cs.q().is_infinite()) {
        const std::size_t k = static_cast<std::size_t>(rng() % m);
        u[k] = (u[k] < 0.0 ? -1.0 : 1.0) * cs.radii()[k];
      } else {
        const double q = cs.q().value();
        double s2 = 0.0;
        for (double ui : u)
          s2 += std::pow(std::abs(ui), q);
        const double n = std::pow(s2, 1.0 / q);
        if (n == 0.0)
          continue;
        for (double &ui : u)
          ui *= cs.radius(0) / n;
        u = cs.project_radial(u);
      }
    } else if (!cs.contains(u, 0.0)) {
      continue;
    }
    consider(u);
  }

  // Compass search along coordinate axes and coordinate pairs, projecting
  // radially back into the set (or rescaling onto its boundary). Run once
  // per coordinate support, the remaining coordinates held at zero.
  const double rmax = *std::max_element(cs.radii().begin(), cs.radii().end());
  auto polish = [&](Vec start, const std::vector<char> &free) {
    double start_g = switching_objective(c, start, p);
    std::vector<Vec> dirs;
    for (std::size_t i = 0; i < m; ++i) {
      if (!free[i])
        continue;
      for (double a : {-1.0, 1.0}) {
        Vec e(m, 0.0);
        e[i] = a;
        dirs.push_back(e);
      }
      for (std::size_t j = i + 1; j < m; ++j)
        if (free[j])
          for (double a : {-1.0, 1.0})
            for (double b : {-1.0, 1.0}) {
              Vec f(m, 0.0);
              f[i] = a;
              f[j] = b;
              dirs.push_back(f);
            }
    }
    int rounds = 0;
    for (double step = 0.05 * rmax; step > 1e-10 * rmax && rounds < 4000;
         ++rounds) {
      bool improved = false;
      for (const auto &dvec : dirs) {
        Vec trial = start;
        for (std::size_t i = 0; i < m; ++i)
          trial[i] += step * dvec[i];
        Vec on_boundary = trial;
        trial = cs.project_radial(std::move(trial));
        for (Vec *cand : {&trial, &on_boundary}) {
          if (cand == &on_boundary) {
            if (cs.q().is_infinite())
              continue;
            const double n = lp_norm_p(on_boundary, cs.q().value());
            if (n == 0.0)
              continue;
            const double qn = std::pow(n, 1.0 / cs.q().value());
            for (double &ui : on_boundary)
              ui *= cs.radius(0) / qn;
            on_boundary = cs.project_radial(std::move(on_boundary));
          }
          if (!cs.contains(*cand))
            continue;
          const double g = switching_objective(c, *cand, p);
          if (g > start_g + 1e-14 * (1.0 + std::abs(start_g))) {
            start_g = g;
            start = *cand;
            improved = true;
          }
        }
      }
      if (!improved)
        step *= 0.5;
    }
    if (start_g > best_g || (start_g == best_g && start < best)) {
      best_g = start_g;
      best = std::move(start);
    }
  };
  const Vec seed_point = best;
  for (std::size_t mask = 1; mask < (std::size_t{1} << m); ++mask) {
    std::vector<char> free(m, 0);
    Vec start(m, 0.0);
    for (std::size_t i = 0; i < m; ++i)
      if (mask & (std::size_t{1} << i)) {
        free[i] = 1;
        start[i] = seed_point[i];
      }
    polish(std::move(start), free);
  }

  MaximizerResult res;
  res.g_value = best_g;
  res.active_set = detail::nonzero_indices(best, 1e-9 * rmax);
  if (res.active_set.empty())
    res.regime = Regime::sparse_zero;
  else if (res.active_set.size() == 1)
    res.regime = Regime::single_vertex;
  else
    res.regime = cs.q().is_infinite() ? Regime::box_threshold
                                      : Regime::threshold_formula;
  res.u_star = std::move(best);
  return res;
}

} // namespace sparse_hjb
