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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "sparse_hjb/hjb_solver.hpp"

using namespace sparse_hjb;

namespace {

Problem eikonal(int d, double lambda, double p, double mesh, RunningCost cost) {
  ProblemConfig cfg;
  cfg.lambda = lambda;
  cfg.p = p;
  cfg.m = d;
  cfg.d = d;
  return Problem{cfg, Dynamics::eikonal(d), std::move(cost), ControlSet::from_config(cfg),
                 GridSpec::uniform(d, -1.0, 1.0, mesh)};
}

Problem preset(double p = 1.0) {
  return eikonal(2, 0.2, p, 0.025, RunningCost::quadratic(1.0, p));
}

SolverConfig config(double dt = 0.025, int density = 16) {
  SolverConfig s;
  s.dt = dt;
  s.control_density = density;
  return s;
}

// Geometric-series fixed point of v = dt + e^{-lambda dt} v.
double constant_fixed_point(double lambda, double dt) {
  return dt / (1.0 - std::exp(-lambda * dt));
}

} // namespace

TEST(SlUpdate, ZeroCostZeroField) {
  const auto pr = eikonal(2, 0.2, 1.0, 0.1, RunningCost::constant(0.0));
  const ValueField v(pr.grid, 0.0);
  const auto up = sl_update(v, Vec{0.3, -0.4}, pr, config());
  EXPECT_EQ(up.value, 0.0);
  EXPECT_EQ(up.control, (Vec{0.0, 0.0}));
}

TEST(SlUpdate, ConstantCostFixedPoint) {
  const double fp = constant_fixed_point(0.2, 0.025);
  EXPECT_NEAR(fp, 5.012510, 1e-6);
  const auto pr = eikonal(2, 0.2, 1.0, 0.1, RunningCost::constant(1.0));
  const ValueField v(pr.grid, fp);
  for (const Vec &x : {Vec{0.0, 0.0}, Vec{0.95, -0.3}, Vec{-1.0, 1.0}})
    EXPECT_NEAR(sl_update(v, x, pr, config()).value, fp, 1e-12);
}

TEST(SlUpdate, StaysPutInsideSparsityRegion) {
  const auto pr = preset();
  const auto sol = solve(pr, config());
  const auto up = sl_update(sol.value, Vec{0.1, 0.0}, pr, config());
  EXPECT_EQ(up.control, (Vec{0.0, 0.0}));
}

TEST(Solve, ZeroCostConvergesImmediately) {
  const auto pr = eikonal(2, 0.2, 1.0, 0.1, RunningCost::constant(0.0));
  const auto sol = solve(pr, config());
  EXPECT_TRUE(sol.report.converged);
  EXPECT_EQ(sol.report.iterations, 1);
  for (double v : sol.value.values)
    EXPECT_EQ(v, 0.0);
}

TEST(Solve, ConstantCostEveryNode) {
  for (Sweep sw : {Sweep::jacobi, Sweep::gauss_seidel}) {
    for (bool elim : {true, false}) {
      const auto pr = eikonal(2, 0.2, 1.0, 0.1, RunningCost::constant(1.0));
      auto sc = config();
      sc.tol = 1e-10;
      sc.sweep = sw;
      sc.eliminate_self_weight = elim;
      const auto sol = solve(pr, sc);
      EXPECT_TRUE(sol.report.converged);
      const double fp = constant_fixed_point(0.2, 0.025);
      // residual stop: distance to the fixed point is at most tol beta/(1-beta)
      const double beta = std::exp(-0.2 * 0.025);
      const double bound = sc.tol * beta / (1.0 - beta);
      for (double v : sol.value.values)
        EXPECT_NEAR(v, fp, bound);
    }
  }
}

TEST(Solve, InRegionValue) {
  const auto sol = solve(preset(), config());
  EXPECT_TRUE(sol.report.converged);
  EXPECT_NEAR(interpolate(sol.value, Vec{0.1, 0.0}), 0.01 / (2 * 0.2), 5e-3);
  EXPECT_NEAR(interpolate(sol.value, Vec{0.1, 0.1}), 0.02 / (2 * 0.2), 5e-3);
}

TEST(Solve, EliminationKeepsFixedPoint) {
  const auto pr = eikonal(1, 0.2, 1.0, 0.05, RunningCost::quadratic(1.0, 1.0));
  auto a = config(0.05);
  a.tol = 1e-11;
  auto b = a;
  b.eliminate_self_weight = false;
  const auto va = solve(pr, a).value, vb = solve(pr, b).value;
  for (std::size_t k = 0; k < va.values.size(); ++k)
    EXPECT_NEAR(va.values[k], vb.values[k], 1e-8);
}

TEST(Solve, GaussSeidelMatchesJacobi) {
  const auto pr = eikonal(2, 0.2, 1.0, 0.1, RunningCost::quadratic(1.0, 1.0));
  auto a = config(0.1);
  a.tol = 1e-10;
  auto b = a;
  b.sweep = Sweep::gauss_seidel;
  const auto va = solve(pr, a).value, vb = solve(pr, b).value;
  for (std::size_t k = 0; k < va.values.size(); ++k)
    EXPECT_NEAR(va.values[k], vb.values[k], 1e-7);
}

TEST(Solve, ThreadCountDoesNotChangeResult) {
  const auto pr = eikonal(2, 0.2, 1.0, 0.1, RunningCost::quadratic(1.0, 1.0));
  auto a = config(0.1);
  a.threads = 1;
  auto b = a;
  b.threads = 3;
  const auto ra = solve(pr, a), rb = solve(pr, b);
  EXPECT_EQ(ra.value.values, rb.value.values);
  EXPECT_EQ(ra.policy, rb.policy);
}

TEST(Solve, MaxItersReportsNonConvergence) {
  const auto pr = eikonal(2, 0.2, 1.0, 0.1, RunningCost::constant(1.0));
  auto sc = config();
  sc.max_iters = 3;
  sc.eliminate_self_weight = false;
  const auto sol = solve(pr, sc);
  EXPECT_FALSE(sol.report.converged);
  EXPECT_EQ(sol.report.iterations, 3);
}

TEST(Solve, RejectsBadConfig) {
  const auto pr = preset();
  auto sc = config();
  sc.dt = 0.0;
  EXPECT_THROW(solve(pr, sc), ArgumentError);
  EXPECT_THROW(solve(ValueField(GridSpec::uniform(2, -1, 1, 0.5)), pr, config()),
               ArgumentError);
}

TEST(Solve, NanIsNumericalError) {
  const auto pr = eikonal(1, 0.2, 1.0, 0.1,
                          RunningCost([](std::span<const double> x) {
                            return x[0] > 0.5 ? NAN : 1.0;
                          },
                                      [](std::span<const double> x) {
                                        return Vec(x.size(), 0.0);
                                      },
                                      0.0, 1.0));
  EXPECT_THROW(solve(pr, config()), NumericalError);
}

TEST(Solve, PolicyMatchesFinalUpdate) {
  const auto pr = eikonal(2, 0.2, 1.0, 0.1, RunningCost::quadratic(1.0, 1.0));
  const auto sc = config(0.1);
  const auto sol = solve(pr, sc);
  const SemiLagrangian scheme(pr, sc);
  for (std::size_t k = 0; k < pr.grid.node_count(); k += 7)
    EXPECT_EQ(sol.policy[k], scheme.update(sol.value, pr.grid.node_coords(k)).control);
}

TEST(Operator, MonotoneContractiveNonnegative) {
  const auto pr = eikonal(2, 0.2, 1.0, 0.1, RunningCost::quadratic(1.0, 1.0));
  const SemiLagrangian T(pr, config(0.1));
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> U(0.0, 2.0);
  for (int n = 0; n < 5; ++n) {
    ValueField v(pr.grid), w(pr.grid);
    for (std::size_t k = 0; k < v.values.size(); ++k) {
      v.values[k] = U(rng);
      w.values[k] = v.values[k] + U(rng);
    }
    const auto Tv = T.apply(v), Tw = T.apply(w);
    double dv = 0.0, dT = 0.0;
    for (std::size_t k = 0; k < v.values.size(); ++k) {
      EXPECT_LE(Tv.values[k], Tw.values[k] + 1e-15);
      EXPECT_GE(Tv.values[k], 0.0);
      dv = std::max(dv, std::abs(v.values[k] - w.values[k]));
      dT = std::max(dT, std::abs(Tv.values[k] - Tw.values[k]));
    }
    EXPECT_LE(dT, T.discount() * dv + 1e-10);
  }
}

TEST(Operator, IteratesFromZeroStayNonnegative) {
  const auto pr = eikonal(2, 0.2, 0.5, 0.1, RunningCost::quadratic(1.0, 0.5));
  const SemiLagrangian T(pr, config(0.1));
  ValueField v(pr.grid, 0.0);
  for (int it = 0; it < 10; ++it) {
    v = T.apply(v);
    for (double x : v.values)
      ASSERT_GE(x, 0.0);
  }
}

TEST(Candidates, ZeroFirstThenLexicographic) {
  const auto pr = preset();
  const auto c = candidate_controls(pr.controls, 16);
  EXPECT_EQ(c.front(), (Vec{0.0, 0.0}));
  EXPECT_TRUE(std::is_sorted(c.begin() + 1, c.end()));
  EXPECT_DOUBLE_EQ(default_solver_config(pr).dt, 0.025);
}

TEST(ResidualRate, Synthetic) {
  SolveReport r;
  for (int n = 1; n <= 30; ++n)
    r.residual_history.push_back(std::pow(0.9, n));
  EXPECT_NEAR(residual_rate(r), 0.9, 1e-12);
  SolveReport g;
  for (int n = 1; n <= 12; ++n)
    g.residual_history.push_back(std::pow(1.5, n));
  EXPECT_GT(residual_rate(g), 1.0);
  SolveReport few;
  few.residual_history = {1.0, 0.5};
  EXPECT_THROW(residual_rate(few), ArgumentError);
}

TEST(ResidualRate, ConstantCostRun) {
  const auto pr = eikonal(2, 0.2, 1.0, 0.1, RunningCost::constant(1.0));
  auto sc = config();
  sc.eliminate_self_weight = false;
  sc.tol = 1e-9;
  const auto sol = solve(pr, sc);
  EXPECT_LE(residual_rate(sol.report), std::exp(-0.005) + 0.01);
}

TEST(Consistency, ArgminSparsityMatchesClassifier) {
  const auto pr = preset();
  const auto sc = config();
  const auto sol = solve(pr, sc);
  std::size_t total = 0, agree = 0;
  for (std::size_t k = 0; k < pr.grid.node_count(); ++k) {
    const Vec x = pr.grid.node_coords(k);
    if (std::max(std::abs(x[0]), std::abs(x[1])) > 0.9)
      continue;
    const Vec g = gradient_estimate(sol.value, x);
    const SwitchingVector c{-g[0], -g[1]};
    const auto regime = classify_sparsity(c, pr.cfg);
    if (regime == Regime::hull_ambiguous)
      continue;
    ++total;
    const bool zero_policy = sol.policy[k] == Vec{0.0, 0.0};
    agree += (regime == Regime::sparse_zero) == zero_policy;
  }
  EXPECT_GE(static_cast<double>(agree) / static_cast<double>(total), 0.9);
}
