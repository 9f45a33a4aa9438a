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

#include "sparse_hjb/problem.hpp"

using namespace sparse_hjb;

namespace {

ControlSet ball(double q, double rho, int m) {
  return ControlSet(ConstraintExponent::finite(q), Vec(static_cast<std::size_t>(m), rho));
}

bool has_point(const std::vector<Vec> &pts, const Vec &u) {
  for (const auto &p : pts) {
    bool same = p.size() == u.size();
    for (std::size_t i = 0; same && i < u.size(); ++i)
      same = std::abs(p[i] - u[i]) < 1e-12;
    if (same)
      return true;
  }
  return false;
}

} // namespace

TEST(Dynamics, EikonalReturnsControl) {
  const auto dyn = Dynamics::eikonal(2);
  const Vec f = eval_dynamics(dyn, Vec{0.3, -0.2}, Vec{1.0, 0.0});
  EXPECT_EQ(f, (Vec{1.0, 0.0}));
}

TEST(Dynamics, NonlinearOriginIsEquilibrium) {
  const auto dyn = Dynamics::nonlinear_test2();
  const Vec f = eval_dynamics(dyn, Vec{0.0, 0.0}, Vec{0.0, 0.0});
  EXPECT_DOUBLE_EQ(f[0], 0.0);
  EXPECT_DOUBLE_EQ(f[1], 0.0);
}

TEST(Dynamics, NonlinearSecondEquilibrium) {
  const auto dyn = Dynamics::nonlinear_test2(0.6, 0.4);
  const Vec f = eval_dynamics(dyn, Vec{0.6, 0.4}, Vec{0.0, 0.0});
  EXPECT_NEAR(f[0], 0.0, 1e-15);
  EXPECT_NEAR(f[1], 0.0, 1e-15);
}

TEST(Dynamics, NonlinearDirectArithmetic) {
  const auto dyn = Dynamics::nonlinear_test2(0.6, 0.4);
  const Vec f = eval_dynamics(dyn, Vec{-0.5, 0.25}, Vec{0.3, -0.7});
  EXPECT_NEAR(f[0], -0.5 * (-0.5 - 0.6) + 0.3, 1e-15);
  EXPECT_NEAR(f[1], 0.25 * (0.25 - 0.4) - 0.7, 1e-15);
}

TEST(Dynamics, DimensionMismatchThrows) {
  const auto dyn = Dynamics::eikonal(2);
  EXPECT_THROW(eval_dynamics(dyn, Vec{0.1}, Vec{0.0, 0.0}), ArgumentError);
  EXPECT_THROW(eval_dynamics(dyn, Vec{0.1, 0.2}, Vec{0.0}), ArgumentError);
}

TEST(Dynamics, AffineInControl) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (const auto &dyn : {Dynamics::eikonal(2), Dynamics::nonlinear_test2()}) {
    for (int n = 0; n < 200; ++n) {
      const Vec x{U(rng), U(rng)}, u{U(rng), U(rng)}, w{U(rng), U(rng)};
      const double a = 0.5 * (U(rng) + 1.0);
      const Vec mix{a * u[0] + (1 - a) * w[0], a * u[1] + (1 - a) * w[1]};
      const Vec fm = dyn(x, mix), fu = dyn(x, u), fw = dyn(x, w);
      for (int i = 0; i < 2; ++i)
        EXPECT_NEAR(fm[i], a * fu[i] + (1 - a) * fw[i], 1e-12);
    }
  }
}

TEST(Dynamics, JacobianMatchesFiniteDifferences) {
  const auto dyn = Dynamics::nonlinear_test2(0.6, 0.4);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const double h = 1e-6;
  for (int n = 0; n < 50; ++n) {
    const Vec x{U(rng), U(rng)}, u{U(rng), U(rng)};
    const Vec J = dyn.jacobian(x, u);
    for (int j = 0; j < 2; ++j) {
      Vec xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      const Vec fp = dyn(xp, u), fm = dyn(xm, u);
      for (int i = 0; i < 2; ++i)
        EXPECT_NEAR(J[static_cast<std::size_t>(2 * i + j)], (fp[i] - fm[i]) / (2 * h),
                    1e-6);
    }
  }
}

TEST(Dynamics, CustomWithoutJacobian) {
  const auto dyn = Dynamics::custom(
      1, [](std::span<const double> x) { return Vec{-x[0]}; },
      {[](std::span<const double>) { return Vec{2.0}; }});
  EXPECT_FALSE(dyn.has_jacobian());
  EXPECT_DOUBLE_EQ(dyn(Vec{0.5}, Vec{0.25})[0], 0.0);
}

TEST(RunningCost, Examples) {
  const auto c1 = RunningCost::quadratic(1.0, 1.0);
  EXPECT_DOUBLE_EQ(eval_cost(c1, Vec{0.0, 0.0}, Vec{0.0, 0.0}), 0.0);
  EXPECT_DOUBLE_EQ(eval_cost(c1, Vec{1.0, 0.0}, Vec{0.5, -0.5}), 1.5);
  const auto c05 = RunningCost::quadratic(1.0, 0.5);
  EXPECT_DOUBLE_EQ(eval_cost(c05, Vec{0.0, 0.0}, Vec{0.25, 0.0}), 0.5);
}

TEST(RunningCost, PenaltyIsNonnegative) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  for (double p : {0.5, 1.0, 2.0}) {
    const auto cost = RunningCost::quadratic(0.7, p);
    for (int n = 0; n < 200; ++n) {
      const Vec x{U(rng), U(rng)}, u{U(rng), U(rng)};
      EXPECT_GE(cost(x, u), cost(x, Vec{0.0, 0.0}));
    }
  }
}

TEST(RunningCost, GradientOfQuadratic) {
  const auto cost = RunningCost::quadratic(1.0, 1.0);
  EXPECT_EQ(cost.state_gradient(Vec{0.3, -0.4}), (Vec{0.3, -0.4}));
}

TEST(LpNorm, Examples) {
  EXPECT_DOUBLE_EQ(lp_norm_p(Vec{0.0, 0.0}, 0.5), 0.0);
  EXPECT_DOUBLE_EQ(lp_norm_p(Vec{1.0, 1.0}, 1.0), 2.0);
  EXPECT_NEAR(lp_norm_p(Vec{0.09, 0.16}, 0.5), 0.7, 1e-15);
}

TEST(ProblemConfig, Validation) {
  ProblemConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.lambda = 0.0;
  EXPECT_THROW(cfg.validate(), ArgumentError);
  cfg = {};
  cfg.p = 2.5;
  EXPECT_THROW(cfg.validate(), ArgumentError);
  cfg = {};
  cfg.rho = {1.0, 2.0};
  EXPECT_THROW(cfg.validate(), ArgumentError);
  cfg.q = ConstraintExponent::infinity();
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_DOUBLE_EQ(cfg.radius(1), 2.0);
  EXPECT_THROW(ConstraintExponent::finite(0.5), ArgumentError);
}

TEST(ControlSet, Membership) {
  const auto cs = ball(2.0, 1.0, 2);
  EXPECT_TRUE(cs.contains(Vec{0.6, 0.8}));
  EXPECT_FALSE(cs.contains(Vec{0.6, 0.81}));
  const ControlSet box(ConstraintExponent::infinity(), Vec{1.0, 0.5});
  EXPECT_TRUE(box.contains(Vec{-1.0, 0.5}));
  EXPECT_FALSE(box.contains(Vec{0.0, 0.6}));
}

TEST(Sampling, AnchorsForDisk) {
  const auto s = sample_control_set(ball(2.0, 1.0, 2), 4);
  for (const Vec &u : {Vec{0, 0}, Vec{1, 0}, Vec{-1, 0}, Vec{0, 1}, Vec{0, -1}})
    EXPECT_TRUE(has_point(s.points, u));
  EXPECT_TRUE(s.structured);
}

TEST(Sampling, BoxCorners) {
  const ControlSet box(ConstraintExponent::infinity(), Vec{1.0, 1.0});
  const auto s = sample_control_set(box, 2);
  for (const Vec &u : {Vec{1, 1}, Vec{1, -1}, Vec{-1, 1}, Vec{-1, -1}})
    EXPECT_TRUE(has_point(s.points, u));
}

TEST(Sampling, L1BallMembership) {
  const auto s = sample_control_set(ball(1.0, 1.0, 2), 8);
  for (const auto &u : s.points)
    EXPECT_LE(std::abs(u[0]) + std::abs(u[1]), 1.0 + 1e-12);
}

TEST(Sampling, AllSetsMembershipAndDeterminism) {
  std::vector<ControlSet> sets{ball(1.0, 1.3, 1), ball(2.0, 0.7, 2), ball(1.5, 2.0, 2),
                               ball(2.0, 1.0, 3),
                               ControlSet(ConstraintExponent::infinity(), Vec{0.5, 1.5, 1.0})};
  for (const auto &cs : sets) {
    const auto a = sample_control_set(cs, 16);
    const auto b = sample_control_set(cs, 16);
    EXPECT_EQ(a.points, b.points);
    for (const auto &u : a.points)
      EXPECT_TRUE(cs.contains(u, 1e-12));
  }
}

TEST(Sampling, FallbackIsFlagged) {
  const auto s = sample_control_set(ball(2.0, 1.0, 3), 8);
  EXPECT_FALSE(s.structured);
  EXPECT_TRUE(has_point(s.points, Vec{0, 0, 0}));
  EXPECT_TRUE(has_point(s.points, Vec{0, 0, -1}));
  EXPECT_GT(s.points.size(), 60u);
}

TEST(Sampling, RejectsBadDensity) {
  EXPECT_THROW(sample_control_set(ball(2.0, 1.0, 2), 0), ArgumentError);
}
