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

#include "sparse_hjb/eikonal_oracle.hpp"

using namespace sparse_hjb;

namespace {

// Fine-step cost integration of the plan, independent of the library's
// quadrature: left-point Euler on a very small step plus the closed-form tail.
double euler_cost(const EikonalPlan &pl, double h) {
  double cost = 0.0;
  for (std::size_t k = 0; k + 1 < pl.switch_times.size(); ++k) {
    const double lo = pl.switch_times[k];
    const double hi = pl.switch_times[k + 1];
    const auto steps = static_cast<std::size_t>(std::ceil((hi - lo) / h));
    const double w = (hi - lo) / static_cast<double>(steps);
    for (std::size_t i = 0; i < steps; ++i) {
      const double tm = lo + w * (static_cast<double>(i) + 0.5);
      const Vec y = state_at(pl, tm);
      const Vec u = control_at(pl, tm);
      double q = 0.0, l1 = 0.0;
      for (double yi : y)
        q += yi * yi;
      for (double ui : u)
        l1 += std::abs(ui);
      cost += w * std::exp(-pl.lambda * tm) * (0.5 * q + pl.gamma * l1);
    }
  }
  const double T = pl.last_switch();
  double q = 0.0;
  for (double yi : pl.final_state)
    q += yi * yi;
  return cost + std::exp(-pl.lambda * T) * 0.5 * q / pl.lambda;
}

} // namespace

TEST(Plan, InsideSquareHasNoPhases) {
  const auto pl = plan(Vec{0.1, -0.15}, 0.2, 1.0, 1.0);
  EXPECT_EQ(pl.phase_count(), 0u);
  EXPECT_EQ(pl.final_state, (Vec{0.1, -0.15}));
  EXPECT_EQ(control_at(pl, 0.3), (Vec{0.0, 0.0}));
  EXPECT_EQ(state_at(pl, 4.0), (Vec{0.1, -0.15}));
}

TEST(Plan, OneDimensional) {
  const auto pl = plan(Vec{1.0}, 0.2, 1.0, 1.0);
  ASSERT_EQ(pl.phase_count(), 1u);
  EXPECT_NEAR(pl.last_switch(), 0.8, 1e-15);
  EXPECT_EQ(pl.phases[0], (Vec{-1.0}));
  EXPECT_DOUBLE_EQ(pl.final_state[0], 0.2);
  EXPECT_NEAR(state_at(pl, 0.4)[0], 0.6, 1e-15);
}

TEST(Plan, TwoDimensionalCaseThree) {
  const auto pl = plan(Vec{0.4, 0.8}, 0.2, 1.0, 1.0);
  ASSERT_EQ(pl.phase_count(), 2u);
  EXPECT_NEAR(pl.radii[0], std::sqrt(0.8), 1e-12);
  const double tau1 = pl.switch_times[1];
  const double tau2 = pl.switch_times[2] - tau1;
  EXPECT_NEAR(tau1, 0.447214, 1e-6);
  EXPECT_NEAR(tau2, 0.2, 1e-12);
  EXPECT_NEAR(pl.phases[0][0], -0.447214, 1e-6);
  EXPECT_NEAR(pl.phases[0][1], -0.894427, 1e-6);
  EXPECT_NEAR(pl.phases[1][0], 0.0, 1e-15);
  EXPECT_NEAR(pl.phases[1][1], -1.0, 1e-12);
  EXPECT_NEAR(pl.final_state[0], 0.2, 1e-15);
  EXPECT_NEAR(pl.final_state[1], 0.2, 1e-15);
  const Vec y1 = state_at(pl, tau1);
  EXPECT_NEAR(y1[0], 0.2, 1e-12);
  EXPECT_NEAR(y1[1], 0.4, 1e-12);
}

TEST(Plan, ForwardIntegrationReachesFinalState) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int n = 0; n < 50; ++n) {
    const Vec x0{U(rng), U(rng), U(rng)};
    const auto pl = plan(x0, 0.2, 1.0, 1.0);
    Vec y = x0;
    const double h = 1e-5;
    for (double t = 0.0; t < pl.last_switch() + 0.1; t += h) {
      const Vec u = control_at(pl, t);
      for (std::size_t i = 0; i < 3; ++i)
        y[i] += h * u[i];
    }
    for (std::size_t i = 0; i < 3; ++i)
      EXPECT_NEAR(y[i], pl.final_state[i], 1e-4);
  }
}

TEST(Plan, Invariants) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const double lg = 0.2;
  for (int n = 0; n < 300; ++n) {
    const Vec x0{U(rng), U(rng), U(rng)};
    const auto pl = plan(x0, 0.2, 1.0, 1.0);
    EXPECT_TRUE(std::isfinite(pl.last_switch()));
    for (std::size_t i = 0; i < 3; ++i) {
      if (std::abs(x0[i]) > lg)
        EXPECT_DOUBLE_EQ(pl.final_state[i], std::copysign(lg, x0[i]));
      else {
        EXPECT_EQ(pl.final_state[i], x0[i]);
        for (const auto &u : pl.phases)
          EXPECT_EQ(u[i], 0.0);
      }
    }
    for (const auto &u : pl.phases)
      EXPECT_NEAR(std::sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2]), 1.0, 1e-12);

    // sign and permutation equivariance
    const Vec flipped{-x0[0], x0[1], x0[2]};
    const auto pf = plan(flipped, 0.2, 1.0, 1.0);
    const Vec perm{x0[2], x0[0], x0[1]};
    const auto pp = plan(perm, 0.2, 1.0, 1.0);
    for (double t : {0.05, 0.3, 0.7, 1.5}) {
      const Vec u = control_at(pl, t), uf = control_at(pf, t), up = control_at(pp, t);
      EXPECT_NEAR(uf[0], -u[0], 1e-12);
      EXPECT_NEAR(uf[1], u[1], 1e-12);
      EXPECT_NEAR(up[0], u[2], 1e-12);
      EXPECT_NEAR(up[1], u[0], 1e-12);
      EXPECT_NEAR(up[2], u[1], 1e-12);
    }
  }
}

TEST(Plan, BoundaryCoordinateIsInactive) {
  const auto pl = plan(Vec{0.2, 0.5}, 0.2, 1.0, 1.0);
  for (const auto &u : pl.phases)
    EXPECT_EQ(u[0], 0.0);
}

TEST(Plan, TiesKeepIndexOrder) {
  const auto pl = plan(Vec{0.5, -0.5}, 0.2, 1.0, 1.0);
  EXPECT_EQ(pl.sorted_perm, (std::vector<int>{0, 1}));
  EXPECT_EQ(pl.phase_count(), 1u);
  EXPECT_NEAR(pl.final_state[1], -0.2, 1e-15);
}

TEST(Plan, RejectsBadInput) {
  EXPECT_THROW(plan(Vec{0.1}, 0.2, 1.0, 0.0), ArgumentError);
  EXPECT_THROW(plan(Vec{NAN}, 0.2, 1.0, 1.0), ArgumentError);
}

TEST(OracleTrajectory, OriginIsConstant) {
  const auto tr = oracle_trajectory(plan(Vec{0.0, 0.0}, 0.2, 1.0, 1.0), 0.1, 2.0);
  for (const auto &y : tr.states)
    EXPECT_EQ(y, (Vec{0.0, 0.0}));
  EXPECT_EQ(tr.total_cost(), 0.0);
}

TEST(OracleTrajectory, OneDimensionalSamples) {
  const auto tr = oracle_trajectory(plan(Vec{1.0}, 0.2, 1.0, 1.0), 0.1, 2.0);
  EXPECT_EQ(tr.size(), 21u);
  EXPECT_NEAR(tr.states[4][0], 0.6, 1e-12);
  EXPECT_NEAR(tr.states.back()[0], 0.2, 1e-15);
}

TEST(OracleValue, InsideSquare) {
  EXPECT_NEAR(oracle_value(plan(Vec{0.1, 0.1}, 0.2, 1.0, 1.0)), 0.05, 1e-12);
  EXPECT_EQ(oracle_value(plan(Vec{0.0, 0.0}, 0.2, 1.0, 1.0)), 0.0);
}

TEST(OracleValue, SelfConvergenceAndEulerCrossCheck) {
  const auto pl = plan(Vec{1.0}, 0.2, 1.0, 1.0);
  EXPECT_LT(std::abs(oracle_value(pl, 200) - oracle_value(pl, 400)), 1e-9);
  EXPECT_NEAR(oracle_value(pl), euler_cost(pl, 1e-5), 1e-8);
  const auto p2 = plan(Vec{0.4, 0.8}, 0.2, 1.0, 1.0);
  EXPECT_NEAR(oracle_value(p2), euler_cost(p2, 1e-5), 1e-8);
  EXPECT_THROW(oracle_value(pl, 50), ArgumentError);
}

TEST(OracleValue, MatchesTrajectoryCostPlusTail) {
  const auto pl = plan(Vec{-0.75, -0.6}, 0.2, 1.0, 1.0);
  const auto tr = oracle_trajectory(pl, 0.01, 10.0);
  const Vec &y = tr.states.back();
  const double tail = std::exp(-0.2 * 10.0) * 0.5 * (y[0] * y[0] + y[1] * y[1]) / 0.2;
  EXPECT_NEAR(tr.total_cost() + tail, oracle_value(pl), 1e-8);
}
