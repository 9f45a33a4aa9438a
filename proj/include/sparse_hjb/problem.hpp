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
/// Problem parameters, admissible control sets, control-affine dynamics and
/// running costs. Everything here is immutable after construction.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sparse_hjb/errors.hpp"

namespace sparse_hjb {

using Vec = std::vector<double>;

/// Exponent q of the constraint set. q = infinity is a distinct state, never
/// a large float.
class ConstraintExponent {
public:
  static ConstraintExponent finite(double q) {
    if (!(q >= 1.0) || !std::isfinite(q))
      throw ArgumentError("constraint exponent q must be finite and >= 1");
    return ConstraintExponent(q, false);
  }
  static ConstraintExponent infinity() { return ConstraintExponent(0.0, true); }

  bool is_infinite() const { return infinite_; }
  /// Only meaningful when !is_infinite().
  double value() const { return q_; }

  std::string to_string() const {
    if (infinite_)
      return "inf";
    std::string s = std::to_string(q_);
    s.erase(s.find_last_not_of('0') + 1);
    if (!s.empty() && s.back() == '.')
      s.pop_back();
    return s;
  }

  friend bool operator==(const ConstraintExponent &a,
                         const ConstraintExponent &b) {
    return a.infinite_ == b.infinite_ && (a.infinite_ || a.q_ == b.q_);
  }

private:
  ConstraintExponent(double q, bool inf) : q_(q), infinite_(inf) {}
  double q_;
  bool infinite_;
};

/// Scalar problem parameters. rho holds one radius (q < inf) or one radius
/// per control coordinate (q = inf only).
struct ProblemConfig {
  double lambda = 0.2;
  double gamma = 1.0;
  double p = 1.0;
  ConstraintExponent q = ConstraintExponent::finite(2.0);
  Vec rho{1.0};
  int m = 2;
  int d = 2;

  double radius(int i) const {
    return rho.size() == 1 ? rho[0] : rho.at(static_cast<std::size_t>(i));
  }

  void validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
      throw ArgumentError("lambda must be > 0");
    if (!(gamma >= 0.0) || !std::isfinite(gamma))
      throw ArgumentError("gamma must be >= 0");
    if (!(p > 0.0) || !(p <= 2.0))
      throw ArgumentError("penalty exponent p must lie in (0, 2]");
    if (m < 1 || d < 1)
      throw ArgumentError("dimensions m and d must be positive");
    if (rho.empty())
      throw ArgumentError("rho must not be empty");
    for (double r : rho)
      if (!(r > 0.0) || !std::isfinite(r))
        throw ArgumentError("every radius must be > 0");
    if (rho.size() != 1) {
      if (rho.size() != static_cast<std::size_t>(m))
        throw ArgumentError("per-coordinate radii need exactly m entries");
      if (!q.is_infinite() &&
          std::any_of(rho.begin(), rho.end(),
                      [&](double r) { return r != rho[0]; }))
        throw ArgumentError("per-coordinate radii are only allowed for q = inf");
    }
  }
};

/// Sum of |u_i|^p (the p-th power of the l^p quasi-norm).
inline double lp_norm_p(std::span<const double> u, double p) {
  if (!(p > 0.0))
    throw ArgumentError("lp_norm_p requires p > 0");
  double s = 0.0;
  for (double ui : u)
    if (ui != 0.0)
      s += std::pow(std::abs(ui), p);
  return s;
}

/// l^q ball of radius rho, or the box prod [-rho_i, rho_i] when q = inf.
class ControlSet {
public:
  ControlSet(ConstraintExponent q, Vec radii) : q_(q), radii_(std::move(radii)) {
    if (radii_.empty())
      throw ArgumentError("control set needs at least one coordinate");
    for (double r : radii_)
      if (!(r > 0.0))
        throw ArgumentError("control set radii must be > 0");
    if (!q_.is_infinite() &&
        std::any_of(radii_.begin(), radii_.end(),
                    [&](double r) { return r != radii_[0]; }))
      throw ArgumentError("per-coordinate radii are only allowed for q = inf");
  }

  static ControlSet from_config(const ProblemConfig &cfg) {
    Vec radii(static_cast<std::size_t>(cfg.m));
    for (int i = 0; i < cfg.m; ++i)
      radii[static_cast<std::size_t>(i)] = cfg.radius(i);
    return ControlSet(cfg.q, std::move(radii));
  }

  int dim() const { return static_cast<int>(radii_.size()); }
  const ConstraintExponent &q() const { return q_; }
  const Vec &radii() const { return radii_; }
  double radius(int i) const { return radii_.at(static_cast<std::size_t>(i)); }

  bool contains(std::span<const double> u, double slack = 1e-12) const {
    if (u.size() != radii_.size())
      throw ArgumentError("control dimension mismatch");
    if (q_.is_infinite()) {
      for (std::size_t i = 0; i < u.size(); ++i)
        if (std::abs(u[i]) > radii_[i] + slack)
          return false;
      return true;
    }
    const double q = q_.value();
    double s = 0.0;
    for (double ui : u)
      s += std::pow(std::abs(ui), q);
    return s <= std::pow(radii_[0], q) + slack;
  }

  /// Scales u back onto the set along the ray through the origin (q < inf)
  /// or clamps per coordinate (q = inf). Members are returned unchanged.
  Vec project_radial(Vec u) const {
    if (q_.is_infinite()) {
      for (std::size_t i = 0; i < u.size(); ++i)
        u[i] = std::clamp(u[i], -radii_[i], radii_[i]);
      return u;
    }
    const double q = q_.value();
    double s = 0.0;
    for (double ui : u)
      s += std::pow(std::abs(ui), q);
    const double norm = std::pow(s, 1.0 / q);
    if (norm > radii_[0]) {
      const double scale = radii_[0] / norm;
      for (double &ui : u)
        ui *= scale;
      if (!contains(u, 0.0))
        for (double &ui : u)
          ui *= 1.0 - 1e-15;
    }
    return u;
  }

private:
  ConstraintExponent q_;
  Vec radii_;
};

/// Finite candidate set drawn from a ControlSet.
struct ControlSample {
  std::vector<Vec> points;
  /// False when the (q, m) combination had no structured sampler and the
  /// points came from seeded rejection sampling on the bounding box.
  bool structured = true;
};

namespace detail {

inline void snap_tiny(Vec &u, double scale) {
  for (double &ui : u)
    if (std::abs(ui) < 1e-14 * scale)
      ui = 0.0;
}

inline void sort_unique(std::vector<Vec> &pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
}

} // namespace detail

/// Discrete search set for Hamiltonian minimization. Always contains 0 and
/// the signed axis extremes +-rho_i e_i.
///
/// Structured layouts:
///   m = 1: `density` equispaced points of [-rho, rho];
///   m = 2, q < inf: `density` boundary directions on each of density/4
///     radial shells (outermost shell is the boundary);
///   q = inf, m <= 8: the lattice {-rho_i, 0, rho_i}^m, and for m = 2 the
///     (density+1)^2 tensor grid.
/// Other combinations fall back to seeded rejection sampling on the
/// bounding box and report structured = false.
inline ControlSample sample_control_set(const ControlSet &cs, int density) {
  if (density < 1)
    throw ArgumentError("control density must be >= 1");
  const int m = cs.dim();
  const auto um = static_cast<std::size_t>(m);
  ControlSample out;
  auto &pts = out.points;
  const double scale = *std::max_element(cs.radii().begin(), cs.radii().end());

  pts.emplace_back(um, 0.0);
  for (int i = 0; i < m; ++i) {
    for (double sgn : {-1.0, 1.0}) {
      Vec e(um, 0.0);
      e[static_cast<std::size_t>(i)] = sgn * cs.radius(i);
      pts.push_back(cs.project_radial(std::move(e)));
    }
  }

  bool structured = false;
  if (m == 1) {
    const double r = cs.radius(0);
    if (density >= 2)
      for (int k = 0; k < density; ++k)
        pts.push_back(Vec{-r + 2.0 * r * k / (density - 1)});
    structured = true;
  }
  if (cs.q().is_infinite()) {
    if (m <= 8) {
      std::size_t total = 1;
      for (int i = 0; i < m; ++i)
        total *= 3;
      for (std::size_t code = 0; code < total; ++code) {
        Vec u(um);
        std::size_t c = code;
        for (std::size_t i = 0; i < um; ++i, c /= 3)
          u[i] = (static_cast<double>(c % 3) - 1.0) * cs.radii()[i];
        pts.push_back(std::move(u));
      }
      structured = true;
    }
    if (m == 2) {
      for (int a = 0; a <= density; ++a)
        for (int b = 0; b <= density; ++b) {
          const double s = -1.0 + 2.0 * a / density;
          const double t = -1.0 + 2.0 * b / density;
          pts.push_back(Vec{s * cs.radius(0), t * cs.radius(1)});
        }
    }
  } else if (m == 2) {
    const double q = cs.q().value();
    const double r = cs.radius(0);
    const int shells = std::max(1, density / 4);
    for (int j = 0; j < density; ++j) {
      const double theta = 2.0 * std::numbers::pi * j / density;
      Vec dir{std::cos(theta), std::sin(theta)};
      detail::snap_tiny(dir, 1.0);
      const double n = std::pow(std::pow(std::abs(dir[0]), q) +
                                    std::pow(std::abs(dir[1]), q),
                                1.0 / q);
      for (int k = 1; k <= shells; ++k) {
        const double s = r * static_cast<double>(k) / shells / n;
        Vec u{dir[0] * s, dir[1] * s};
        detail::snap_tiny(u, scale);
        pts.push_back(cs.project_radial(std::move(u)));
      }
    }
    structured = true;
  }

  if (!structured) {
    std::mt19937_64 rng(0x5eed5eedULL);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const std::size_t want = static_cast<std::size_t>(density) *
                             static_cast<std::size_t>(density);
    std::size_t got = 0;
    for (std::size_t tries = 0; got < want && tries < 1000 * want; ++tries) {
      Vec u(um);
      for (std::size_t i = 0; i < um; ++i)
        u[i] = unit(rng) * cs.radii()[i];
      if (cs.contains(u, 0.0)) {
        pts.push_back(std::move(u));
        ++got;
      }
    }
  }
  out.structured = structured;

  for (auto &u : pts)
    detail::snap_tiny(u, scale);
  detail::sort_unique(pts);
  return out;
}

/// Control-affine vector field f(x, u) = f0(x) + sum_k fk(x) u_k.
class Dynamics {
public:
  enum class Kind { eikonal, nonlinear_test2, custom };
  using Field = std::function<Vec(std::span<const double>)>;
  /// Row-major d x d Jacobian of a field.
  using Jacobian = std::function<Vec(std::span<const double>)>;

  /// y' = u, with d = m.
  static Dynamics eikonal(int d) {
    if (d < 1)
      throw ArgumentError("eikonal dynamics needs d >= 1");
    Dynamics dyn(Kind::eikonal, d, d);
    const auto ud = static_cast<std::size_t>(d);
    dyn.f0_ = [ud](std::span<const double>) { return Vec(ud, 0.0); };
    dyn.jac0_ = [ud](std::span<const double>) { return Vec(ud * ud, 0.0); };
    for (std::size_t k = 0; k < ud; ++k) {
      dyn.channels_.push_back([ud, k](std::span<const double>) {
        Vec e(ud, 0.0);
        e[k] = 1.0;
        return e;
      });
      dyn.channel_jacs_.push_back(
          [ud](std::span<const double>) { return Vec(ud * ud, 0.0); });
    }
    dyn.lipschitz_hint_ = 0.0;
    return dyn;
  }

  /// y_i' = y_i (y_i - q_i) + u_i in two dimensions.
  static Dynamics nonlinear_test2(double q1 = 0.6, double q2 = 0.4) {
    Dynamics dyn(Kind::nonlinear_test2, 2, 2);
    dyn.f0_ = [q1, q2](std::span<const double> x) {
      return Vec{x[0] * (x[0] - q1), x[1] * (x[1] - q2)};
    };
    dyn.jac0_ = [q1, q2](std::span<const double> x) {
      return Vec{2.0 * x[0] - q1, 0.0, 0.0, 2.0 * x[1] - q2};
    };
    for (std::size_t k = 0; k < 2; ++k) {
      dyn.channels_.push_back([k](std::span<const double>) {
        Vec e(2, 0.0);
        e[k] = 1.0;
        return e;
      });
      dyn.channel_jacs_.push_back(
          [](std::span<const double>) { return Vec(4, 0.0); });
    }
    dyn.params_ = {q1, q2};
    return dyn;
  }

  /// User-supplied fields. Jacobians are optional; without them the adjoint
  /// integrator refuses the dynamics.
  static Dynamics custom(int d, Field f0, std::vector<Field> channels,
                         std::optional<Jacobian> jac0 = std::nullopt,
                         std::vector<Jacobian> channel_jacs = {},
                         std::optional<double> lipschitz_hint = std::nullopt) {
    if (d < 1 || channels.empty())
      throw ArgumentError("custom dynamics needs d >= 1 and m >= 1");
    Dynamics dyn(Kind::custom, d, static_cast<int>(channels.size()));
    dyn.f0_ = std::move(f0);
    dyn.channels_ = std::move(channels);
    if (jac0) {
      if (channel_jacs.size() != dyn.channels_.size())
        throw ArgumentError("one Jacobian per control channel is required");
      dyn.jac0_ = std::move(*jac0);
      dyn.channel_jacs_ = std::move(channel_jacs);
    }
    if (lipschitz_hint && !(*lipschitz_hint > 0.0))
      throw ArgumentError("lipschitz hint must be positive");
    dyn.lipschitz_hint_ = lipschitz_hint;
    return dyn;
  }

  Kind kind() const { return kind_; }
  int state_dim() const { return d_; }
  int control_dim() const { return m_; }
  std::optional<double> lipschitz_hint() const { return lipschitz_hint_; }
  const Vec &params() const { return params_; }
  bool has_jacobian() const { return static_cast<bool>(jac0_); }

  Vec drift(std::span<const double> x) const {
    check_state(x);
    return f0_(x);
  }
  Vec channel(int k, std::span<const double> x) const {
    check_state(x);
    return channels_.at(static_cast<std::size_t>(k))(x);
  }

  Vec operator()(std::span<const double> x, std::span<const double> u) const {
    check_state(x);
    if (u.size() != static_cast<std::size_t>(m_))
      throw ArgumentError("control dimension mismatch: expected " +
                          std::to_string(m_) + ", got " +
                          std::to_string(u.size()));
    Vec f = f0_(x);
    for (std::size_t k = 0; k < u.size(); ++k) {
      if (u[k] == 0.0)
        continue;
      const Vec fk = channels_[k](x);
      for (std::size_t i = 0; i < f.size(); ++i)
        f[i] += fk[i] * u[k];
    }
    return f;
  }

  /// Row-major d x d matrix df/dx at (x, u).
  Vec jacobian(std::span<const double> x, std::span<const double> u) const {
    if (!has_jacobian())
      throw UnsupportedError(
          "dynamics carry no Jacobian; supply one for adjoint integration");
    check_state(x);
    Vec jac = jac0_(x);
    for (std::size_t k = 0; k < u.size(); ++k) {
      if (u[k] == 0.0)
        continue;
      const Vec jk = channel_jacs_[k](x);
      for (std::size_t i = 0; i < jac.size(); ++i)
        jac[i] += jk[i] * u[k];
    }
    return jac;
  }

private:
  Dynamics(Kind kind, int d, int m) : kind_(kind), d_(d), m_(m) {}

  void check_state(std::span<const double> x) const {
    if (x.size() != static_cast<std::size_t>(d_))
      throw ArgumentError("state dimension mismatch: expected " +
                          std::to_string(d_) + ", got " +
                          std::to_string(x.size()));
  }

  Kind kind_;
  int d_;
  int m_;
  Field f0_;
  std::vector<Field> channels_;
  Jacobian jac0_;
  std::vector<Jacobian> channel_jacs_;
  std::optional<double> lipschitz_hint_;
  Vec params_;
};

inline Vec eval_dynamics(const Dynamics &dyn, std::span<const double> x,
                         std::span<const double> u) {
  return dyn(x, u);
}

/// l(x, u) = ell1(x) + gamma * sum |u_i|^p. ell1 is expected to be
/// nonnegative and strictly convex; this is documented, not checked.
class RunningCost {
public:
  using StateCost = std::function<double(std::span<const double>)>;
  using StateGradient = std::function<Vec(std::span<const double>)>;

  /// ell1(x) = |x|^2 / 2.
  static RunningCost quadratic(double gamma, double p) {
    return RunningCost(
        [](std::span<const double> x) {
          double s = 0.0;
          for (double xi : x)
            s += xi * xi;
          return 0.5 * s;
        },
        [](std::span<const double> x) { return Vec(x.begin(), x.end()); },
        gamma, p);
  }

  /// ell1 = c. Used by the minimum-time surrogate and fixed-point checks.
  static RunningCost constant(double c, double gamma = 0.0, double p = 1.0) {
    return RunningCost([c](std::span<const double>) { return c; },
                       [](std::span<const double> x) {
                         return Vec(x.size(), 0.0);
                       },
                       gamma, p);
  }

  RunningCost(StateCost ell1, StateGradient grad, double gamma, double p)
      : ell1_(std::move(ell1)), grad_(std::move(grad)), gamma_(gamma), p_(p) {
    if (!(p_ > 0.0))
      throw ArgumentError("running cost requires p > 0");
    if (!(gamma_ >= 0.0))
      throw ArgumentError("running cost requires gamma >= 0");
  }

  double gamma() const { return gamma_; }
  double p() const { return p_; }
  bool has_gradient() const { return static_cast<bool>(grad_); }

  double state_cost(std::span<const double> x) const { return ell1_(x); }
  Vec state_gradient(std::span<const double> x) const {
    if (!grad_)
      throw UnsupportedError("running cost carries no state gradient");
    return grad_(x);
  }
  double control_cost(std::span<const double> u) const {
    return gamma_ == 0.0 ? 0.0 : gamma_ * lp_norm_p(u, p_);
  }
  double operator()(std::span<const double> x, std::span<const double> u) const {
    return ell1_(x) + control_cost(u);
  }

private:
  StateCost ell1_;
  StateGradient grad_;
  double gamma_;
  double p_;
};

inline double eval_cost(const RunningCost &cost, std::span<const double> x,
                        std::span<const double> u) {
  return cost(x, u);
}

} // namespace sparse_hjb
