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
/// Experiment presets on [-1, 1]^2 (Eikonal and nonlinear dynamics,
/// p in {2, 1, 0.5}, minimum-time surrogate), artifact output, preset
/// verification, and the closed-form vs brute-force maximizer sweep.
///
/// Output files in the run directory:
///   value.csv     x1,x2,v
///   control.csv   x1,x2,u1,u2        synthesized feedback at every node
///   sparsity.csv  x1,x2,zero         1 where the feedback is exactly 0
///   traj.csv      t,x1,x2,u1,u2,cost
///   report.json   solver statistics and region measurements
///   verify.json   (verify only) one entry per check

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sparse_hjb/eikonal_oracle.hpp"
#include "sparse_hjb/errors.hpp"
#include "sparse_hjb/feedback.hpp"
#include "sparse_hjb/grid.hpp"
#include "sparse_hjb/hjb_solver.hpp"
#include "sparse_hjb/maximizer.hpp"
#include "sparse_hjb/problem.hpp"

namespace sparse_hjb {

using Overrides = std::map<std::string, std::string>;

inline const std::vector<std::string> &preset_names() {
  static const std::vector<std::string> names{
      "test0_quadratic", "test0_mintime",  "test1_p1", "test1_p1_small_lambda",
      "test1_p05",       "test2_p2",       "test2_p1", "test2_p05"};
  return names;
}

/// Flat parameter set behind every preset; overrides edit it by key.
struct PresetParams {
  std::string name;
  std::string dynamics = "eikonal";
  double lambda = 0.2;
  double gamma = 1.0;
  double p = 1.0;
  std::string q = "2";
  Vec rho{1.0};
  double domain_lo = -1.0;
  double domain_hi = 1.0;
  double mesh = 0.025;
  double q1 = 0.6;
  double q2 = 0.4;
  bool min_time = false;
  int density = 32;
  double dt = 0.0; // 0 = mesh / max|f|
  double tol = 1e-7;
  int max_iters = 200000;
  std::string sweep = "jacobi";
  bool closed_form = true;
  bool eliminate_self = true;
  unsigned threads = 0;
  Vec x0{-0.75, -0.6};
  double horizon = 20.0;
  double dt_sim = 0.0; // 0 = mesh / (2 max|f|)
};

namespace detail {

inline Vec parse_vec(const std::string &s) {
  Vec out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    out.push_back(parse_double(item));
  if (out.empty())
    throw UsageError("expected a comma-separated list, got '" + s + "'");
  return out;
}

inline bool parse_bool(const std::string &s) {
  if (s == "1" || s == "true" || s == "on" || s == "yes")
    return true;
  if (s == "0" || s == "false" || s == "off" || s == "no")
    return false;
  throw UsageError("expected a boolean, got '" + s + "'");
}

inline double parse_number(const std::string &key, const std::string &s) {
  try {
    return parse_double(s);
  } catch (const IoError &) {
    throw UsageError("value for '" + key + "' is not a number: '" + s + "'");
  }
}

inline std::string trim(std::string s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos)
    return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

} // namespace detail

inline PresetParams preset_params(const std::string &name) {
  PresetParams pp;
  pp.name = name;
  if (name == "test0_quadratic") {
    pp.p = 2.0;
    pp.density = 64;
  } else if (name == "test0_mintime") {
    pp.min_time = true;
    pp.gamma = 0.0;
  } else if (name == "test1_p1") {
  } else if (name == "test1_p1_small_lambda") {
    pp.lambda = 0.025;
  } else if (name == "test1_p05") {
    pp.p = 0.5;
  } else if (name == "test2_p2") {
    pp.dynamics = "nonlinear_test2";
    pp.p = 2.0;
    pp.density = 64;
  } else if (name == "test2_p1") {
    pp.dynamics = "nonlinear_test2";
  } else if (name == "test2_p05") {
    pp.dynamics = "nonlinear_test2";
    pp.p = 0.5;
  } else {
    throw UsageError("unknown preset '" + name + "'");
  }
  return pp;
}

inline void apply_override(PresetParams &pp, const std::string &key,
                           const std::string &raw) {
  const std::string value = detail::trim(raw);
  auto num = [&] { return detail::parse_number(key, value); };
  if (key == "lambda")
    pp.lambda = num();
  else if (key == "gamma")
    pp.gamma = num();
  else if (key == "p")
    pp.p = num();
  else if (key == "q")
    pp.q = value;
  else if (key == "rho")
    pp.rho = detail::parse_vec(value);
  else if (key == "mesh")
    pp.mesh = num();
  else if (key == "domain_lo")
    pp.domain_lo = num();
  else if (key == "domain_hi")
    pp.domain_hi = num();
  else if (key == "q1")
    pp.q1 = num();
  else if (key == "q2")
    pp.q2 = num();
  else if (key == "density")
    pp.density = static_cast<int>(num());
  else if (key == "dt")
    pp.dt = num();
  else if (key == "tol")
    pp.tol = num();
  else if (key == "max_iters")
    pp.max_iters = static_cast<int>(num());
  else if (key == "sweep") {
    if (value != "jacobi" && value != "gauss_seidel")
      throw UsageError("sweep must be jacobi or gauss_seidel");
    pp.sweep = value;
  } else if (key == "closed_form")
    pp.closed_form = detail::parse_bool(value);
  else if (key == "eliminate_self")
    pp.eliminate_self = detail::parse_bool(value);
  else if (key == "threads")
    pp.threads = static_cast<unsigned>(num());
  else if (key == "x0")
    pp.x0 = detail::parse_vec(value);
  else if (key == "horizon")
    pp.horizon = num();
  else if (key == "dt_sim")
    pp.dt_sim = num();
  else
    throw UsageError("unknown configuration key '" + key + "'");
}

/// Flat `key = value` document; '#' starts a comment.
inline Overrides read_config_file(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open config '" + path + "'");
  Overrides out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    line = detail::trim(line);
    if (line.empty())
      continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError(path + ":" + std::to_string(lineno) +
                       ": expected key = value");
    out[detail::trim(line.substr(0, eq))] = detail::trim(line.substr(eq + 1));
  }
  return out;
}

/// A fully bound experiment: problem, solver settings and trajectory setup.
struct Experiment {
  PresetParams params;
  Problem problem;
  SolverConfig solver;
  double dt_sim = 0.0;
  std::string formulation;
};

inline Problem eikonal_problem(int d, double lambda, double gamma, double p,
                               double rho, double mesh, double lo = -1.0,
                               double hi = 1.0) {
  ProblemConfig cfg;
  cfg.lambda = lambda;
  cfg.gamma = gamma;
  cfg.p = p;
  cfg.rho = {rho};
  cfg.m = d;
  cfg.d = d;
  return Problem{cfg, Dynamics::eikonal(d), RunningCost::quadratic(gamma, p),
                 ControlSet::from_config(cfg), GridSpec::uniform(d, lo, hi, mesh)};
}

inline Experiment bind_experiment(const PresetParams &pp) {
  ProblemConfig cfg;
  cfg.lambda = pp.lambda;
  cfg.gamma = pp.gamma;
  cfg.p = pp.p;
  cfg.q = pp.q == "inf" ? ConstraintExponent::infinity()
                        : ConstraintExponent::finite(
                              detail::parse_number("q", pp.q));
  cfg.rho = pp.rho;
  cfg.m = 2;
  cfg.d = 2;
  cfg.validate();

  Dynamics dyn = pp.dynamics == "eikonal"
                     ? Dynamics::eikonal(2)
                     : Dynamics::nonlinear_test2(pp.q1, pp.q2);
  RunningCost cost = pp.min_time ? RunningCost::constant(1.0, pp.gamma, pp.p)
                                 : RunningCost::quadratic(pp.gamma, pp.p);
  GridSpec grid = GridSpec::uniform(2, pp.domain_lo, pp.domain_hi, pp.mesh);
  Problem problem{cfg, std::move(dyn), std::move(cost),
                  ControlSet::from_config(cfg), std::move(grid)};
  if (pp.min_time)
    problem.target_radius = 0.5 * pp.mesh;
  problem.validate();

  Experiment ex{pp, std::move(problem), {}, 0.0, {}};
  ex.solver = default_solver_config(ex.problem, pp.density);
  if (pp.dt > 0.0)
    ex.solver.dt = pp.dt;
  ex.solver.tol = pp.tol;
  ex.solver.max_iters = pp.max_iters;
  ex.solver.sweep = pp.sweep == "gauss_seidel" ? Sweep::gauss_seidel : Sweep::jacobi;
  ex.solver.use_closed_form_candidates = pp.closed_form;
  ex.solver.eliminate_self_weight = pp.eliminate_self;
  ex.solver.threads = pp.threads;
  ex.dt_sim = pp.dt_sim > 0.0 ? pp.dt_sim : default_sim_step(ex.problem, ex.solver);
  if (pp.x0.size() != 2)
    throw UsageError("x0 must have two entries");
  if (pp.min_time)
    ex.formulation =
        "minimum-time surrogate: running cost 1, no control penalty, v = 0 on "
        "the origin node; discounted value (1 - exp(-lambda T(x))) / lambda";
  else
    ex.formulation = "discounted cost |x|^2/2 + gamma |u|_p^p";
  return ex;
}

inline Experiment make_experiment(const std::string &name,
                                  const Overrides &overrides = {}) {
  PresetParams pp = preset_params(name);
  for (const auto &[k, v] : overrides)
    apply_override(pp, k, v);
  return bind_experiment(pp);
}

struct SparsityMask {
  GridSpec spec;
  std::vector<char> mask;
};

inline SparsityMask sparsity_mask(const GridSpec &spec,
                                  const std::vector<Vec> &policy) {
  SparsityMask sm{spec, std::vector<char>(policy.size(), 0)};
  for (std::size_t k = 0; k < policy.size(); ++k)
    sm.mask[k] = std::all_of(policy[k].begin(), policy[k].end(),
                             [](double u) { return u == 0.0; })
                     ? 1
                     : 0;
  return sm;
}

struct SparsityRegion {
  /// Largest box centred at the origin node fully inside the mask, per axis.
  Vec half_widths;
  /// Bounding box of the mask component containing the origin node.
  Vec bbox_lo;
  Vec bbox_hi;
  std::size_t zero_nodes = 0;
};

/// Centred box: grow a cube cell by cell while it stays inside the mask,
/// then grow each axis alone with the others held at the cube size.
inline SparsityRegion measure_sparsity(const SparsityMask &sm) {
  const auto &spec = sm.spec;
  const int d = spec.dim();
  const auto ud = static_cast<std::size_t>(d);
  const Vec origin(ud, 0.0);
  const std::size_t center = spec.nearest_index(origin);
  const auto cidx = spec.multi_index(center);
  SparsityRegion reg;
  reg.half_widths.assign(ud, 0.0);
  reg.bbox_lo = spec.node_coords(center);
  reg.bbox_hi = reg.bbox_lo;
  reg.zero_nodes = static_cast<std::size_t>(
      std::count(sm.mask.begin(), sm.mask.end(), char{1}));
  if (!sm.mask[center])
    return reg;

  auto box_ok = [&](const std::vector<int> &half) {
    std::vector<int> lo(ud), hi(ud);
    for (std::size_t i = 0; i < ud; ++i) {
      lo[i] = cidx[i] - half[i];
      hi[i] = cidx[i] + half[i];
      if (lo[i] < 0 || hi[i] >= spec.n_per_dim()[i])
        return false;
    }
    std::vector<int> idx = lo;
    while (true) {
      if (!sm.mask[spec.flat_index(idx)])
        return false;
      std::size_t a = 0;
      while (a < ud && ++idx[a] > hi[a]) {
        idx[a] = lo[a];
        ++a;
      }
      if (a == ud)
        return true;
    }
  };

  std::vector<int> half(ud, 0);
  while (true) {
    std::vector<int> next = half;
    for (auto &h : next)
      ++h;
    if (!box_ok(next))
      break;
    half = next;
  }
  for (std::size_t i = 0; i < ud; ++i) {
    std::vector<int> grown = half;
    while (true) {
      ++grown[i];
      if (!box_ok(grown)) {
        --grown[i];
        break;
      }
    }
    reg.half_widths[i] = grown[i] * spec.mesh()[i];
  }

  std::vector<char> seen(sm.mask.size(), 0);
  std::vector<std::size_t> stack{center};
  seen[center] = 1;
  std::vector<int> bb_lo = cidx, bb_hi = cidx;
  while (!stack.empty()) {
    const std::size_t k = stack.back();
    stack.pop_back();
    auto idx = spec.multi_index(k);
    for (std::size_t i = 0; i < ud; ++i) {
      bb_lo[i] = std::min(bb_lo[i], idx[i]);
      bb_hi[i] = std::max(bb_hi[i], idx[i]);
    }
    for (std::size_t i = 0; i < ud; ++i)
      for (int s : {-1, 1}) {
        auto nb = idx;
        nb[i] += s;
        if (nb[i] < 0 || nb[i] >= spec.n_per_dim()[i])
          continue;
        const std::size_t f = spec.flat_index(nb);
        if (sm.mask[f] && !seen[f]) {
          seen[f] = 1;
          stack.push_back(f);
        }
      }
  }
  for (std::size_t i = 0; i < ud; ++i) {
    reg.bbox_lo[i] = spec.coordinate(static_cast<int>(i), bb_lo[i]);
    reg.bbox_hi[i] = spec.coordinate(static_cast<int>(i), bb_hi[i]);
  }
  return reg;
}

/// Fraction of nodes whose mask differs from its image under one of the
/// eight symmetries of the square (2d grids with equal node counts).
inline double mask_asymmetry(const SparsityMask &sm) {
  const auto &spec = sm.spec;
  if (spec.dim() != 2 || spec.n_per_dim()[0] != spec.n_per_dim()[1])
    throw ArgumentError("mask symmetry needs a square 2d grid");
  const int n = spec.n_per_dim()[0];
  std::size_t bad = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const char v = sm.mask[spec.flat_index(std::vector<int>{i, j})];
      const int ri = n - 1 - i, rj = n - 1 - j;
      const int images[8][2] = {{i, j},  {j, i},  {ri, j},  {i, rj},
                                {ri, rj}, {j, ri}, {rj, i}, {rj, ri}};
      for (const auto &im : images)
        if (sm.mask[spec.flat_index(std::vector<int>{im[0], im[1]})] != v) {
          ++bad;
          break;
        }
    }
  return static_cast<double>(bad) / static_cast<double>(n * n);
}

struct RunOutcome {
  Experiment experiment;
  SolveResult solution;
  SparsityMask mask;
  SparsityRegion region;
  Trajectory trajectory;
  double contraction_rate = 0.0;
  nlohmann::json report;
};

namespace detail {

inline void write_control_csv(const GridSpec &spec, const std::vector<Vec> &policy,
                              const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot open '" + path + "' for writing");
  const int d = spec.dim();
  for (int i = 0; i < d; ++i)
    out << 'x' << (i + 1) << ',';
  const std::size_t m = policy.empty() ? 0 : policy.front().size();
  for (std::size_t i = 0; i < m; ++i)
    out << 'u' << (i + 1) << (i + 1 < m ? "," : "\n");
  for (std::size_t k = 0; k < policy.size(); ++k) {
    for (double xi : spec.node_coords(k))
      out << format_double(xi) << ',';
    for (std::size_t i = 0; i < m; ++i)
      out << format_double(policy[k][i]) << (i + 1 < m ? "," : "\n");
  }
}

inline void write_mask_csv(const SparsityMask &sm, const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot open '" + path + "' for writing");
  for (int i = 0; i < sm.spec.dim(); ++i)
    out << 'x' << (i + 1) << ',';
  out << "zero\n";
  for (std::size_t k = 0; k < sm.mask.size(); ++k) {
    for (double xi : sm.spec.node_coords(k))
      out << format_double(xi) << ',';
    out << (sm.mask[k] ? 1 : 0) << '\n';
  }
}

inline void write_json(const nlohmann::json &j, const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
}

} // namespace detail

/// Solves the experiment, synthesizes the feedback on the grid, measures the
/// sparsity region and simulates from params.x0. Writes the artifacts when
/// out_dir is non-empty.
inline RunOutcome run_experiment(Experiment ex, const std::string &out_dir) {
  RunOutcome out{std::move(ex), {ValueField(GridSpec({0.0}, {1.0}, {2})), {}, {}},
                 {GridSpec({0.0}, {1.0}, {2}), {}}, {}, {}, 0.0, {}};
  const Experiment &e = out.experiment;
  out.solution = solve(e.problem, e.solver);
  out.mask = sparsity_mask(e.problem.grid, out.solution.policy);
  out.region = measure_sparsity(out.mask);
  out.contraction_rate = out.solution.report.residual_history.size() >= 10
                             ? residual_rate(out.solution.report)
                             : 0.0;
  out.trajectory = simulate(out.solution.value, e.params.x0, e.params.horizon,
                            e.dt_sim, e.problem, e.solver);

  const auto &rep = out.solution.report;
  nlohmann::json j;
  j["preset"] = e.params.name;
  j["formulation"] = e.formulation;
  j["parameters"] = {{"dynamics", e.params.dynamics},
                     {"lambda", e.params.lambda},
                     {"gamma", e.params.gamma},
                     {"p", e.params.p},
                     {"q", e.params.q},
                     {"rho", e.params.rho},
                     {"mesh", e.params.mesh},
                     {"domain", {e.params.domain_lo, e.params.domain_hi}}};
  j["solver"] = {{"dt", e.solver.dt},
                 {"discount", std::exp(-e.params.lambda * e.solver.dt)},
                 {"tol", e.solver.tol},
                 {"sweep", e.params.sweep},
                 {"control_density", e.solver.control_density},
                 {"candidates",
                  candidate_controls(e.problem.controls, e.solver.control_density)
                      .size()},
                 {"closed_form_candidates", e.solver.use_closed_form_candidates},
                 {"eliminate_self_weight", e.solver.eliminate_self_weight},
                 {"iterations", rep.iterations},
                 {"final_residual", rep.final_residual},
                 {"converged", rep.converged},
                 {"contraction_rate", out.contraction_rate}};
  j["sparsity"] = {{"half_widths", out.region.half_widths},
                   {"bounding_box",
                    {{"lo", out.region.bbox_lo}, {"hi", out.region.bbox_hi}}},
                   {"zero_nodes", out.region.zero_nodes},
                   {"nodes", out.mask.mask.size()}};
  j["trajectory"] = {{"x0", e.params.x0},
                     {"horizon", e.params.horizon},
                     {"dt_sim", e.dt_sim},
                     {"final_state", out.trajectory.states.back()},
                     {"discounted_cost", out.trajectory.total_cost()}};
  out.report = j;

  if (!out_dir.empty()) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec)
      throw IoError("cannot create output directory '" + out_dir +
                    "': " + ec.message());
    const fs::path dir(out_dir);
    write_field_csv(out.solution.value, (dir / "value.csv").string());
    detail::write_control_csv(e.problem.grid, out.solution.policy,
                              (dir / "control.csv").string());
    detail::write_mask_csv(out.mask, (dir / "sparsity.csv").string());
    write_trajectory_csv(out.trajectory, (dir / "traj.csv").string());
    detail::write_json(j, (dir / "report.json").string());
  }
  return out;
}

inline RunOutcome run_preset(const std::string &name, const std::string &out_dir,
                             const Overrides &overrides = {}) {
  return run_experiment(make_experiment(name, overrides), out_dir);
}

struct Check {
  std::string name;
  double measured = 0.0;
  double bound = 0.0;
  std::string relation; // "<=", ">=", "info"
  bool pass = true;
};

struct VerifyReport {
  std::string preset;
  std::vector<Check> checks;
  bool pass = true;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["preset"] = preset;
    j["pass"] = pass;
    j["checks"] = nlohmann::json::array();
    for (const auto &c : checks)
      j["checks"].push_back({{"name", c.name},
                             {"measured", c.measured},
                             {"bound", c.bound},
                             {"relation", c.relation},
                             {"pass", c.pass}});
    return j;
  }
};

namespace detail {

inline void add_le(VerifyReport &r, std::string name, double measured,
                   double bound) {
  const bool ok = std::isfinite(measured) && measured <= bound;
  r.checks.push_back({std::move(name), measured, bound, "<=", ok});
  r.pass = r.pass && ok;
}

inline void add_ge(VerifyReport &r, std::string name, double measured,
                   double bound) {
  const bool ok = std::isfinite(measured) && measured >= bound;
  r.checks.push_back({std::move(name), measured, bound, ">=", ok});
  r.pass = r.pass && ok;
}

inline void add_info(VerifyReport &r, std::string name, double measured) {
  r.checks.push_back({std::move(name), measured, 0.0, "info", true});
}

inline double l2(std::span<const double> x) {
  double s = 0.0;
  for (double v : x)
    s += v * v;
  return std::sqrt(s);
}

inline bool in_box(std::span<const double> x, double h) {
  return std::all_of(x.begin(), x.end(),
                     [h](double v) { return std::abs(v) <= h; });
}

/// State after `t` time units on a trajectory with uniform nodes.
inline Vec state_near(const Trajectory &traj, double t) {
  std::size_t best = 0;
  for (std::size_t k = 0; k < traj.size(); ++k)
    if (std::abs(traj.times[k] - t) < std::abs(traj.times[best] - t))
      best = k;
  return traj.states[best];
}

} // namespace detail

/// Fraction of nodes outside the (2-cell padded) sparsity box and away from
/// the domain boundary whose feedback lies in {(+-rho,0),(0,+-rho)}.
inline double axis_direction_fraction(const RunOutcome &run) {
  const auto &spec = run.experiment.problem.grid;
  const double h = spec.mesh()[0];
  const double rho = run.experiment.problem.cfg.radius(0);
  std::size_t total = 0, hits = 0;
  for (std::size_t k = 0; k < spec.node_count(); ++k) {
    const Vec x = spec.node_coords(k);
    bool inner = true;
    bool near_edge = false;
    for (std::size_t i = 0; i < x.size(); ++i) {
      inner = inner && std::abs(x[i]) <= run.region.half_widths[i] + 2.0 * h + 1e-12;
      near_edge = near_edge || x[i] < spec.lo()[i] + 2.0 * h - 1e-12 ||
                  x[i] > spec.hi()[i] - 2.0 * h + 1e-12;
    }
    if (inner || near_edge)
      continue;
    ++total;
    const Vec &u = run.solution.policy[k];
    int on_axis = 0, off = 0;
    for (double ui : u) {
      if (std::abs(std::abs(ui) - rho) <= 1e-6)
        ++on_axis;
      else if (std::abs(ui) > 1e-6)
        ++off;
    }
    if (on_axis == 1 && off == 0)
      ++hits;
  }
  return total ? static_cast<double>(hits) / total : 0.0;
}

/// Evaluates the checks that apply to the run's preset. Writes verify.json
/// when out_dir is non-empty.
inline VerifyReport verify_run(const RunOutcome &run, const std::string &out_dir) {
  const Experiment &e = run.experiment;
  const std::string &name = e.params.name;
  const Problem &pr = e.problem;
  const double lambda = pr.cfg.lambda;
  const double rho = pr.cfg.radius(0);
  const double beta = std::exp(-lambda * e.solver.dt);
  VerifyReport rep;
  rep.preset = name;

  detail::add_le(rep, "contraction_rate", run.contraction_rate, beta + 0.01);
  detail::add_info(rep, "iterations", run.solution.report.iterations);
  detail::add_info(rep, "sparsity_half_width_x1", run.region.half_widths[0]);
  detail::add_info(rep, "sparsity_half_width_x2", run.region.half_widths[1]);

  const Vec &y_end = run.trajectory.states.back();
  auto v_at = [&](Vec x) { return interpolate(run.solution.value, x); };

  if (name == "test0_quadratic" || name == "test2_p2" || name == "test2_p05") {
    detail::add_le(rep, "final_state_norm", detail::l2(y_end), 0.05);
  } else if (name == "test0_mintime") {
    const double expected = (1.0 - std::exp(-lambda * 0.6 / rho)) / lambda;
    detail::add_le(rep, "value_at_0.6_0_vs_discounted_min_time",
                   std::abs(v_at({0.6, 0.0}) - expected), 0.05);
    detail::add_le(rep, "value_at_0.6_0_vs_distance",
                   std::abs(v_at({0.6, 0.0}) - 0.6 / rho), 0.05);
    detail::add_le(rep, "state_norm_at_t2",
                   detail::l2(detail::state_near(run.trajectory, 2.0)), 0.05);
  } else if (name == "test1_p1") {
    const double lg = lambda * pr.cfg.gamma;
    detail::add_le(rep, "value_at_0.1_0.1_vs_analytic",
                   std::abs(v_at({0.1, 0.1}) - 0.02 / (2.0 * lambda)), 5e-3);
    for (int i = 0; i < 2; ++i)
      detail::add_le(rep, "sparsity_half_width_error_x" + std::to_string(i + 1),
                     std::abs(run.region.half_widths[static_cast<std::size_t>(i)] - lg),
                     0.05);
    detail::add_le(rep, "mask_asymmetry", mask_asymmetry(run.mask), 0.01);
    for (const Vec &x0 : {Vec{0.1, 0.1}, Vec{-0.75, -0.6}, Vec{0.5, -0.4}}) {
      const auto cmp = simulated_cost_vs_value(run.solution.value, x0, pr, e.solver,
                                               e.params.horizon, e.dt_sim);
      detail::add_le(rep,
                     "closed_loop_gap_" + format_double(x0[0]) + "_" +
                         format_double(x0[1]),
                     cmp.gap, 5e-2);
    }
    detail::add_le(rep, "trajectory_end_in_box_inf_norm",
                   std::max(std::abs(y_end[0]), std::abs(y_end[1])), 0.25);
    double tail_control = 0.0;
    for (std::size_t k = 0; k < run.trajectory.controls.size(); ++k)
      if (run.trajectory.times[k] >= e.params.horizon - 1.0 - 1e-9)
        for (double u : run.trajectory.controls[k])
          tail_control = std::max(tail_control, std::abs(u));
    detail::add_le(rep, "control_in_final_time_unit", tail_control, 0.0);
  } else if (name == "test1_p1_small_lambda") {
    const double expected = (1.0 - std::exp(-lambda * 0.6 / rho)) / lambda;
    for (int i = 0; i < 2; ++i)
      detail::add_le(rep, "sparsity_half_width_x" + std::to_string(i + 1),
                     run.region.half_widths[static_cast<std::size_t>(i)], 0.05);
    detail::add_le(rep, "value_at_0.6_0_vs_discounted_min_time",
                   std::abs(v_at({0.6, 0.0}) - expected), 0.08);
  } else if (name == "test1_p05") {
    detail::add_ge(rep, "axis_direction_fraction", axis_direction_fraction(run),
                   0.95);
    detail::add_le(rep, "mask_asymmetry", mask_asymmetry(run.mask), 0.01);
  }
  if (name == "test2_p1") {
    double worst = 0.0;
    for (std::size_t k = 0; k < pr.grid.node_count(); ++k) {
      const Vec x = pr.grid.node_coords(k);
      if (detail::in_box(x, 0.05 + 1e-12))
        for (double u : run.solution.policy[k])
          worst = std::max(worst, std::abs(u));
    }
    detail::add_le(rep, "max_control_near_origin", worst, 0.0);
    detail::add_le(rep, "state_norm_at_t20",
                   detail::l2(detail::state_near(run.trajectory, 20.0)), 0.05);
  }

  if (!out_dir.empty())
    detail::write_json(rep.to_json(),
                       (std::filesystem::path(out_dir) / "verify.json").string());
  return rep;
}

/// Runs the preset inline, writes its artifacts and verify.json.
inline VerifyReport verify_preset(const std::string &name,
                                  const std::string &out_dir,
                                  const Overrides &overrides = {}) {
  return verify_run(run_preset(name, out_dir, overrides), out_dir);
}

struct MaximizerCheckOptions {
  int samples = 10000;
  /// Restrict draws; empty means {0.5, 1} and {1, 2, inf}.
  std::vector<double> p_values;
  std::vector<std::string> q_values;
  double band = 1e-3;
  /// Only draw cases with at least one coordinate above threshold.
  bool require_active = false;
};

struct MaximizerCheckReport {
  int cases = 0;
  int redraws = 0;
  /// max over cases of g(brute force) - g(closed form)
  double worst_g_gap = -std::numeric_limits<double>::infinity();
  double worst_u_gap = 0.0;
  int sign_mismatches = 0;
  bool pass = false;

  nlohmann::json to_json() const {
    return {{"cases", cases},
            {"redraws", redraws},
            {"worst_g_gap", worst_g_gap},
            {"worst_u_gap", worst_u_gap},
            {"sign_mismatches", sign_mismatches},
            {"pass", pass}};
  }
};

namespace detail {

// True when c sits within `band` of a regime boundary of the closed form.
inline bool near_threshold(const SwitchingVector &c, const ProblemConfig &cfg,
                           double band) {
  const std::size_t m = c.size();
  Vec t(m);
  for (std::size_t i = 0; i < m; ++i)
    t[i] = std::pow(cfg.radius(static_cast<int>(i)), 1.0 - cfg.p) * std::abs(c[i]);
  if (cfg.q.is_infinite() || (cfg.p == 1.0 && cfg.q.value() > 1.0)) {
    for (double ti : t)
      if (std::abs(ti - 1.0) < band)
        return true;
    return false;
  }
  Vec sorted = t;
  std::sort(sorted.rbegin(), sorted.rend());
  if (std::abs(sorted[0] - 1.0) < band)
    return true;
  return m > 1 && sorted[0] > 1.0 && sorted[0] - sorted[1] < band;
}

} // namespace detail

/// Random (c, p, q, rho) draws; closed form against brute force. Draws that
/// land within `band` of a threshold, or outside the closed form's domain
/// (vertex condition), are redrawn and counted.
inline MaximizerCheckReport maximizer_check(int n_cases, std::uint64_t seed,
                                            const MaximizerCheckOptions &opt = {}) {
  if (n_cases < 1)
    throw ArgumentError("need at least one case");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-3.0, 3.0);
  std::uniform_real_distribution<double> radius(0.5, 2.0);
  const std::vector<double> ps =
      opt.p_values.empty() ? std::vector<double>{0.5, 1.0} : opt.p_values;
  const std::vector<std::string> qs =
      opt.q_values.empty() ? std::vector<std::string>{"1", "2", "inf"}
                           : opt.q_values;
  MaximizerCheckReport rep;
  while (rep.cases < n_cases) {
    ProblemConfig cfg;
    cfg.m = 1 + static_cast<int>(rng() % 3);
    cfg.d = cfg.m;
    cfg.p = ps[rng() % ps.size()];
    const std::string q = qs[rng() % qs.size()];
    cfg.q = q == "inf" ? ConstraintExponent::infinity()
                       : ConstraintExponent::finite(std::stod(q));
    if (cfg.q.is_infinite()) {
      cfg.rho.resize(static_cast<std::size_t>(cfg.m));
      for (double &r : cfg.rho)
        r = radius(rng);
    } else {
      cfg.rho = {radius(rng)};
    }
    Vec cv(static_cast<std::size_t>(cfg.m));
    for (double &ci : cv)
      ci = coef(rng);
    const SwitchingVector c(cv);
    if (detail::near_threshold(c, cfg, opt.band)) {
      ++rep.redraws;
      continue;
    }
    MaximizerResult cf;
    try {
      cf = maximize_closed_form(c, cfg);
    } catch (const RegimeError &) {
      ++rep.redraws;
      continue;
    }
    if (opt.require_active && cf.active_set.empty()) {
      ++rep.redraws;
      continue;
    }
    const auto bf = maximize_brute_force(c, cfg, opt.samples, rng());
    rep.worst_g_gap = std::max(rep.worst_g_gap, bf.g_value - cf.g_value);
    double du = 0.0;
    for (std::size_t i = 0; i < cv.size(); ++i)
      du = std::max(du, std::abs(bf.u_star[i] - cf.u_star[i]));
    rep.worst_u_gap = std::max(rep.worst_u_gap, du);
    for (std::size_t i = 0; i < cv.size(); ++i)
      if (std::abs(bf.u_star[i]) > 1e-9 && bf.u_star[i] * cv[i] < 0.0) {
        ++rep.sign_mismatches;
        break;
      }
    ++rep.cases;
  }
  rep.pass = rep.worst_g_gap <= 1e-6 && rep.worst_u_gap <= 1e-2 &&
             rep.sign_mismatches == 0;
  return rep;
}

} // namespace sparse_hjb
