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
/// Command-line driver: solve / verify presets, run the Eikonal oracle,
/// sweep the pointwise maximizer and simulate closed-loop trajectories.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sparse_hjb/sparse_hjb.hpp"

namespace {

using sparse_hjb::Overrides;

Overrides collect_overrides(const std::string &config_path,
                            const std::vector<std::string> &sets) {
  Overrides out;
  if (!config_path.empty())
    out = sparse_hjb::read_config_file(config_path);
  for (const auto &kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw sparse_hjb::UsageError("--set expects key=value, got '" + kv + "'");
    out[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  return out;
}

void print(const nlohmann::json &j) { std::cout << j.dump(2) << '\n'; }

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Sparse-control HJB solver toolkit"};
  app.require_subcommand(1);

  std::string preset;
  std::string out_dir;
  std::string config_path;
  std::vector<std::string> sets;

  auto add_preset_opts = [&](CLI::App *sub, bool with_out) {
    sub->add_option("--preset", preset, "Preset name")
        ->required()
        ->check(CLI::IsMember(sparse_hjb::preset_names()));
    if (with_out)
      sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--config", config_path, "Flat key = value config file");
    sub->add_option("--set", sets, "Override key=value (repeatable)");
  };

  auto *solve_cmd = app.add_subcommand("solve", "Solve a preset and write artifacts");
  add_preset_opts(solve_cmd, true);

  auto *verify_cmd = app.add_subcommand("verify", "Solve a preset and run its checks");
  add_preset_opts(verify_cmd, true);

  auto *sim_cmd = app.add_subcommand("simulate", "Closed-loop simulation of a preset");
  add_preset_opts(sim_cmd, true);
  std::vector<double> sim_x0;
  double sim_horizon = -1.0;
  sim_cmd->add_option("--x0", sim_x0, "Initial state")->delimiter(',')->expected(2);
  sim_cmd->add_option("--horizon", sim_horizon, "Simulation horizon");

  auto *oracle_cmd = app.add_subcommand("oracle", "Exact Eikonal optimal trajectory");
  std::vector<double> or_x0;
  double or_lambda = 0.2, or_gamma = 1.0, or_rho = 1.0, or_dt = 0.0125,
         or_horizon = 20.0;
  oracle_cmd->add_option("--x0", or_x0, "Initial state")
      ->required()
      ->delimiter(',');
  oracle_cmd->add_option("--lambda", or_lambda, "Discount rate");
  oracle_cmd->add_option("--gamma", or_gamma, "Control cost weight");
  oracle_cmd->add_option("--rho", or_rho, "Control radius");
  oracle_cmd->add_option("--dt", or_dt, "Trajectory sample step");
  oracle_cmd->add_option("--horizon", or_horizon, "Trajectory horizon");
  oracle_cmd->add_option("--out", out_dir, "Write traj.csv here");

  auto *max_cmd = app.add_subcommand("maximizer-check",
                                     "Closed form vs brute force on random draws");
  int mc_n = 1000;
  std::uint64_t mc_seed = 1;
  int mc_samples = 10000;
  max_cmd->add_option("--n", mc_n, "Number of cases");
  max_cmd->add_option("--seed", mc_seed, "RNG seed");
  max_cmd->add_option("--samples", mc_samples, "Brute-force samples per case");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e);
  }

  try {
    if (*solve_cmd) {
      const auto run =
          sparse_hjb::run_preset(preset, out_dir, collect_overrides(config_path, sets));
      print(run.report);
      return 0;
    }
    if (*verify_cmd) {
      const auto rep = sparse_hjb::verify_preset(preset, out_dir,
                                                 collect_overrides(config_path, sets));
      print(rep.to_json());
      return rep.pass ? 0 : 1;
    }
    if (*sim_cmd) {
      auto ov = collect_overrides(config_path, sets);
      if (!sim_x0.empty())
        ov["x0"] = sparse_hjb::format_double(sim_x0[0]) + "," +
                   sparse_hjb::format_double(sim_x0[1]);
      if (sim_horizon > 0.0)
        ov["horizon"] = sparse_hjb::format_double(sim_horizon);
      const auto ex = sparse_hjb::make_experiment(preset, ov);
      const auto sol = sparse_hjb::solve(ex.problem, ex.solver);
      const auto traj = sparse_hjb::simulate(sol.value, ex.params.x0, ex.params.horizon,
                                             ex.dt_sim, ex.problem, ex.solver);
      if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        sparse_hjb::write_trajectory_csv(
            traj, (std::filesystem::path(out_dir) / "traj.csv").string());
      }
      print({{"preset", preset},
             {"x0", ex.params.x0},
             {"horizon", ex.params.horizon},
             {"final_state", traj.states.back()},
             {"discounted_cost", traj.total_cost()},
             {"value_at_x0", sparse_hjb::interpolate(sol.value, ex.params.x0)}});
      return 0;
    }
    if (*oracle_cmd) {
      const auto pl = sparse_hjb::plan(or_x0, or_lambda, or_gamma, or_rho);
      std::vector<double> times(pl.switch_times.begin() + 1, pl.switch_times.end());
      nlohmann::json phases = nlohmann::json::array();
      for (std::size_t k = 0; k < pl.phase_count(); ++k)
        phases.push_back({{"start", pl.switch_times[k]},
                          {"end", pl.switch_times[k + 1]},
                          {"control", pl.phases[k]}});
      if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        sparse_hjb::write_trajectory_csv(
            sparse_hjb::oracle_trajectory(pl, or_dt, or_horizon),
            (std::filesystem::path(out_dir) / "traj.csv").string());
      }
      print({{"x0", pl.x0},
             {"switch_times", times},
             {"phases", phases},
             {"final_state", pl.final_state},
             {"value", sparse_hjb::oracle_value(pl)}});
      return 0;
    }
    if (*max_cmd) {
      sparse_hjb::MaximizerCheckOptions opt;
      opt.samples = mc_samples;
      const auto rep = sparse_hjb::maximizer_check(mc_n, mc_seed, opt);
      print(rep.to_json());
      return rep.pass ? 0 : 1;
    }
  } catch (const sparse_hjb::UsageError &e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
