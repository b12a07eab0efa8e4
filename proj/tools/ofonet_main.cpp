// SPDX-License-Identifier: Apache-2.0
//
// CLI for the distributed model-free steady-state optimization simulator.
//
//   ofonet run <config.json>     seeded Monte Carlo experiment, CSV/JSON traces
//   ofonet bounds <config.json>  closed-form convergence-bound report
//   ofonet optimum <config.json> ground-truth optimum of the configured problem
//
// Exit codes: 0 ok, 2 config error, 3 hypothesis violation (bounds mode),
// 4 runtime failure.

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ofo/errors.hpp"
#include "ofo/harness.hpp"

namespace {

std::vector<std::string> split_arms(const std::string& arms) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : arms) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

int run_command(const std::string& config_path, const std::string& arms, const std::string& out_dir,
                int seeds, long horizon) {
  ofo::RunConfig cfg = ofo::load_config(config_path);
  ofo::ExperimentOptions opt;
  if (!arms.empty()) opt.arm_filter = split_arms(arms);
  if (seeds > 0) opt.replicas = seeds;
  if (horizon >= 0) opt.horizon = horizon;
  opt.output_dir = out_dir.empty() ? cfg.experiment.output_dir : out_dir;

  const ofo::ExperimentResult result = ofo::run_experiment(cfg, opt);
  std::printf("optimum: method=%s residual=%.3e norm=%.6f\n", result.optimum.method.c_str(),
              result.optimum.residual, result.u_star_norm);
  for (const auto& arm : result.arms) {
    std::printf(
        "arm %-12s tau=%-3d %-11s initial=%.4e final=%.4e plateau=%.4e decay=%.1fx median=%.4e\n",
        arm.name.c_str(), arm.tau, arm.baseline.c_str(), arm.initial_mean_rel_err,
        arm.final_mean_rel_err, arm.plateau_of_mean, arm.decay_factor, arm.plateau_median);
  }
  for (const auto& f : result.failures) {
    std::fprintf(stderr, "replica failure: arm=%s replica=%d: %s\n", f.arm.c_str(), f.replica,
                 f.message.c_str());
  }
  std::printf("outputs written to %s\n", result.output_dir.c_str());
  return result.failures.empty() ? 0 : 4;
}

int bounds_command(const std::string& config_path, const std::string& out_dir) {
  ofo::RunConfig cfg = ofo::load_config(config_path);
  const ofo::BoundReport report = ofo::evaluate_bounds(cfg);
  std::fputs(report.to_text().c_str(), stdout);
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    ofo::export_bound_report(report, out_dir + "/bounds.txt", out_dir + "/bounds.json");
  }
  if (!report.hypotheses_ok()) {
    std::fprintf(stderr, "hypotheses violated; no bound evaluated\n");
    return 3;
  }
  return 0;
}

int optimum_command(const std::string& config_path) {
  ofo::RunConfig cfg = ofo::load_config(config_path);
  const ofo::Fixture fx = ofo::build_fixture(cfg);
  std::printf("method = %s\nresidual = %.3e\n", fx.optimum.method.c_str(), fx.optimum.residual);
  for (int i = 0; i < fx.optimum.u_star.size(); ++i) {
    std::printf("u_star[%d] = %.12g\n", i, fx.optimum.u_star(i));
  }
  if (fx.active_node >= 0) {
    std::printf("active_node = %d\nactive_bound = %.12g\n", fx.active_node, fx.active_bound);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed model-free online feedback optimization simulator"};
  app.require_subcommand(1);

  std::string config_path, arms, out_dir;
  int seeds = -1;
  long horizon = -1;

  auto* run = app.add_subcommand("run", "Run the configured Monte Carlo experiment");
  run->add_option("config", config_path, "Run-config JSON file")->required();
  run->add_option("--arms", arms, "Comma-separated arm names (default: all)");
  run->add_option("--out", out_dir, "Output directory (default: from config)");
  run->add_option("--seeds", seeds, "Replica count override");
  run->add_option("--horizon", horizon, "Horizon override");

  auto* bounds = app.add_subcommand("bounds", "Evaluate the convergence-bound constants");
  bounds->add_option("config", config_path, "Run-config JSON file")->required();
  bounds->add_option("--out", out_dir, "Directory for bounds.txt / bounds.json");

  auto* optimum = app.add_subcommand("optimum", "Solve for the ground-truth optimum");
  optimum->add_option("config", config_path, "Run-config JSON file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return run_command(config_path, arms, out_dir, seeds, horizon);
    if (bounds->parsed()) return bounds_command(config_path, out_dir);
    if (optimum->parsed()) return optimum_command(config_path);
  } catch (const ofo::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const ofo::StepSizeConditionViolated& e) {
    std::fprintf(stderr, "hypothesis violation: %s\n", e.what());
    return 3;
  } catch (const ofo::RequiresStrongConvexityAboveOne& e) {
    std::fprintf(stderr, "hypothesis violation: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
  return 0;
}
