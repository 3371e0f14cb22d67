#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "epac/experiment.hpp"

namespace {

constexpr int kExitVerdictFailure = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitRuntimeError = 3;

struct CommonOptions {
  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<double> tolerance;
};

void add_common(CLI::App* cmd, CommonOptions& opts, bool needs_config) {
  auto* c = cmd->add_option("--config", opts.config_path, "experiment config (JSON)");
  if (needs_config) c->required();
  cmd->add_option("--out", [&opts](const std::vector<std::string>& v) {
    opts.out_dir = v.front();
    return true;
  }, "output directory (overrides config)");
  cmd->add_option("--seed", [&opts](const std::vector<std::string>& v) {
    opts.seed = std::stoull(v.front());
    return true;
  }, "perturbation seed (overrides config)");
  cmd->add_option("--tol", [&opts](const std::vector<std::string>& v) {
    opts.tolerance = std::stod(v.front());
    return true;
  }, "verdict tolerance (overrides config)");
}

epac::ExperimentConfig load(const CommonOptions& opts) {
  epac::ExperimentConfig cfg = epac::load_config(opts.config_path);
  if (opts.out_dir) cfg.output_dir = *opts.out_dir;
  if (opts.seed) cfg.perturbation.seed = *opts.seed;
  if (opts.tolerance) cfg.tolerance = *opts.tolerance;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"edge-perturbed average consensus laboratory"};
  app.require_subcommand(1);

  CommonOptions run_opts, attack_opts, twin_opts, scan_opts;
  std::string demo_out = "out/demo";

  auto* run_cmd = app.add_subcommand("run", "execute the configured protocol and persist the artifacts");
  add_common(run_cmd, run_opts, true);
  auto* attack_cmd = app.add_subcommand("attack", "run with an internal attacker and attempt reconstructions");
  add_common(attack_cmd, attack_opts, true);
  auto* twin_cmd = app.add_subcommand("twin-check", "build the configured twin and diff the two implementations");
  add_common(twin_cmd, twin_opts, true);
  auto* scan_cmd = app.add_subcommand("scan", "tabulate vulnerable agents for every attacker placement");
  add_common(scan_cmd, scan_opts, true);
  auto* demo_cmd = app.add_subcommand("demo", "run the shipped five-agent demonstration");
  demo_cmd->add_option("--out", demo_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return epac::cmd_run(load(run_opts));
    if (attack_cmd->parsed()) return epac::cmd_attack(load(attack_opts));
    if (twin_cmd->parsed()) return epac::cmd_twin_check(load(twin_opts));
    if (scan_cmd->parsed()) return epac::cmd_scan(load(scan_opts));
    if (demo_cmd->parsed()) return epac::cmd_demo(demo_out);
  } catch (const epac::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntimeError;
  }
  return kExitVerdictFailure;
}
