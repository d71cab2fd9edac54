#include <CLI11.hpp>
#include <iostream>

#include "stlod/experiments.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string cache_path;
  std::string out_path;
  int workers = 0;  // 0 keeps the config value
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment configuration file")->required();
  cmd->add_option("--cache", args.cache_path, "corrector cache file");
  cmd->add_option("--out", args.out_path, "output file");
  cmd->add_option("--workers", args.workers, "worker threads for corrector assembly");
}

stlod::ExperimentConfig load(const CommonArgs& args) {
  stlod::ExperimentConfig config = stlod::load_config(args.config_path);
  if (args.workers > 0) config.workers = args.workers;
  return config;
}

std::string out_or(const CommonArgs& args, const char* fallback) {
  return args.out_path.empty() ? fallback : args.out_path;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"localized space-time multiscale solver"};
  app.require_subcommand(1);

  CommonArgs args;
  auto* correctors = app.add_subcommand("correctors", "compute and store the corrector cache");
  add_common(correctors, args);
  auto* solve = app.add_subcommand("solve", "coarse multiscale solve for f == 1");
  add_common(solve, args);
  auto* decay = app.add_subcommand("decay", "localization error and indicator decay study");
  add_common(decay, args);
  auto* convergence = app.add_subcommand("convergence", "coarse mesh convergence study");
  add_common(convergence, args);
  auto* multirhs = app.add_subcommand("multirhs", "error histogram over random sources");
  add_common(multirhs, args);
  auto* estimate = app.add_subcommand("estimate", "per-cell localization indicators");
  add_common(estimate, args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const stlod::ExperimentConfig config = load(args);
    if (correctors->parsed()) {
      stlod::experiments::run_correctors(config, out_or(args, "correctors.bin"));
    } else if (solve->parsed()) {
      stlod::experiments::run_solve(config, args.cache_path, out_or(args, "solve.csv"));
    } else if (decay->parsed()) {
      stlod::experiments::run_decay(config, out_or(args, "decay.csv"));
    } else if (convergence->parsed()) {
      stlod::experiments::run_convergence(config, out_or(args, "convergence.csv"));
    } else if (multirhs->parsed()) {
      stlod::experiments::run_multirhs(config, args.cache_path, out_or(args, "multirhs.csv"));
    } else if (estimate->parsed()) {
      stlod::experiments::run_estimate(config, args.cache_path, out_or(args, "estimate.csv"));
    }
  } catch (const stlod::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const stlod::numerical_failure& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const stlod::io_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
