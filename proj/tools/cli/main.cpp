#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cli/commands.hpp"
#include "cli/config.hpp"
#include "pacbound/errors.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::int64_t seed = -1;  // negative: keep the config's seed
  std::string out_dir;
  int threads = 0;  // 0: keep the config's thread count
};

void attach_common(CLI::App* sc, CommonArgs& args) {
  sc->add_option("-c,--config", args.config_path, "JSON config file (defaults when omitted)");
  sc->add_option("--seed", args.seed, "override the config seed");
  sc->add_option("--out", args.out_dir, "override the output directory");
  sc->add_option("--threads", args.threads, "override the worker thread count");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PAC-Bayes generalization bounds for linear one-step predictors"};
  app.require_subcommand(1);

  CommonArgs args;
  double corrupt_ge = 0.0;

  CLI::App* sc_simulate = app.add_subcommand("simulate", "write generator trajectories as CSV");
  CLI::App* sc_sweep =
      app.add_subcommand("sweep", "bound reports over the N grid, one series per route/policy");
  CLI::App* sc_verify =
      app.add_subcommand("verify", "Monte-Carlo checks of the proven inequalities + coverage");
  CLI::App* sc_bound = app.add_subcommand("bound", "single bound evaluation with audit output");
  CLI::App* sc_lambda =
      app.add_subcommand("lambda-star", "optimized rate vs the schedule on the N grid");
  for (CLI::App* sc : {sc_simulate, sc_sweep, sc_verify, sc_bound, sc_lambda}) {
    attach_common(sc, args);
  }
  sc_verify->add_option("--corrupt-ge", corrupt_ge,
                        "debug fault injection: scale the stored error-system gain");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  }

  try {
    pacbound::cli::ExperimentConfig cfg = pacbound::cli::load_config_file(args.config_path);
    if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    if (args.threads > 0) cfg.threads = args.threads;
    if (sc_verify->parsed() && sc_verify->count("--corrupt-ge") > 0) {
      if (corrupt_ge <= 0.0) throw pacbound::ConfigError("--corrupt-ge must be positive");
      cfg.verify.corrupt_ge = corrupt_ge;
    }
    pacbound::cli::finalize(cfg);

    if (sc_simulate->parsed()) return pacbound::cli::cmd_simulate(cfg);
    if (sc_sweep->parsed()) return pacbound::cli::cmd_sweep(cfg);
    if (sc_verify->parsed()) return pacbound::cli::cmd_verify(cfg);
    if (sc_bound->parsed()) return pacbound::cli::cmd_bound(cfg);
    if (sc_lambda->parsed()) return pacbound::cli::cmd_lambda_star(cfg);
    std::cerr << "usage error: no subcommand\n";
    return 2;
  } catch (const pacbound::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const pacbound::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
