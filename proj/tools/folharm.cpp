#include "folharm/runner.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"folharm: transversal tension, energy and heat flow experiments"};
  app.require_subcommand(1, 1);
  folharm::CliOptions options;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", options.config_path, "experiment configuration (JSON)")->required();
    sub->add_option("--out", options.out_dir, "output directory (overrides FOLHARM_OUT and the config)");
    sub->add_option("--threads", options.threads, "worker threads for node-parallel kernels");
    sub->add_option("--seed", options.seed, "random seed for sampled points");
  };
  add_common(app.add_subcommand("tension", "dump the transversal tension field"));
  add_common(app.add_subcommand("energy", "print the transversal energy"));
  add_common(app.add_subcommand("flow", "run the transversal heat flow"));
  auto* verify = app.add_subcommand("verify", "run identity checks");
  add_common(verify);
  verify->add_option("checks", options.checks,
                     "checks to run: first-variation, weitzenbock, lemma-volume, divergence, composition");
  add_common(app.add_subcommand("report", "sample curvature identities and exp-map geodesics"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return folharm::kExitConfigError;
  }
  options.command = app.get_subcommands().front()->get_name();
  return folharm::run_command(options, std::cout, std::cerr);
}
