#include <exception>
#include <functional>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "selfsim/cli.hpp"

using selfsim::cli::RunConfig;

namespace {

void shared_flags(CLI::App& app, RunConfig& c) {
  app.add_option("--x-min", c.x_min, "smallest grid node")->capture_default_str();
  app.add_option("--x-max", c.x_max, "largest grid node")->capture_default_str();
  app.add_option("--n", c.n, "number of log-uniform grid nodes")->capture_default_str();
  app.add_option("--epsilon", c.epsilon, "perturbation strength")->capture_default_str();
  app.add_option("--alpha", c.alpha, "perturbation exponent in [0, 1)")->capture_default_str();
  app.add_option("--c-star", c.c_star, "perturbation constant in (0, 1]")->capture_default_str();
  app.add_option("--beta", c.beta, "norm exponent at infinity (default (3+alpha)/2)");
  app.add_option("--tol", c.tol, "fixed-point tolerance")->capture_default_str();
  app.add_option("--max-iter", c.max_iter, "iteration cap")->capture_default_str();
  app.add_option("--damping", c.damping, "initial damping in (0, 1]")->capture_default_str();
  app.add_option("--scheme", c.scheme, "boundary_layer or picard")->capture_default_str();
  app.add_option("--out", c.output_dir, "output directory")->capture_default_str();
  app.add_flag("--gnuplot-script", c.gnuplot, "also write a gnuplot script next to the CSV files");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-similar profiles of the coagulation equation with perturbed constant kernel"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "key=value file; flags on the command line take precedence");

  RunConfig c;
  shared_flags(app, c);

  std::function<int()> run;
  auto* solve = app.add_subcommand("solve", "solve for one profile; writes profile.csv and diagnostics.csv");
  solve->callback([&] { run = [&] { return selfsim::cli::cmd_solve(c); }; });

  auto* sweep = app.add_subcommand("sweep", "solve for a decreasing list of epsilon; writes sweep.csv");
  sweep->add_option("--epsilons", c.epsilon_list, "comma-separated, strictly decreasing")->delimiter(',');
  sweep->callback([&] { run = [&] { return selfsim::cli::cmd_sweep(c); }; });

  auto* uniq = app.add_subcommand("uniqueness", "solve from several initial profiles; writes uniqueness.csv");
  uniq->add_option("--inits", c.init_list, "comma-separated exp, exp:RATE or exp:AMPLITUDE:RATE")->delimiter(',');
  uniq->add_option("--threshold", c.threshold, "largest accepted pairwise distance (default 1e-6)");
  uniq->callback([&] { run = [&] { return selfsim::cli::cmd_uniqueness(c); }; });

  auto* verify = app.add_subcommand("verify", "identity suite of the linearised operator; writes verify.csv");
  verify->add_option("--only", c.only, "comma-separated check names")->delimiter(',');
  verify->add_option("--seed", c.seed, "seed of the random test functions")->capture_default_str();
  verify->callback([&] { run = [&] { return selfsim::cli::cmd_verify(c); }; });

  auto* bl = app.add_subcommand("bl", "boundary-layer residual of the solved profile; writes bl.csv");
  bl->add_option("--threshold", c.threshold, "largest accepted residual (default 1e-3)");
  bl->callback([&] { run = [&] { return selfsim::cli::cmd_bl(c); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return selfsim::cli::kConfigError;
  }

  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return selfsim::cli::kConfigError;
  }
  try {
    return run();
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return selfsim::cli::kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return selfsim::cli::kNotConverged;
  }
}
