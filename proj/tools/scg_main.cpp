#include <iostream>

#include "CLI11.hpp"
#include "scg/scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{"stochastic congestion game solver"};
  app.require_subcommand(1);

  scg::SolveCommand solve;
  auto* s = app.add_subcommand("solve", "compute equilibria of one scenario");
  s->add_option("--scenario", solve.scenario, "builtin name or config file path")
      ->required();
  s->add_option("--criterion", solve.criterion,
                "nash|rae|mv|cvar (default: the scenario's)");
  s->add_option("--mode", solve.mode, "pure|mixed|nonatomic")
      ->capture_default_str();
  s->add_option("--n", solve.players,
                "players per origin-destination pair (0 = scenario default)");
  s->add_option("--rho", solve.rho, "mean weight in the mean-variance objective");
  s->add_option("--alpha", solve.alpha, "upper-tail mass in the CVaR objective");
  s->add_option("--seed", solve.seed,
                "root seed (overrides SCG_SEED and the scenario's)");
  s->add_option("--replications", solve.replications, "Monte Carlo replications");
  s->add_option("--out", solve.out_csv, "also write a CSV report to this path");

  scg::SweepCommand sweep;
  auto* w = app.add_subcommand("sweep",
                               "pure-equilibrium sweep over a player range");
  w->add_option("--scenario", sweep.scenario, "builtin name or config file path")
      ->required();
  w->add_option("--criteria", sweep.criteria,
                "comma-separated criteria (default: the scenario's)")
      ->delimiter(',');
  w->add_option("--n-min", sweep.n_min, "smallest player count")
      ->capture_default_str();
  w->add_option("--n-max", sweep.n_max, "largest player count")
      ->capture_default_str();
  w->add_option("--rho", sweep.rho, "mean weight in the mean-variance objective");
  w->add_option("--alpha", sweep.alpha, "upper-tail mass in the CVaR objective");
  w->add_option("--seed", sweep.seed,
                "root seed (overrides SCG_SEED and the scenario's)");
  w->add_option("--replications", sweep.replications, "Monte Carlo replications");
  w->add_option("--out", sweep.out_csv, "CSV output path (default: stdout)");
  w->add_option("--plot", sweep.plot_svg, "also write a two-panel SVG plot");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  if (s->parsed()) return scg::cmd_solve(solve, std::cout, std::cerr);
  return scg::cmd_sweep(sweep, std::cout, std::cerr);
}
