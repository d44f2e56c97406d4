#pragma once

#include <vector>

#include "scg/network.hpp"
#include "scg/path_eval.hpp"

namespace scg {

// Socially optimal assignments (all minimizers of the social delay) and the
// optimal delay itself.
struct OptimalAssignments {
  std::vector<PathCounts> assignments;
  double delay = 0.0;
};

// Average expected delay per player: (1/n) Σ_p m^p · E[path delay] at the
// assignment's loads.  Risk-neutral by definition regardless of the players'
// criterion.
double social_delay_pure(const Game& game, const PathCounts& assignment);

// Expectation of the pure social delay over the mixed profile's
// anonymity-collapsed assignment law.
double social_delay_mixed(const Game& game, const MixedProfile& profile,
                          std::int64_t max_profiles = 1'000'000);

// Exhaustive search over anonymous assignments: returns every minimizer
// (ties within 1e-9 relative) and the minimum delay.
OptimalAssignments optimal_assignment(const Game& game, std::int64_t cap = 1'000'000);

// max over equilibrium delays of D / D(o).  Throws EmptyEquilibria when the
// equilibrium list is empty.
double price_of_anarchy(const std::vector<double>& equilibrium_delays,
                        double optimum_delay);
double price_of_anarchy(const Game& game, const std::vector<PathCounts>& equilibria,
                        double optimum_delay);

}  // namespace scg
