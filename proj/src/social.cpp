#include "scg/social.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "scg/errors.hpp"

namespace scg {

double social_delay_pure(const Game& game, const PathCounts& assignment) {
  // Validate feasibility (shapes and per-pair totals) via the profile round
  // trip, then use the link-load form: Σ_p m^p·Σ_{e∈p} mean_e = Σ_e m_e·mean_e.
  (void)profile_of(game, assignment);
  const auto loads = link_loads(game, assignment);
  double total = 0.0;
  for (std::size_t e = 0; e < loads.size(); ++e) {
    if (loads[e] == 0) continue;
    total += loads[e] *
             link_distribution(game.links()[e], loads[e], game.n()).mean();
  }
  return total / game.n();
}

double social_delay_mixed(const Game& game, const MixedProfile& profile,
                          std::int64_t max_profiles) {
  const PathEvaluator ev(game);
  // Collapsing with no player excluded yields the law of the full assignment.
  const auto law = ev.opponent_count_law(-1, profile, max_profiles);
  double d = 0.0;
  for (const auto& [w, counts] : law) d += w * social_delay_pure(game, counts);
  return d;
}

OptimalAssignments optimal_assignment(const Game& game, std::int64_t cap) {
  OptimalAssignments best;
  best.delay = std::numeric_limits<double>::infinity();
  for (const auto& counts : enumerate_assignments(game, cap)) {
    const double d = social_delay_pure(game, counts);
    const double tol = 1e-9 * std::max(1.0, std::abs(best.delay));
    if (d < best.delay - tol) {
      best.delay = d;
      best.assignments.clear();
      best.assignments.push_back(counts);
    } else if (d <= best.delay + tol) {
      best.assignments.push_back(counts);
      best.delay = std::min(best.delay, d);
    }
  }
  return best;
}

double price_of_anarchy(const std::vector<double>& equilibrium_delays,
                        double optimum_delay) {
  if (equilibrium_delays.empty())
    throw Error("EmptyEquilibria", "price of anarchy needs at least one equilibrium");
  if (!(optimum_delay > 0.0))
    throw Error("ValidationError", "optimum delay must be positive");
  const double worst =
      *std::max_element(equilibrium_delays.begin(), equilibrium_delays.end());
  return worst / optimum_delay;
}

double price_of_anarchy(const Game& game, const std::vector<PathCounts>& equilibria,
                        double optimum_delay) {
  std::vector<double> delays;
  delays.reserve(equilibria.size());
  for (const auto& counts : equilibria) delays.push_back(social_delay_pure(game, counts));
  return price_of_anarchy(delays, optimum_delay);
}

}  // namespace scg
