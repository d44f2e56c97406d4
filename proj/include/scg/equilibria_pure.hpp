#pragma once

#include <vector>

#include "scg/network.hpp"
#include "scg/path_eval.hpp"

namespace scg {

// Sentinel for best_response_set: the assignment already excludes the
// evaluated player (an entrant choosing a path given everyone else).
inline constexpr int kEntrant = -1;

// Paths of `pair` whose deviation-adjusted criterion value is weakly best for
// one player, everyone else fixed.  With occupied_path ≥ 0 the player is
// removed from that path first; with kEntrant the assignment is taken as the
// opponents' counts directly.  Ties within 1e-9 (analytic values) or within
// 2·stderr (Monte Carlo values) keep both paths in the set.
std::vector<int> best_response_set(const Criterion& criterion, const PathEvaluator& ev,
                                   const PathCounts& assignment, int pair,
                                   int occupied_path);

struct PureEquilibriumReport {
  Criterion criterion;
  PathCounts assignment;
  // stay_values[pair][path]: the criterion value a player on that path gets
  // (player removed and re-placed, so Monte Carlo contexts match the
  // deviation checks); NaN on unoccupied paths.
  std::vector<std::vector<double>> stay_values;
  double social_delay = 0.0;
  // Worst amount by which some deviation improved on a stayed path (within
  // the tie tolerance at an equilibrium, and possibly negative).
  double max_gap = 0.0;
};

// Exhaustively checks every anonymous assignment: an equilibrium is one where
// each occupied path of each pair is weakly best against all deviations of
// one of its players.  Returns all equilibria in ascending assignment order.
// Throws EnumerationCap when the assignment space exceeds `cap`.
std::vector<PureEquilibriumReport> find_pure_equilibria(const Criterion& criterion,
                                                        const PathEvaluator& ev,
                                                        std::int64_t cap = 1'000'000);

struct EquilibriumCheck {
  bool ok = false;
  // Worst deviation improvement in excess of the check's tolerance; ≤ 0 when
  // the assignment passes.
  double max_gap = 0.0;
};

// Independent re-check of the equilibrium conditions, meant to be run with a
// differently seeded evaluator: Monte Carlo comparisons get a 3·stderr
// allowance, analytic ones 1e-9.
EquilibriumCheck verify_pure_equilibrium(const Criterion& criterion,
                                         const PathEvaluator& ev,
                                         const PathCounts& assignment);

struct DominanceReduction {
  // Per pair, the surviving path indices in ascending order.
  std::vector<std::vector<int>> kept;
  // Whether the reduction is also valid when searching for mixed equilibria.
  // Probability and mean objectives are affine in the opponents' mixture, so
  // their eliminations always transfer; variance-based eliminations transfer
  // only when every profile mean sits on one side of rho/2, and tail-based
  // eliminations are kept for pure search only.
  bool mixed_safe = true;
};

// Iterated strict-dominance elimination: a path is removed when some other
// path of its pair is strictly better against every opponent assignment over
// the surviving paths.
DominanceReduction eliminate_strictly_dominated(const Criterion& criterion,
                                                const PathEvaluator& ev,
                                                std::int64_t cap = 1'000'000);

}  // namespace scg
