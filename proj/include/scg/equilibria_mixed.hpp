#pragma once

#include <cstdint>
#include <vector>

#include "scg/network.hpp"
#include "scg/path_eval.hpp"

namespace scg {

// Paths each player is hypothesized to play with positive probability.
struct SupportHypothesis {
  // Per player, ascending unique path indices into that player's pair paths;
  // every player's list must be non-empty.
  std::vector<std::vector<int>> paths;
};

// For one pure profile, each player's probability of being on a weakly
// shortest path given everyone else's choice (deviation loads included).
struct ProbabilityTensorEntry {
  PureProfile profile;
  std::vector<double> value;  // per player, in [0, 1]
  std::vector<double> se;     // Monte Carlo standard errors
};

// Tensor of those probabilities over every pure profile, in ascending
// profile order.  Throws TensorCap when the profile count exceeds `cap`.
// Players of single-path pairs get value 1 everywhere.
std::vector<ProbabilityTensorEntry> build_probability_tensor(
    const PathEvaluator& ev, std::int64_t cap = 100'000);

enum class SupportStatus { kSolved, kInfeasible, kNonConvergence };

struct SupportSolveResult {
  SupportStatus status = SupportStatus::kInfeasible;
  // Valid only when solved: probability rows over each player's paths,
  // strictly positive exactly on the hypothesized support.
  MixedProfile profile;
  // Worst indifference residual / deviation gain at the returned profile
  // (informational; within tolerance when solved).
  double residual = 0.0;
};

// Solves the indifference system on the hypothesized supports: every player
// must value their support paths equally and no off-support path may beat
// them.  Analytic comparisons use `tolerance` (≤ 0 selects the 1e-4
// default); Monte Carlo comparisons use 3·stderr.  With two players each
// strategy is pinned by the opponent's indifference conditions and solved by
// bracketing / grid-refined search on the support simplex; supports leaving
// a strategy under-determined (fewer equations than free probabilities, the
// non-generic continuum case) are reported Infeasible.  Three or more
// players use a damped fixed point and may report NonConvergence.
SupportSolveResult solve_support(const Criterion& criterion, const PathEvaluator& ev,
                                 const SupportHypothesis& hypothesis,
                                 double tolerance = 0.0);

// Tries every support combination (all players), returning the solved
// profiles deduplicated within L-infinity 1e-3, in support-signature order;
// pure equilibria appear as degenerate supports.  Throws PlayersCap when the
// game has more than `max_players` players (support enumeration is
// exponential; raise the cap explicitly to accept the cost), and
// EnumerationCap when the hypothesis count exceeds 10^6.
std::vector<MixedProfile> enumerate_mixed_equilibria(const Criterion& criterion,
                                                     const PathEvaluator& ev,
                                                     int max_players = 2);

struct MixedEquilibriumCheck {
  bool ok = false;
  // Worst raw deviation improvement over the profile's achieved value
  // across players and candidate paths (positive means some deviation
  // looked profitable; `ok` applies the stderr/analytic allowance).
  double max_gain = 0.0;
};

// Independent equilibrium re-check: recomputes every candidate value with an
// evaluator seeded by `fresh_seed` (same replication count as `ev`).
MixedEquilibriumCheck verify_equilibrium(const Criterion& criterion,
                                         const PathEvaluator& ev,
                                         const MixedProfile& profile,
                                         std::uint64_t fresh_seed);

}  // namespace scg
