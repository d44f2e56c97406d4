#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "scg/network.hpp"
#include "scg/path_eval.hpp"

namespace scg {

/**
 * Continuum-of-players flow: one simplex of path fractions per origin-dest
 * pair.  A link carries the plain sum of the fractions of every path that
 * uses it, and its delay law is the family instantiated at that fractional
 * load directly - there is no "+1" self-contribution, because an individual
 * agent is measure zero.
 */
struct FractionProfile {
  std::vector<std::vector<double>> fractions;  // [pair][path index]
};

// Throws ValidationError unless every pair's fractions form a simplex
// (entries >= -1e-9, sum within 1e-9 of one) matching the game's path lists.
void validate_fractions(const Game& game, const FractionProfile& fractions);

// Per-link fractional loads induced by a flow (indexed like game.links()).
std::vector<double> fraction_loads(const Game& game,
                                   const FractionProfile& fractions);

/**
 * Probability that each of the pair's paths is weakly shortest under the
 * flow, estimated in one Monte Carlo pass (shared links are sampled once per
 * replication, so the joint law across paths is exact).  The substream seed
 * depends on the pair but not on the fractions: the same underlying uniforms
 * drive every flow, so the estimate moves continuously as the flow moves and
 * root finding on these probabilities behaves like root finding on a smooth
 * deterministic function.
 */
std::vector<McValue> nonatomic_prob_min(const Game& game,
                                        const FractionProfile& fractions,
                                        int pair, const McSettings& mc = {});

/**
 * Value of one path of one pair under the flow: mean delay (Nash), variance
 * plus rho times mean (mean-variance), upper-alpha CVaR of the path's delay
 * convolution (CVaR), or probability of being weakly shortest (probability
 * criterion, the only Monte Carlo case - others are closed form).
 */
double nonatomic_criterion_value(const Criterion& criterion, const Game& game,
                                 const FractionProfile& fractions, int pair,
                                 int path, const McSettings& mc = {});

struct NonatomicOptions {
  // Declares two interchangeable paths of a three-path pair (identical delay
  // structure under the swap).  The solver then searches symmetric flows
  // (a, 1 - 2a, a) by one-dimensional bisection; without the declaration a
  // three-path pair falls back to a simplex grid search with refinement.
  std::optional<std::pair<int, int>> symmetric_paths;
  double tolerance = 1e-4;  // equalization tolerance for analytic criteria
  McSettings mc{};          // sampling knobs for the probability criterion
};

/**
 * Equilibrium flow for a single-pair game with at most three paths: every
 * used path attains the best criterion value at the unperturbed loads (equal
 * within tolerance - 3x the Monte Carlo standard error for the probability
 * criterion), and no unused path is strictly better.  Interior points are
 * found by bisection on the value gap (nested with the symmetry reduction for
 * three paths); a corner is accepted when its deviation check holds.  Throws
 * NoBracket when no sign change and no corner passes, rather than guessing.
 */
FractionProfile solve_nonatomic(const Criterion& criterion, const Game& game,
                                const NonatomicOptions& options = {});

// Expected total delay of a flow: sum over paths of fraction times the
// path's mean delay at the induced loads (risk-neutral regardless of which
// criterion shaped the flow).
double nonatomic_social_delay(const Game& game,
                              const FractionProfile& fractions);

struct NonatomicOptimum {
  FractionProfile flow;
  double delay = 0.0;
};

// Flow minimizing the expected total delay (single pair, <= 3 paths), via
// grid search over the simplex with golden-section / local refinement.
NonatomicOptimum nonatomic_optimum(const Game& game);

// Price of anarchy of the continuum game: social delay of the equilibrium
// flow for `criterion` divided by the optimal social delay.
double nonatomic_poa(const Criterion& criterion, const Game& game,
                     const NonatomicOptions& options = {});

}  // namespace scg
