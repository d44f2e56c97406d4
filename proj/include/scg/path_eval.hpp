#pragma once

#include <map>
#include <utility>
#include <vector>

#include "scg/distribution.hpp"
#include "scg/network.hpp"
#include "scg/rng.hpp"

namespace scg {

enum class CriterionKind { kNash, kRae, kMv, kCvar };

// Which objective a player optimizes over candidate paths.
struct Criterion {
  CriterionKind kind = CriterionKind::kNash;
  double rho = 0.0;    // mean weight in the mean–variance objective
  double alpha = 1.0;  // upper-tail probability in the CVaR objective

  static Criterion nash() { return {CriterionKind::kNash, 0.0, 1.0}; }
  static Criterion rae() { return {CriterionKind::kRae, 0.0, 1.0}; }
  static Criterion mv(double rho) { return {CriterionKind::kMv, rho, 1.0}; }
  static Criterion cvar(double alpha) { return {CriterionKind::kCvar, 0.0, alpha}; }

  // Probability-of-shortest is maximized; every other objective is a cost.
  bool maximize() const { return kind == CriterionKind::kRae; }

  friend bool operator==(const Criterion&, const Criterion&) = default;
};

struct CriterionValue {
  Criterion criterion;
  double value = 0.0;
  double se = 0.0;  // Monte Carlo standard error; 0 for analytic values
  bool maximize() const { return criterion.maximize(); }
};

// Monte Carlo estimate with its standard error.
struct McValue {
  double value = 0.0;
  double se = 0.0;
};

// One simplex per player over that player's pair path list.
struct MixedProfile {
  std::vector<std::vector<double>> strategy;
};

// Delay law of `path` under the loads induced by a complete assignment
// (the path's own player included).  Throws if the path is not one of its
// pair's listed paths.
Distribution path_delay_distribution(const Game& game, const PathCounts& counts,
                                     const Path& path, const GridPolicy& policy = {});
Distribution path_delay_distribution(const Game& game, const PureProfile& profile,
                                     const Path& path, const GridPolicy& policy = {});

// Mean and variance of the path delay (links are independent, so both add).
std::pair<double, double> pure_mean_var(const Game& game, const PathCounts& counts,
                                        const Path& path);
std::pair<double, double> pure_mean_var(const Game& game, const PureProfile& profile,
                                        const Path& path);

// Upper-tail conditional expectation of the path delay.
double pure_cvar(const Game& game, const PathCounts& counts, const Path& path,
                 double alpha);
double pure_cvar(const Game& game, const PureProfile& profile, const Path& path,
                 double alpha);

// P(candidate path is weakly shortest among the pair's paths) for one player
// of `pair`, with every other player fixed at `others` (counts without the
// evaluated player).  Each compared path sees the player on it, i.e. every
// link of the pair's paths is loaded one above `others`; links are sampled
// once per replication so shared links correlate the compared delays.
// A pair with a single path returns exactly 1.
McValue pure_prob_min(const Game& game, const PathCounts& others, int pair,
                      int candidate, const McSettings& mc = {});

/**
 * Criterion evaluator with a cache for the Monte Carlo probabilities.
 * All evaluations are deterministic given the settings' seed: each
 * (pair, others, candidate) triple gets its own substream.
 */
class PathEvaluator {
 public:
  explicit PathEvaluator(const Game& game, McSettings mc = {})
      : game_(&game), mc_(mc) {}

  const Game& game() const { return *game_; }
  const McSettings& mc() const { return mc_; }

  // Cached pure_prob_min.
  McValue prob_min(const PathCounts& others, int pair, int candidate) const;

  // Value of `candidate` for a player of `pair` whose opponents sit at
  // `others`; the player itself is placed on the candidate path.
  CriterionValue value_pure(const Criterion& criterion, const PathCounts& others,
                            int pair, int candidate) const;

  // Value of `candidate` for `player` when every other player follows the
  // mixed profile (the player's own entry is ignored).
  CriterionValue value_mixed(const Criterion& criterion, int player, int candidate,
                             const MixedProfile& opponents) const;

  // Anonymity-collapsed law of the opponents' path counts under the profile:
  // all pure opponent assignments that differ only by same-pair player
  // identity are merged.  Throws SupportExplosion past `max_profiles`.
  std::vector<std::pair<double, PathCounts>> opponent_count_law(
      int player, const MixedProfile& opponents, std::int64_t max_profiles = 1'000'000) const;

 private:
  const Game* game_;
  McSettings mc_;
  mutable std::map<std::vector<int>, McValue> prob_cache_;
};

// One-shot wrapper around PathEvaluator::value_mixed.
CriterionValue mixed_value(const Criterion& criterion, const Game& game, int player,
                           int candidate, const MixedProfile& opponents,
                           const McSettings& mc = {});

// `others` plus one player of `pair` on `candidate`.
PathCounts counts_with(const Game& game, const PathCounts& others, int pair,
                       int candidate);

}  // namespace scg
