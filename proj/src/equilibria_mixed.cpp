#include "scg/equilibria_mixed.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "scg/errors.hpp"

namespace scg {

namespace {

constexpr double kDefaultTolerance = 1e-4;
constexpr double kInteriorMargin = 1e-7;  // support probabilities below this
                                          // count as boundary solutions
constexpr std::int64_t kHypothesisCap = 1'000'000;

double improvement(const Criterion& c, double reference, double candidate) {
  return c.maximize() ? candidate - reference : reference - candidate;
}

// Comparison allowance: stderr-based when Monte Carlo, `tol` otherwise.
double allowed(const CriterionValue& a, const CriterionValue& b, double tol) {
  if (a.se > 0.0 || b.se > 0.0) return 3.0 * std::sqrt(a.se * a.se + b.se * b.se);
  return tol;
}

void validate_hypothesis(const Game& game, const SupportHypothesis& h) {
  if (static_cast<int>(h.paths.size()) != game.n())
    throw Error("ValidationError", "support hypothesis must list every player");
  for (int i = 0; i < game.n(); ++i) {
    const auto& s = h.paths[static_cast<std::size_t>(i)];
    const int paths = static_cast<int>(game.paths_of(game.pair_of_player(i)).size());
    if (s.empty())
      throw Error("ValidationError",
                  "empty support for player " + std::to_string(i));
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (s[j] < 0 || s[j] >= paths)
        throw Error("ValidationError", "support path index out of range");
      if (j > 0 && s[j] <= s[j - 1])
        throw Error("ValidationError", "support paths must be ascending and unique");
    }
  }
}

int path_count(const Game& game, int player) {
  return static_cast<int>(game.paths_of(game.pair_of_player(player)).size());
}

std::vector<CriterionValue> player_values(const Criterion& criterion,
                                          const PathEvaluator& ev, int player,
                                          const MixedProfile& sigma) {
  const int paths = path_count(ev.game(), player);
  std::vector<CriterionValue> values;
  values.reserve(static_cast<std::size_t>(paths));
  for (int c = 0; c < paths; ++c)
    values.push_back(ev.value_mixed(criterion, player, c, sigma));
  return values;
}

struct ProfileEval {
  double max_excess = -std::numeric_limits<double>::infinity();
  double max_raw = -std::numeric_limits<double>::infinity();
};

// Worst violation of the equilibrium conditions on the hypothesized support:
// indifference across support paths and no profitable off-support deviation.
ProfileEval eval_profile(const Criterion& criterion, const PathEvaluator& ev,
                         const SupportHypothesis& h, const MixedProfile& sigma,
                         double tol) {
  const auto& game = ev.game();
  ProfileEval out;
  for (int i = 0; i < game.n(); ++i) {
    const auto& sup = h.paths[static_cast<std::size_t>(i)];
    const auto values = player_values(criterion, ev, i, sigma);
    for (std::size_t a = 0; a < sup.size(); ++a)
      for (std::size_t b = a + 1; b < sup.size(); ++b) {
        const auto& va = values[static_cast<std::size_t>(sup[a])];
        const auto& vb = values[static_cast<std::size_t>(sup[b])];
        const double raw = std::abs(va.value - vb.value);
        out.max_raw = std::max(out.max_raw, raw);
        out.max_excess = std::max(out.max_excess, raw - allowed(va, vb, tol));
      }
    CriterionValue achieved{criterion, 0.0, 0.0};
    double se2 = 0.0;
    const auto& row = sigma.strategy[static_cast<std::size_t>(i)];
    for (int a : sup) {
      const auto& v = values[static_cast<std::size_t>(a)];
      achieved.value += row[static_cast<std::size_t>(a)] * v.value;
      se2 += row[static_cast<std::size_t>(a)] * v.se * row[static_cast<std::size_t>(a)] * v.se;
    }
    achieved.se = std::sqrt(se2);
    for (int c = 0; c < static_cast<int>(values.size()); ++c) {
      if (std::find(sup.begin(), sup.end(), c) != sup.end()) continue;
      const auto& v = values[static_cast<std::size_t>(c)];
      const double gain = improvement(criterion, achieved.value, v.value);
      out.max_raw = std::max(out.max_raw, gain);
      out.max_excess = std::max(out.max_excess, gain - allowed(achieved, v, tol));
    }
  }
  if (!std::isfinite(out.max_raw)) out.max_raw = 0.0;
  if (!std::isfinite(out.max_excess)) out.max_excess = 0.0;
  return out;
}

MixedProfile make_template(const Game& game, const SupportHypothesis& h) {
  MixedProfile sigma;
  sigma.strategy.resize(static_cast<std::size_t>(game.n()));
  for (int i = 0; i < game.n(); ++i) {
    auto& row = sigma.strategy[static_cast<std::size_t>(i)];
    row.assign(static_cast<std::size_t>(path_count(game, i)), 0.0);
    const auto& sup = h.paths[static_cast<std::size_t>(i)];
    for (int a : sup) row[static_cast<std::size_t>(a)] = 1.0 / static_cast<double>(sup.size());
  }
  return sigma;
}

void set_row(MixedProfile& sigma, int player, const std::vector<int>& support,
             const std::vector<double>& probs) {
  auto& row = sigma.strategy[static_cast<std::size_t>(player)];
  std::fill(row.begin(), row.end(), 0.0);
  for (std::size_t j = 0; j < support.size(); ++j)
    row[static_cast<std::size_t>(support[j])] = probs[j];
}

// ---------------------------------------------------------------------------
// Two-player direct solving: player (1-j)'s indifference conditions pin
// player j's strategy, so the two sides are independent one- or
// two-dimensional root searches on the support simplices.

// Residual of the judge's indifference equalities beyond the allowance.
double judge_excess(const Criterion& criterion, const PathEvaluator& ev, int judge,
                    const std::vector<int>& judge_support, const MixedProfile& sigma,
                    double tol) {
  double worst = -std::numeric_limits<double>::infinity();
  std::vector<CriterionValue> values;
  values.reserve(judge_support.size());
  for (int c : judge_support) values.push_back(ev.value_mixed(criterion, judge, c, sigma));
  for (std::size_t a = 0; a < values.size(); ++a)
    for (std::size_t b = a + 1; b < values.size(); ++b)
      worst = std::max(worst, std::abs(values[a].value - values[b].value) -
                                  allowed(values[a], values[b], tol));
  return worst;
}

// Signed first difference of the judge's support values (root = indifference).
double judge_diff(const Criterion& criterion, const PathEvaluator& ev, int judge,
                  const std::vector<int>& judge_support, const MixedProfile& sigma) {
  const auto va = ev.value_mixed(criterion, judge, judge_support[0], sigma);
  const auto vb = ev.value_mixed(criterion, judge, judge_support[1], sigma);
  return va.value - vb.value;
}

struct SideSolution {
  bool ok = false;
  std::vector<double> probs;  // over the mixer's support
};

// One unknown: mixer mixes (q, 1-q).  Finds a sign-change root of the
// judge's first difference (exact indifference for a square system), or the
// grid-refined minimiser of the residual when the system is overdetermined.
SideSolution solve_side_1d(const Criterion& criterion, const PathEvaluator& ev,
                           MixedProfile sigma, int mixer,
                           const std::vector<int>& mixer_support, int judge,
                           const std::vector<int>& judge_support, double tol) {
  const auto at = [&](double q) -> MixedProfile& {
    set_row(sigma, mixer, mixer_support, {q, 1.0 - q});
    return sigma;
  };
  SideSolution out;
  const int kGrid = 64;

  if (judge_support.size() == 2) {
    std::vector<double> f(kGrid + 1);
    for (int k = 0; k <= kGrid; ++k)
      f[static_cast<std::size_t>(k)] =
          judge_diff(criterion, ev, judge, judge_support, at(static_cast<double>(k) / kGrid));
    for (int k = 0; k < kGrid; ++k) {
      const double fa = f[static_cast<std::size_t>(k)];
      const double fb = f[static_cast<std::size_t>(k + 1)];
      if (fa == 0.0 || fa * fb < 0.0) {
        double lo = static_cast<double>(k) / kGrid, hi = static_cast<double>(k + 1) / kGrid;
        double flo = fa;
        for (int it = 0; it < 100; ++it) {
          const double mid = 0.5 * (lo + hi);
          const double fm = judge_diff(criterion, ev, judge, judge_support, at(mid));
          if (fm == 0.0) {
            lo = hi = mid;
            break;
          }
          if ((flo < 0.0) == (fm < 0.0)) {
            lo = mid;
            flo = fm;
          } else {
            hi = mid;
          }
        }
        const double q = 0.5 * (lo + hi);
        if (q < kInteriorMargin || q > 1.0 - kInteriorMargin) continue;
        if (judge_excess(criterion, ev, judge, judge_support, at(q), tol) <= 0.0) {
          out.ok = true;
          out.probs = {q, 1.0 - q};
          return out;
        }
      }
    }
  }

  // Overdetermined (or no sign change): minimise the worst equality excess.
  const auto h = [&](double q) {
    return judge_excess(criterion, ev, judge, judge_support, at(q), tol);
  };
  double best_q = 0.0, best = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= kGrid; ++k) {
    const double q = static_cast<double>(k) / kGrid;
    const double v = h(q);
    if (v < best) {
      best = v;
      best_q = q;
    }
  }
  double w = 1.0 / kGrid;
  for (int round = 0; round < 8; ++round) {
    const double lo = std::max(0.0, best_q - w), hi = std::min(1.0, best_q + w);
    for (int k = 0; k <= 16; ++k) {
      const double q = lo + (hi - lo) * static_cast<double>(k) / 16.0;
      const double v = h(q);
      if (v < best) {
        best = v;
        best_q = q;
      }
    }
    w /= 6.0;
  }
  if (best <= 0.0 && best_q >= kInteriorMargin && best_q <= 1.0 - kInteriorMargin) {
    out.ok = true;
    out.probs = {best_q, 1.0 - best_q};
  }
  return out;
}

// Two unknowns: mixer mixes (x, y, 1-x-y).  Grid search plus local
// refinement of the judge's worst equality excess over the simplex.
SideSolution solve_side_2d(const Criterion& criterion, const PathEvaluator& ev,
                           MixedProfile sigma, int mixer,
                           const std::vector<int>& mixer_support, int judge,
                           const std::vector<int>& judge_support, double tol) {
  const auto h = [&](double x, double y) {
    set_row(sigma, mixer, mixer_support, {x, y, 1.0 - x - y});
    return judge_excess(criterion, ev, judge, judge_support, sigma, tol);
  };
  double bx = 1.0 / 3, by = 1.0 / 3, best = std::numeric_limits<double>::infinity();
  const int kGrid = 32;
  for (int i = 0; i <= kGrid; ++i)
    for (int j = 0; i + j <= kGrid; ++j) {
      const double x = static_cast<double>(i) / kGrid;
      const double y = static_cast<double>(j) / kGrid;
      const double v = h(x, y);
      if (v < best) {
        best = v;
        bx = x;
        by = y;
      }
    }
  double w = 1.0 / kGrid;
  for (int round = 0; round < 8; ++round) {
    const double x0 = bx, y0 = by;
    for (int i = -6; i <= 6; ++i)
      for (int j = -6; j <= 6; ++j) {
        const double x = x0 + w * static_cast<double>(i) / 6.0;
        const double y = y0 + w * static_cast<double>(j) / 6.0;
        if (x < 0.0 || y < 0.0 || x + y > 1.0) continue;
        const double v = h(x, y);
        if (v < best) {
          best = v;
          bx = x;
          by = y;
        }
      }
    w /= 4.0;
  }
  SideSolution out;
  const double bz = 1.0 - bx - by;
  if (best <= 0.0 && bx >= kInteriorMargin && by >= kInteriorMargin &&
      bz >= kInteriorMargin) {
    out.ok = true;
    out.probs = {bx, by, bz};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Damped fixed point for three or more players (or large supports): each
// sweep tilts every player's support mixture toward its better-valued paths
// until the indifference conditions settle.

SupportSolveResult solve_damped(const Criterion& criterion, const PathEvaluator& ev,
                                const SupportHypothesis& h, double tol) {
  const auto& game = ev.game();
  MixedProfile sigma = make_template(game, h);
  const double dir = criterion.maximize() ? 1.0 : -1.0;
  const int kMaxSweeps = 2000;
  int settled = 0;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double worst = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < game.n(); ++i) {
      const auto& sup = h.paths[static_cast<std::size_t>(i)];
      if (sup.size() < 2) continue;
      const auto values = player_values(criterion, ev, i, sigma);
      auto& row = sigma.strategy[static_cast<std::size_t>(i)];
      double mean = 0.0, scale = 1.0;
      for (int a : sup) {
        mean += row[static_cast<std::size_t>(a)] * values[static_cast<std::size_t>(a)].value;
        scale = std::max(scale, std::abs(values[static_cast<std::size_t>(a)].value));
      }
      double sum = 0.0;
      std::vector<double> next(sup.size());
      for (std::size_t j = 0; j < sup.size(); ++j) {
        const auto& v = values[static_cast<std::size_t>(sup[j])];
        next[j] = row[static_cast<std::size_t>(sup[j])] *
                  std::exp(0.8 * dir * (v.value - mean) / scale);
        sum += next[j];
      }
      for (std::size_t j = 0; j < sup.size(); ++j) {
        auto& p = row[static_cast<std::size_t>(sup[j])];
        p = 0.5 * p + 0.5 * next[j] / sum;
      }
      for (std::size_t a = 0; a < sup.size(); ++a)
        for (std::size_t b = a + 1; b < sup.size(); ++b) {
          const auto& va = values[static_cast<std::size_t>(sup[a])];
          const auto& vb = values[static_cast<std::size_t>(sup[b])];
          worst = std::max(worst,
                           std::abs(va.value - vb.value) - allowed(va, vb, tol));
        }
    }
    settled = worst <= 0.0 ? settled + 1 : 0;
    if (settled >= 2) break;
    double low = 1.0;
    for (int i = 0; i < game.n(); ++i)
      for (int a : h.paths[static_cast<std::size_t>(i)])
        low = std::min(low, sigma.strategy[static_cast<std::size_t>(i)]
                                          [static_cast<std::size_t>(a)]);
    if (low < 1e-12) break;  // support collapsed; no interior solution here
  }
  SupportSolveResult out;
  double min_prob = 1.0;
  for (int i = 0; i < game.n(); ++i)
    for (int a : h.paths[static_cast<std::size_t>(i)])
      min_prob = std::min(
          min_prob, sigma.strategy[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)]);
  const auto final_eval = eval_profile(criterion, ev, h, sigma, tol);
  out.residual = final_eval.max_raw;
  if (final_eval.max_excess <= 0.0 && min_prob >= kInteriorMargin) {
    out.status = SupportStatus::kSolved;
    out.profile = std::move(sigma);
  } else if (settled >= 2 || min_prob < kInteriorMargin) {
    out.status = SupportStatus::kInfeasible;
  } else {
    out.status = SupportStatus::kNonConvergence;
  }
  return out;
}

}  // namespace

std::vector<ProbabilityTensorEntry> build_probability_tensor(const PathEvaluator& ev,
                                                             std::int64_t cap) {
  const auto& game = ev.game();
  std::int64_t total = 1;
  for (int i = 0; i < game.n(); ++i) {
    total *= path_count(game, i);
    if (total > cap)
      throw Error("TensorCap", "tensor would hold more than " + std::to_string(cap) +
                                   " pure profiles");
  }
  std::vector<ProbabilityTensorEntry> tensor;
  tensor.reserve(static_cast<std::size_t>(total));
  PureProfile profile;
  profile.choice.assign(static_cast<std::size_t>(game.n()), 0);
  while (true) {
    ProbabilityTensorEntry entry;
    entry.profile = profile;
    const auto counts = counts_of(game, profile);
    for (int i = 0; i < game.n(); ++i) {
      const int pair = game.pair_of_player(i);
      const int chosen = profile.choice[static_cast<std::size_t>(i)];
      auto others = counts;
      --others[static_cast<std::size_t>(pair)][static_cast<std::size_t>(chosen)];
      const auto p = ev.prob_min(others, pair, chosen);
      entry.value.push_back(p.value);
      entry.se.push_back(p.se);
    }
    tensor.push_back(std::move(entry));
    int i = game.n() - 1;
    for (; i >= 0; --i) {
      auto& c = profile.choice[static_cast<std::size_t>(i)];
      if (++c < path_count(game, i)) break;
      c = 0;
    }
    if (i < 0) break;
  }
  return tensor;
}

SupportSolveResult solve_support(const Criterion& criterion, const PathEvaluator& ev,
                                 const SupportHypothesis& hypothesis,
                                 double tolerance) {
  const auto& game = ev.game();
  validate_hypothesis(game, hypothesis);
  const double tol = tolerance > 0.0 ? tolerance : kDefaultTolerance;

  bool oversized = false;
  for (const auto& s : hypothesis.paths) oversized = oversized || s.size() > 3;
  if (game.n() >= 3 || oversized) return solve_damped(criterion, ev, hypothesis, tol);

  MixedProfile sigma = make_template(game, hypothesis);
  SupportSolveResult out;

  if (game.n() == 2) {
    for (int mixer = 0; mixer < 2; ++mixer) {
      const int judge = 1 - mixer;
      const auto& mix_sup = hypothesis.paths[static_cast<std::size_t>(mixer)];
      const auto& judge_sup = hypothesis.paths[static_cast<std::size_t>(judge)];
      const std::size_t unknowns = mix_sup.size() - 1;
      const std::size_t equations = judge_sup.size() - 1;
      if (unknowns == 0) continue;  // strategy fixed by the support
      if (equations < unknowns) return out;  // under-determined continuum
      const auto side =
          unknowns == 1
              ? solve_side_1d(criterion, ev, sigma, mixer, mix_sup, judge, judge_sup, tol)
              : solve_side_2d(criterion, ev, sigma, mixer, mix_sup, judge, judge_sup, tol);
      if (!side.ok) return out;
      set_row(sigma, mixer, mix_sup, side.probs);
    }
  } else {
    // Single player: candidate values are constants, so any mixing support is
    // a non-generic continuum; only degenerate supports are solvable.
    if (hypothesis.paths[0].size() > 1) return out;
  }

  const auto final_eval = eval_profile(criterion, ev, hypothesis, sigma, tol);
  out.residual = final_eval.max_raw;
  if (final_eval.max_excess <= 0.0) {
    out.status = SupportStatus::kSolved;
    out.profile = std::move(sigma);
  }
  return out;
}

std::vector<MixedProfile> enumerate_mixed_equilibria(const Criterion& criterion,
                                                     const PathEvaluator& ev,
                                                     int max_players) {
  const auto& game = ev.game();
  if (game.n() > max_players)
    throw Error("PlayersCap",
                "mixed support enumeration over " + std::to_string(game.n()) +
                    " players is exponential; raise max_players to accept the cost");
  std::int64_t total = 1;
  std::vector<int> masks(static_cast<std::size_t>(game.n()), 1);
  for (int i = 0; i < game.n(); ++i) {
    const int p = path_count(game, i);
    if (p > 20 || (total *= (std::int64_t{1} << p) - 1) > kHypothesisCap)
      throw Error("EnumerationCap", "support hypothesis count exceeds " +
                                        std::to_string(kHypothesisCap));
  }

  std::vector<MixedProfile> found;
  while (true) {
    SupportHypothesis h;
    h.paths.resize(static_cast<std::size_t>(game.n()));
    for (int i = 0; i < game.n(); ++i)
      for (int p = 0; p < path_count(game, i); ++p)
        if (masks[static_cast<std::size_t>(i)] & (1 << p))
          h.paths[static_cast<std::size_t>(i)].push_back(p);
    const auto result = solve_support(criterion, ev, h);
    if (result.status == SupportStatus::kSolved) {
      bool duplicate = false;
      for (const auto& seen : found) {
        double dist = 0.0;
        for (std::size_t i = 0; i < seen.strategy.size(); ++i)
          for (std::size_t p = 0; p < seen.strategy[i].size(); ++p)
            dist = std::max(dist, std::abs(seen.strategy[i][p] -
                                           result.profile.strategy[i][p]));
        if (dist <= 1e-3) {
          duplicate = true;
          break;
        }
      }
      if (!duplicate) found.push_back(result.profile);
    }
    int i = game.n() - 1;
    for (; i >= 0; --i) {
      auto& m = masks[static_cast<std::size_t>(i)];
      if (++m < (1 << path_count(game, i))) break;
      m = 1;
    }
    if (i < 0) break;
  }
  return found;
}

MixedEquilibriumCheck verify_equilibrium(const Criterion& criterion,
                                         const PathEvaluator& ev,
                                         const MixedProfile& profile,
                                         std::uint64_t fresh_seed) {
  const auto& game = ev.game();
  if (static_cast<int>(profile.strategy.size()) != game.n())
    throw Error("ValidationError", "profile must cover every player");
  const PathEvaluator fresh(game,
                            {fresh_seed, ev.mc().replications, ev.mc().max_threads});
  MixedEquilibriumCheck out;
  out.ok = true;
  out.max_gain = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < game.n(); ++i) {
    const auto values = player_values(criterion, fresh, i, profile);
    const auto& row = profile.strategy[static_cast<std::size_t>(i)];
    CriterionValue achieved{criterion, 0.0, 0.0};
    double se2 = 0.0;
    for (std::size_t p = 0; p < row.size(); ++p) {
      achieved.value += row[p] * values[p].value;
      se2 += row[p] * values[p].se * row[p] * values[p].se;
    }
    achieved.se = std::sqrt(se2);
    for (const auto& v : values) {
      const double gain = improvement(criterion, achieved.value, v.value);
      out.max_gain = std::max(out.max_gain, gain);
      if (gain > allowed(achieved, v, kDefaultTolerance)) out.ok = false;
    }
  }
  if (!std::isfinite(out.max_gain)) out.max_gain = 0.0;
  return out;
}

}  // namespace scg
