#include "scg/nonatomic.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <utility>

#include "scg/errors.hpp"
#include "scg/rng.hpp"

namespace scg {

namespace {

constexpr double kSimplexSlack = 1e-9;  // fraction-simplex validation slack
constexpr double kUsedEps = 1e-9;       // smallest fraction that counts as "used"
constexpr double kCornerSnap = 1e-6;    // roots this close to an endpoint are corners

void require_pair(const Game& game, int pair) {
  if (pair < 0 || pair >= game.num_pairs())
    throw Error("ValidationError", "pair index out of range");
}

// Advantage of value `va` over `vb` for the criterion's sense: positive means
// the first is strictly better.
double advantage(const Criterion& criterion, double va, double vb) {
  return criterion.maximize() ? va - vb : vb - va;
}

// Per-comparison allowance: three combined standard errors for Monte Carlo
// values, the analytic tolerance otherwise.
double allowance(double tolerance, double se_a, double se_b) {
  const double rss = std::sqrt(se_a * se_a + se_b * se_b);
  return rss > 0.0 ? 3.0 * rss : tolerance;
}

double path_mean_at(const Game& game, const std::vector<double>& loads,
                    const Path& path) {
  double mean = 0.0;
  for (int id : path) {
    const int e = game.link_index(id);
    mean += game.links()[static_cast<std::size_t>(e)]
                .family.at_fraction(loads[static_cast<std::size_t>(e)])
                .mean();
  }
  return mean;
}

Distribution path_distribution_at(const Game& game,
                                  const std::vector<double>& loads,
                                  const Path& path) {
  Distribution acc = Distribution::point_mass(0.0);
  for (int id : path) {
    const int e = game.link_index(id);
    acc = acc.convolve(game.links()[static_cast<std::size_t>(e)].family.at_fraction(
        loads[static_cast<std::size_t>(e)]));
  }
  return acc;
}

double analytic_value(const Criterion& criterion, const Game& game,
                      const std::vector<double>& loads, const Path& path) {
  switch (criterion.kind) {
    case CriterionKind::kNash:
      return path_mean_at(game, loads, path);
    case CriterionKind::kMv: {
      double mean = 0.0, var = 0.0;
      for (int id : path) {
        const int e = game.link_index(id);
        const auto d = game.links()[static_cast<std::size_t>(e)].family.at_fraction(
            loads[static_cast<std::size_t>(e)]);
        mean += d.mean();
        var += d.variance();
      }
      return var + criterion.rho * mean;
    }
    case CriterionKind::kCvar:
      return path_distribution_at(game, loads, path).cvar_upper(criterion.alpha);
    case CriterionKind::kRae:
      break;
  }
  throw Error("ValidationError", "probability criterion has no closed form");
}

// Criterion values (and standard errors) of every path of one pair under a
// flow.  The probability criterion is one joint Monte Carlo pass; the rest
// are closed form with zero standard error.
struct FlowValues {
  std::vector<double> value;
  std::vector<double> se;
};

FlowValues pair_values(const Criterion& criterion, const Game& game,
                       const FractionProfile& fractions, int pair,
                       const McSettings& mc) {
  const auto& paths = game.paths_of(pair);
  FlowValues out;
  out.value.resize(paths.size(), 0.0);
  out.se.resize(paths.size(), 0.0);
  if (criterion.kind == CriterionKind::kRae) {
    const auto probs = nonatomic_prob_min(game, fractions, pair, mc);
    for (std::size_t p = 0; p < paths.size(); ++p) {
      out.value[p] = probs[p].value;
      out.se[p] = probs[p].se;
    }
    return out;
  }
  const auto loads = fraction_loads(game, fractions);
  for (std::size_t p = 0; p < paths.size(); ++p)
    out.value[p] = analytic_value(criterion, game, loads, paths[p]);
  return out;
}

// Wardrop conditions for one pair's flow: used paths mutually within the
// allowance of each other, and no unused path strictly better than the best
// used value.
bool wardrop_ok(const Criterion& criterion, const FlowValues& vals,
                const std::vector<double>& row, double tolerance) {
  int best = -1, worst = -1;
  for (std::size_t p = 0; p < row.size(); ++p) {
    if (row[p] <= kUsedEps) continue;
    const int ip = static_cast<int>(p);
    if (best < 0 ||
        advantage(criterion, vals.value[p], vals.value[static_cast<std::size_t>(best)]) > 0.0)
      best = ip;
    if (worst < 0 ||
        advantage(criterion, vals.value[static_cast<std::size_t>(worst)], vals.value[p]) > 0.0)
      worst = ip;
  }
  if (best < 0) return false;  // no used path at all
  const auto ub = static_cast<std::size_t>(best);
  const auto uw = static_cast<std::size_t>(worst);
  if (advantage(criterion, vals.value[ub], vals.value[uw]) >
      allowance(tolerance, vals.se[ub], vals.se[uw]))
    return false;
  for (std::size_t q = 0; q < row.size(); ++q) {
    if (row[q] > kUsedEps) continue;
    if (advantage(criterion, vals.value[q], vals.value[ub]) >
        allowance(tolerance, vals.se[q], vals.se[ub]))
      return false;
  }
  return true;
}

void require_solvable(const Game& game) {
  if (game.num_pairs() != 1)
    throw Error("ValidationError",
                "continuum solver handles a single origin-destination pair");
  const auto m = game.paths_of(0).size();
  if (m < 1 || m > 3)
    throw Error("ValidationError",
                "continuum solver handles between one and three paths, got " +
                    std::to_string(m));
}

// Zero out dust and renormalize so the returned flow is an exact simplex.
std::vector<double> snap_row(std::vector<double> row, double eps = kUsedEps) {
  double sum = 0.0;
  for (double& p : row) {
    if (p < eps) p = 0.0;
    sum += p;
  }
  for (double& p : row) p /= sum;
  return row;
}

/**
 * Equilibrium search along a one-parameter family of flows `flow(a)`,
 * a in [0, a_max], where the fraction of path `up` grows with `a` and the
 * fraction of path `down` shrinks.  The value gap psi(a) = advantage of `up`
 * over `down` is scanned on a grid; sign changes are bisected, and every
 * candidate (roots snapped to corners when within kCornerSnap) must pass
 * the full Wardrop check before it is returned.  Falls back to the two endpoint
 * corners, then reports NoBracket.
 */
FractionProfile solve_on_line(const Criterion& criterion, const Game& game,
                              const NonatomicOptions& options,
                              const std::function<FractionProfile(double)>& flow,
                              double a_max, int up, int down) {
  const auto values_at = [&](const FractionProfile& f) {
    return pair_values(criterion, game, f, 0, options.mc);
  };
  const auto psi_at = [&](double a) {
    const auto v = values_at(flow(a));
    return advantage(criterion, v.value[static_cast<std::size_t>(up)],
                     v.value[static_cast<std::size_t>(down)]);
  };
  const auto try_flow = [&](double a) -> std::optional<FractionProfile> {
    if (a < kCornerSnap) a = 0.0;
    if (a_max - a < kCornerSnap) a = a_max;
    auto f = flow(a);
    f.fractions[0] = snap_row(std::move(f.fractions[0]));
    if (wardrop_ok(criterion, values_at(f), f.fractions[0], options.tolerance))
      return f;
    return std::nullopt;
  };

  constexpr int kGrid = 32;
  std::vector<double> psi(kGrid + 1);
  for (int k = 0; k <= kGrid; ++k)
    psi[static_cast<std::size_t>(k)] = psi_at(a_max * k / kGrid);

  for (int k = 0; k <= kGrid; ++k) {
    const double pk = psi[static_cast<std::size_t>(k)];
    const double ak = a_max * k / kGrid;
    if (pk == 0.0) {
      if (auto f = try_flow(ak)) return *f;
      continue;
    }
    if (k == kGrid) break;
    const double pn = psi[static_cast<std::size_t>(k + 1)];
    if (pn == 0.0 || (pk > 0.0) == (pn > 0.0)) continue;
    double lo = ak, hi = a_max * (k + 1) / kGrid, flo = pk;
    for (int it = 0; it < 100 && hi - lo > 1e-11; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double fm = psi_at(mid);
      if (fm == 0.0) {
        lo = hi = mid;
        break;
      }
      if ((fm > 0.0) == (flo > 0.0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    if (auto f = try_flow(0.5 * (lo + hi))) return *f;
  }
  if (auto f = try_flow(0.0)) return *f;
  if (auto f = try_flow(a_max)) return *f;
  throw Error("NoBracket",
              "no flow equalizes the path values and no corner passes the "
              "deviation check");
}

// Three paths without a declared symmetry: minimize the worst Wardrop
// violation over the flow simplex by coarse grid plus local refinement.
FractionProfile solve_on_simplex(const Criterion& criterion, const Game& game,
                                 const NonatomicOptions& options) {
  const auto violation = [&](double x, double y) {
    const double z = std::max(0.0, 1.0 - x - y);
    FractionProfile f{{snap_row({x, y, z})}};
    const auto v = pair_values(criterion, game, f, 0, options.mc);
    const auto& row = f.fractions[0];
    int best = -1, worst = -1;
    for (std::size_t p = 0; p < row.size(); ++p) {
      if (row[p] <= kUsedEps) continue;
      const int ip = static_cast<int>(p);
      if (best < 0 ||
          advantage(criterion, v.value[p], v.value[static_cast<std::size_t>(best)]) > 0.0)
        best = ip;
      if (worst < 0 ||
          advantage(criterion, v.value[static_cast<std::size_t>(worst)], v.value[p]) > 0.0)
        worst = ip;
    }
    const auto ub = static_cast<std::size_t>(best);
    const auto uw = static_cast<std::size_t>(worst);
    double score = advantage(criterion, v.value[ub], v.value[uw]) -
                   allowance(options.tolerance, v.se[ub], v.se[uw]);
    for (std::size_t q = 0; q < row.size(); ++q) {
      if (row[q] > kUsedEps) continue;
      score = std::max(score, advantage(criterion, v.value[q], v.value[ub]) -
                                  allowance(options.tolerance, v.se[q], v.se[ub]));
    }
    return score;
  };

  const int coarse = criterion.kind == CriterionKind::kRae ? 24 : 64;
  double bx = 0.0, by = 0.0, bs = violation(0.0, 0.0);
  for (int i = 0; i <= coarse; ++i) {
    for (int j = 0; j <= coarse - i; ++j) {
      const double x = static_cast<double>(i) / coarse;
      const double y = static_cast<double>(j) / coarse;
      if (i == 0 && j == 0) continue;
      const double s = violation(x, y);
      if (s < bs) {
        bs = s;
        bx = x;
        by = y;
      }
    }
  }
  double w = 1.0 / coarse;
  for (int round = 0; round < 10; ++round) {
    const double x0 = std::max(0.0, bx - w), x1 = std::min(1.0, bx + w);
    const double y0 = std::max(0.0, by - w), y1 = std::min(1.0, by + w);
    for (int i = 0; i <= 12; ++i) {
      for (int j = 0; j <= 12; ++j) {
        const double x = x0 + (x1 - x0) * i / 12.0;
        const double y = y0 + (y1 - y0) * j / 12.0;
        if (x + y > 1.0 + 1e-12) continue;
        const double s = violation(x, y);
        if (s < bs) {
          bs = s;
          bx = x;
          by = y;
        }
      }
    }
    w /= 4.0;
  }
  if (bs > 0.0)
    throw Error("NoBracket",
                "no flow on the simplex satisfies the equilibrium conditions "
                "within tolerance");
  return FractionProfile{{snap_row({bx, by, std::max(0.0, 1.0 - bx - by)})}};
}

// Golden-section refinement of a bracketed one-dimensional minimum.
double golden_min(const std::function<double(double)>& f, double lo, double hi) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - kInvPhi * (b - a), d = a + kInvPhi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > 1e-11) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

void validate_fractions(const Game& game, const FractionProfile& fractions) {
  if (static_cast<int>(fractions.fractions.size()) != game.num_pairs())
    throw Error("ValidationError", "fractions must cover every demand pair");
  for (int k = 0; k < game.num_pairs(); ++k) {
    const auto& row = fractions.fractions[static_cast<std::size_t>(k)];
    if (row.size() != game.paths_of(k).size())
      throw Error("ValidationError",
                  "fractions must cover every path of pair " + std::to_string(k));
    double sum = 0.0;
    for (double p : row) {
      if (!std::isfinite(p) || p < -kSimplexSlack)
        throw Error("ValidationError", "path fractions must be non-negative");
      sum += p;
    }
    if (std::abs(sum - 1.0) > kSimplexSlack)
      throw Error("ValidationError", "path fractions must sum to 1");
  }
}

std::vector<double> fraction_loads(const Game& game,
                                   const FractionProfile& fractions) {
  validate_fractions(game, fractions);
  std::vector<double> loads(game.links().size(), 0.0);
  for (int k = 0; k < game.num_pairs(); ++k) {
    const auto& paths = game.paths_of(k);
    const auto& row = fractions.fractions[static_cast<std::size_t>(k)];
    for (std::size_t p = 0; p < paths.size(); ++p) {
      if (row[p] == 0.0) continue;
      for (int id : paths[p])
        loads[static_cast<std::size_t>(game.link_index(id))] += row[p];
    }
  }
  // Absorb simplex dust; genuinely overloaded links (possible only with
  // overlapping multi-pair flows) are left for at_fraction to reject.
  for (double& u : loads) {
    if (u < 0.0 && u > -kSimplexSlack) u = 0.0;
    if (u > 1.0 && u < 1.0 + kSimplexSlack) u = 1.0;
  }
  return loads;
}

std::vector<McValue> nonatomic_prob_min(const Game& game,
                                        const FractionProfile& fractions,
                                        int pair, const McSettings& mc) {
  require_pair(game, pair);
  const auto loads = fraction_loads(game, fractions);
  const auto& paths = game.paths_of(pair);
  const int num_paths = static_cast<int>(paths.size());
  if (num_paths == 1) return {McValue{1.0, 0.0}};

  std::vector<int> union_ids;
  for (const auto& p : paths) union_ids.insert(union_ids.end(), p.begin(), p.end());
  std::sort(union_ids.begin(), union_ids.end());
  union_ids.erase(std::unique(union_ids.begin(), union_ids.end()), union_ids.end());

  std::vector<Distribution> stochastic;
  std::map<int, int> stochastic_index;
  std::map<int, double> constant_value;
  for (int id : union_ids) {
    const int e = game.link_index(id);
    auto d = game.links()[static_cast<std::size_t>(e)].family.at_fraction(
        loads[static_cast<std::size_t>(e)]);
    if (d.is_point_mass()) {
      constant_value[id] = d.point_value();
    } else {
      stochastic_index[id] = static_cast<int>(stochastic.size());
      stochastic.push_back(std::move(d));
    }
  }
  std::vector<double> shift(static_cast<std::size_t>(num_paths), 0.0);
  std::vector<std::vector<int>> terms(static_cast<std::size_t>(num_paths));
  for (int q = 0; q < num_paths; ++q) {
    for (int id : paths[static_cast<std::size_t>(q)]) {
      if (auto it = constant_value.find(id); it != constant_value.end())
        shift[static_cast<std::size_t>(q)] += it->second;
      else
        terms[static_cast<std::size_t>(q)].push_back(stochastic_index.at(id));
    }
  }

  // The substream depends on the pair but not on the flow: every flow is
  // driven by the same uniforms (each sample is a single inverse-CDF
  // transform), so estimates vary continuously as the flow varies.
  const std::uint64_t seed =
      absorb(absorb(mc.seed, 0x666C6F77), static_cast<std::uint64_t>(pair));
  const auto acc = mc_accumulate(
      mc.replications, seed, mc.max_threads, num_paths,
      [&](RandomStream& rs, std::int64_t count, double* out) {
        std::vector<double> x(stochastic.size());
        std::vector<double> delay(static_cast<std::size_t>(num_paths));
        for (std::int64_t r = 0; r < count; ++r) {
          for (std::size_t s = 0; s < stochastic.size(); ++s)
            x[s] = stochastic[s].sample(rs);
          double dmin = 0.0;
          for (int q = 0; q < num_paths; ++q) {
            double dq = shift[static_cast<std::size_t>(q)];
            for (int s : terms[static_cast<std::size_t>(q)])
              dq += x[static_cast<std::size_t>(s)];
            delay[static_cast<std::size_t>(q)] = dq;
            dmin = q == 0 ? dq : std::min(dmin, dq);
          }
          for (int q = 0; q < num_paths; ++q)
            if (delay[static_cast<std::size_t>(q)] <= dmin)
              out[q] += 1.0;
        }
      });
  std::vector<McValue> out(static_cast<std::size_t>(num_paths));
  for (int q = 0; q < num_paths; ++q) {
    const double p = acc[static_cast<std::size_t>(q)] / static_cast<double>(mc.replications);
    out[static_cast<std::size_t>(q)] = {
        p, std::sqrt(std::max(p * (1.0 - p), 0.0) /
                     static_cast<double>(mc.replications))};
  }
  return out;
}

double nonatomic_criterion_value(const Criterion& criterion, const Game& game,
                                 const FractionProfile& fractions, int pair,
                                 int path, const McSettings& mc) {
  require_pair(game, pair);
  if (path < 0 || path >= static_cast<int>(game.paths_of(pair).size()))
    throw Error("ValidationError", "path index out of range");
  if (criterion.kind == CriterionKind::kRae)
    return nonatomic_prob_min(game, fractions, pair, mc)[static_cast<std::size_t>(path)]
        .value;
  const auto loads = fraction_loads(game, fractions);
  return analytic_value(criterion, game, loads,
                        game.paths_of(pair)[static_cast<std::size_t>(path)]);
}

FractionProfile solve_nonatomic(const Criterion& criterion, const Game& game,
                                const NonatomicOptions& options) {
  require_solvable(game);
  const int m = static_cast<int>(game.paths_of(0).size());
  if (m == 1) return FractionProfile{{{1.0}}};
  if (m == 2) {
    return solve_on_line(
        criterion, game, options,
        [](double a) { return FractionProfile{{{a, 1.0 - a}}}; }, 1.0, 0, 1);
  }
  if (options.symmetric_paths) {
    const auto [i, j] = *options.symmetric_paths;
    if (i < 0 || j < 0 || i >= m || j >= m || i == j)
      throw Error("ValidationError", "symmetric path pair must name two distinct paths");
    const int mid = 3 - i - j;
    return solve_on_line(
        criterion, game, options,
        [i = i, j = j, mid](double a) {
          std::vector<double> row(3, 0.0);
          row[static_cast<std::size_t>(i)] = a;
          row[static_cast<std::size_t>(j)] = a;
          row[static_cast<std::size_t>(mid)] = 1.0 - 2.0 * a;
          return FractionProfile{{std::move(row)}};
        },
        0.5, i, mid);
  }
  return solve_on_simplex(criterion, game, options);
}

double nonatomic_social_delay(const Game& game, const FractionProfile& fractions) {
  const auto loads = fraction_loads(game, fractions);
  double total = 0.0;
  for (int k = 0; k < game.num_pairs(); ++k) {
    const auto& paths = game.paths_of(k);
    const auto& row = fractions.fractions[static_cast<std::size_t>(k)];
    for (std::size_t p = 0; p < paths.size(); ++p)
      if (row[p] > 0.0) total += row[p] * path_mean_at(game, loads, paths[p]);
  }
  return total;
}

NonatomicOptimum nonatomic_optimum(const Game& game) {
  require_solvable(game);
  const int m = static_cast<int>(game.paths_of(0).size());
  const auto delay_of = [&](std::vector<double> row) {
    return nonatomic_social_delay(game, FractionProfile{{std::move(row)}});
  };
  if (m == 1) return {FractionProfile{{{1.0}}}, delay_of({1.0})};
  if (m == 2) {
    const auto d = [&](double a) { return delay_of({a, 1.0 - a}); };
    constexpr int kGrid = 512;
    int bk = 0;
    double bd = d(0.0);
    for (int k = 1; k <= kGrid; ++k) {
      const double v = d(static_cast<double>(k) / kGrid);
      if (v < bd) {
        bd = v;
        bk = k;
      }
    }
    const double lo = std::max(0.0, (bk - 1.0) / kGrid);
    const double hi = std::min(1.0, (bk + 1.0) / kGrid);
    const double a = golden_min(d, lo, hi);
    // The search resolves ~1e-8, so anything below 1e-7 is boundary dust.
    auto row = snap_row({a, 1.0 - a}, 1e-7);
    const double dv = delay_of(row);
    return {FractionProfile{{std::move(row)}}, dv};
  }
  const auto d2 = [&](double x, double y) {
    return delay_of(snap_row({x, y, std::max(0.0, 1.0 - x - y)}));
  };
  constexpr int kCoarse = 96;
  double bx = 0.0, by = 0.0, bd = d2(0.0, 0.0);
  for (int i = 0; i <= kCoarse; ++i) {
    for (int j = 0; j <= kCoarse - i; ++j) {
      if (i == 0 && j == 0) continue;
      const double x = static_cast<double>(i) / kCoarse;
      const double y = static_cast<double>(j) / kCoarse;
      const double v = d2(x, y);
      if (v < bd) {
        bd = v;
        bx = x;
        by = y;
      }
    }
  }
  double w = 1.0 / kCoarse;
  for (int round = 0; round < 14; ++round) {
    const double x0 = std::max(0.0, bx - w), x1 = std::min(1.0, bx + w);
    const double y0 = std::max(0.0, by - w), y1 = std::min(1.0, by + w);
    for (int i = 0; i <= 16; ++i) {
      for (int j = 0; j <= 16; ++j) {
        const double x = x0 + (x1 - x0) * i / 16.0;
        const double y = y0 + (y1 - y0) * j / 16.0;
        if (x + y > 1.0 + 1e-12) continue;
        const double v = d2(x, y);
        if (v < bd) {
          bd = v;
          bx = x;
          by = y;
        }
      }
    }
    w /= 3.0;
  }
  auto row = snap_row({bx, by, std::max(0.0, 1.0 - bx - by)}, 1e-7);
  const double dv = delay_of(row);
  return {FractionProfile{{std::move(row)}}, dv};
}

double nonatomic_poa(const Criterion& criterion, const Game& game,
                     const NonatomicOptions& options) {
  const auto eq = solve_nonatomic(criterion, game, options);
  const auto opt = nonatomic_optimum(game);
  return nonatomic_social_delay(game, eq) / opt.delay;
}

}  // namespace scg
