#include "scg/path_eval.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "scg/errors.hpp"

namespace scg {

namespace {

void require_member_path(const Game& game, const Path& path) {
  for (int k = 0; k < game.num_pairs(); ++k)
    for (const auto& p : game.paths_of(k))
      if (p == path) return;
  throw Error("ValidationError", "path is not listed for any demand pair");
}

void require_counts_shape(const Game& game, const PathCounts& counts) {
  if (static_cast<int>(counts.size()) != game.num_pairs())
    throw Error("ValidationError", "counts must cover every demand pair");
  for (int k = 0; k < game.num_pairs(); ++k) {
    if (counts[static_cast<std::size_t>(k)].size() != game.paths_of(k).size())
      throw Error("ValidationError",
                  "counts must cover every path of pair " + std::to_string(k));
    for (int c : counts[static_cast<std::size_t>(k)])
      if (c < 0) throw Error("ValidationError", "negative path count");
  }
}

// Deterministic substream key for one (pair, others, candidate) evaluation.
// Player identity is deliberately absent: same-pair players are
// interchangeable, so equal evaluation contexts reuse equal substreams.
std::uint64_t prob_min_seed(std::uint64_t root, const PathCounts& others, int pair,
                            int candidate) {
  std::uint64_t h = absorb(root, 0x70726F62);  // domain tag for these draws
  h = absorb(h, static_cast<std::uint64_t>(pair));
  h = absorb(h, static_cast<std::uint64_t>(candidate));
  for (const auto& row : others) {
    h = absorb(h, static_cast<std::uint64_t>(row.size()));
    for (int c : row) h = absorb(h, static_cast<std::uint64_t>(c));
  }
  return h;
}

std::vector<int> prob_cache_key(const PathCounts& others, int pair, int candidate) {
  std::vector<int> key{pair, candidate};
  for (const auto& row : others) {
    key.push_back(static_cast<int>(row.size()));
    key.insert(key.end(), row.begin(), row.end());
  }
  return key;
}

void require_simplex(const std::vector<double>& row) {
  double sum = 0.0;
  for (double p : row) {
    if (!std::isfinite(p) || p < -1e-12)
      throw Error("ValidationError", "mixed strategy entries must be non-negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw Error("ValidationError", "mixed strategy must sum to 1");
}

}  // namespace

PathCounts counts_with(const Game& game, const PathCounts& others, int pair,
                       int candidate) {
  require_counts_shape(game, others);
  if (pair < 0 || pair >= game.num_pairs())
    throw Error("ValidationError", "pair index out of range");
  auto counts = others;
  auto& row = counts[static_cast<std::size_t>(pair)];
  if (candidate < 0 || candidate >= static_cast<int>(row.size()))
    throw Error("ValidationError", "candidate path index out of range");
  ++row[static_cast<std::size_t>(candidate)];
  return counts;
}

Distribution path_delay_distribution(const Game& game, const PathCounts& counts,
                                     const Path& path, const GridPolicy& policy) {
  require_member_path(game, path);
  require_counts_shape(game, counts);
  const auto loads = link_loads(game, counts);
  Distribution acc = Distribution::point_mass(0.0);
  for (int id : path) {
    const int e = game.link_index(id);
    acc = acc.convolve(
        link_distribution(game.links()[static_cast<std::size_t>(e)],
                          loads[static_cast<std::size_t>(e)], game.n()),
        policy);
  }
  return acc;
}

Distribution path_delay_distribution(const Game& game, const PureProfile& profile,
                                     const Path& path, const GridPolicy& policy) {
  return path_delay_distribution(game, counts_of(game, profile), path, policy);
}

std::pair<double, double> pure_mean_var(const Game& game, const PathCounts& counts,
                                        const Path& path) {
  require_member_path(game, path);
  require_counts_shape(game, counts);
  const auto loads = link_loads(game, counts);
  double mean = 0.0, var = 0.0;
  for (int id : path) {
    const int e = game.link_index(id);
    const auto d = link_distribution(game.links()[static_cast<std::size_t>(e)],
                                     loads[static_cast<std::size_t>(e)], game.n());
    mean += d.mean();
    var += d.variance();
  }
  return {mean, var};
}

std::pair<double, double> pure_mean_var(const Game& game, const PureProfile& profile,
                                        const Path& path) {
  return pure_mean_var(game, counts_of(game, profile), path);
}

double pure_cvar(const Game& game, const PathCounts& counts, const Path& path,
                 double alpha) {
  return path_delay_distribution(game, counts, path).cvar_upper(alpha);
}

double pure_cvar(const Game& game, const PureProfile& profile, const Path& path,
                 double alpha) {
  return pure_cvar(game, counts_of(game, profile), path, alpha);
}

McValue pure_prob_min(const Game& game, const PathCounts& others, int pair,
                      int candidate, const McSettings& mc) {
  require_counts_shape(game, others);
  if (pair < 0 || pair >= game.num_pairs())
    throw Error("ValidationError", "pair index out of range");
  const auto& paths = game.paths_of(pair);
  const int num_paths = static_cast<int>(paths.size());
  if (candidate < 0 || candidate >= num_paths)
    throw Error("ValidationError", "candidate path index out of range");
  if (num_paths == 1) return {1.0, 0.0};

  // Every link that any compared path uses carries the evaluated player, so it
  // is instantiated at one above the others' load.  Sampling each such link
  // once per replication realizes the joint law across the compared paths.
  const auto base = link_loads(game, others);
  std::vector<int> union_ids;
  for (const auto& p : paths) union_ids.insert(union_ids.end(), p.begin(), p.end());
  std::sort(union_ids.begin(), union_ids.end());
  union_ids.erase(std::unique(union_ids.begin(), union_ids.end()), union_ids.end());

  std::vector<Distribution> stochastic;
  std::map<int, int> stochastic_index;
  std::map<int, double> constant_value;
  for (int id : union_ids) {
    const int e = game.link_index(id);
    auto d = link_distribution(game.links()[static_cast<std::size_t>(e)],
                               base[static_cast<std::size_t>(e)] + 1, game.n());
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

  const std::uint64_t seed = prob_min_seed(mc.seed, others, pair, candidate);
  const auto acc = mc_accumulate(
      mc.replications, seed, mc.max_threads, 1,
      [&](RandomStream& rs, std::int64_t count, double* out) {
        std::vector<double> x(stochastic.size());
        for (std::int64_t r = 0; r < count; ++r) {
          for (std::size_t s = 0; s < stochastic.size(); ++s)
            x[s] = stochastic[s].sample(rs);
          double dc = shift[static_cast<std::size_t>(candidate)];
          for (int s : terms[static_cast<std::size_t>(candidate)]) dc += x[static_cast<std::size_t>(s)];
          bool weakly_min = true;
          for (int q = 0; q < num_paths && weakly_min; ++q) {
            if (q == candidate) continue;
            double dq = shift[static_cast<std::size_t>(q)];
            for (int s : terms[static_cast<std::size_t>(q)]) dq += x[static_cast<std::size_t>(s)];
            weakly_min = dc <= dq;
          }
          if (weakly_min) out[0] += 1.0;
        }
      });
  const double p = acc[0] / static_cast<double>(mc.replications);
  const double se = std::sqrt(std::max(p * (1.0 - p), 0.0) /
                              static_cast<double>(mc.replications));
  return {p, se};
}

McValue PathEvaluator::prob_min(const PathCounts& others, int pair, int candidate) const {
  const auto key = prob_cache_key(others, pair, candidate);
  if (auto it = prob_cache_.find(key); it != prob_cache_.end()) return it->second;
  const auto v = pure_prob_min(*game_, others, pair, candidate, mc_);
  prob_cache_.emplace(key, v);
  return v;
}

CriterionValue PathEvaluator::value_pure(const Criterion& criterion,
                                         const PathCounts& others, int pair,
                                         int candidate) const {
  CriterionValue out{criterion, 0.0, 0.0};
  switch (criterion.kind) {
    case CriterionKind::kRae: {
      const auto p = prob_min(others, pair, candidate);
      out.value = p.value;
      out.se = p.se;
      return out;
    }
    case CriterionKind::kNash:
    case CriterionKind::kMv: {
      const auto counts = counts_with(*game_, others, pair, candidate);
      const auto [mean, var] =
          pure_mean_var(*game_, counts, game_->paths_of(pair)[static_cast<std::size_t>(candidate)]);
      out.value = criterion.kind == CriterionKind::kNash ? mean
                                                         : var + criterion.rho * mean;
      return out;
    }
    case CriterionKind::kCvar: {
      const auto counts = counts_with(*game_, others, pair, candidate);
      out.value = pure_cvar(*game_, counts,
                            game_->paths_of(pair)[static_cast<std::size_t>(candidate)],
                            criterion.alpha);
      return out;
    }
  }
  throw Error("ValidationError", "unknown criterion");
}

std::vector<std::pair<double, PathCounts>> PathEvaluator::opponent_count_law(
    int player, const MixedProfile& opponents, std::int64_t max_profiles) const {
  const auto& g = *game_;
  if (static_cast<int>(opponents.strategy.size()) != g.n())
    throw Error("ValidationError", "mixed profile must cover every player");

  // Per pair: distribution over that pair's opponent path counts, built one
  // player at a time (exact also when same-pair players mix differently).
  std::vector<std::map<std::vector<int>, double>> per_pair(
      static_cast<std::size_t>(g.num_pairs()));
  for (int k = 0; k < g.num_pairs(); ++k)
    per_pair[static_cast<std::size_t>(k)].emplace(
        std::vector<int>(g.paths_of(k).size(), 0), 1.0);
  for (int j = 0; j < g.n(); ++j) {
    const auto& row = opponents.strategy[static_cast<std::size_t>(j)];
    const int k = g.pair_of_player(j);
    if (row.size() != g.paths_of(k).size())
      throw Error("ValidationError",
                  "mixed strategy of player " + std::to_string(j) + " has wrong length");
    require_simplex(row);
    if (j == player) continue;
    auto& dp = per_pair[static_cast<std::size_t>(k)];
    std::map<std::vector<int>, double> next;
    for (const auto& [counts, w] : dp) {
      for (std::size_t a = 0; a < row.size(); ++a) {
        if (row[a] <= 0.0) continue;
        auto c = counts;
        ++c[a];
        next[c] += w * row[a];
      }
    }
    dp = std::move(next);
  }

  double combos = 1.0;
  for (const auto& dp : per_pair) combos *= static_cast<double>(dp.size());
  if (combos > static_cast<double>(max_profiles))
    throw Error("SupportExplosion",
                "opponent profile support exceeds " + std::to_string(max_profiles));

  std::vector<std::pair<double, PathCounts>> law{{1.0, {}}};
  for (const auto& dp : per_pair) {
    std::vector<std::pair<double, PathCounts>> next;
    next.reserve(law.size() * dp.size());
    for (const auto& [w0, counts0] : law) {
      for (const auto& [row, w] : dp) {
        auto counts = counts0;
        counts.push_back(row);
        next.emplace_back(w0 * w, std::move(counts));
      }
    }
    law = std::move(next);
  }
  return law;
}

CriterionValue PathEvaluator::value_mixed(const Criterion& criterion, int player,
                                          int candidate,
                                          const MixedProfile& opponents) const {
  const auto& g = *game_;
  if (player < 0 || player >= g.n())
    throw Error("ValidationError", "player index out of range");
  const int pair = g.pair_of_player(player);
  const auto& path = g.paths_of(pair).at(static_cast<std::size_t>(candidate));
  const auto law = opponent_count_law(player, opponents);

  CriterionValue out{criterion, 0.0, 0.0};
  switch (criterion.kind) {
    case CriterionKind::kRae: {
      double value = 0.0, var = 0.0;
      for (const auto& [w, counts] : law) {
        const auto p = prob_min(counts, pair, candidate);
        value += w * p.value;
        var += w * w * p.se * p.se;
      }
      out.value = value;
      out.se = std::sqrt(var);
      return out;
    }
    case CriterionKind::kNash: {
      for (const auto& [w, counts] : law)
        out.value += w * pure_mean_var(g, counts_with(g, counts, pair, candidate), path).first;
      return out;
    }
    case CriterionKind::kMv: {
      // Mixture second moment, not the mixture of variances: opponents'
      // randomization adds the dispersion of the conditional means.
      double m1 = 0.0, m2 = 0.0;
      for (const auto& [w, counts] : law) {
        const auto [mean, var] =
            pure_mean_var(g, counts_with(g, counts, pair, candidate), path);
        m1 += w * mean;
        m2 += w * (var + mean * mean);
      }
      out.value = (m2 - m1 * m1) + criterion.rho * m1;
      return out;
    }
    case CriterionKind::kCvar: {
      const double alpha = criterion.alpha;
      if (!(alpha > 0.0 && alpha <= 1.0))
        throw Error("ValidationError", "alpha must lie in (0, 1]");
      std::vector<std::pair<double, Distribution>> parts;
      parts.reserve(law.size());
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (const auto& [w, counts] : law) {
        auto d = path_delay_distribution(g, counts_with(g, counts, pair, candidate), path);
        lo = std::min(lo, d.support_lo());
        hi = std::max(hi, d.support_hi());
        parts.emplace_back(w, std::move(d));
      }
      if (alpha == 1.0) {
        for (const auto& [w, d] : parts) out.value += w * d.mean();
        return out;
      }
      // Tail threshold of the opponent-profile mixture, then the mixture's
      // upper conditional expectation (atom at the threshold handled by the
      // probability-correction term).
      const auto mix_cdf = [&](double x) {
        double c = 0.0;
        for (const auto& [w, d] : parts) c += w * d.cdf(x);
        return c;
      };
      const double q = 1.0 - alpha;
      double v = hi;
      if (mix_cdf(lo) >= q) {
        v = lo;
      } else {
        double a = lo, b = hi;
        const double scale = std::max({1.0, std::abs(lo), std::abs(hi)});
        for (int it = 0; it < 200 && b - a > 1e-14 * scale; ++it) {
          const double mid = 0.5 * (a + b);
          if (mix_cdf(mid) >= q)
            b = mid;
          else
            a = mid;
        }
        v = b;
      }
      double upm = 0.0, pg = 0.0;
      for (const auto& [w, d] : parts) {
        upm += w * d.upper_partial_moment(v);
        pg += w * d.prob_greater(v);
      }
      out.value = (upm + v * (alpha - pg)) / alpha;
      return out;
    }
  }
  throw Error("ValidationError", "unknown criterion");
}

CriterionValue mixed_value(const Criterion& criterion, const Game& game, int player,
                           int candidate, const MixedProfile& opponents,
                           const McSettings& mc) {
  return PathEvaluator(game, mc).value_mixed(criterion, player, candidate, opponents);
}

}  // namespace scg
