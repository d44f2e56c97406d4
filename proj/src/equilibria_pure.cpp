#include "scg/equilibria_pure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "scg/errors.hpp"
#include "scg/social.hpp"

namespace scg {

namespace {

double analytic_tol(double scale) { return 1e-9 * std::max(1.0, std::abs(scale)); }

// Tie allowance between two criterion values: stderr-based when either side
// is a Monte Carlo estimate, tight otherwise.
double tie_tol(const CriterionValue& a, const CriterionValue& b, double se_factor) {
  if (a.se > 0.0 || b.se > 0.0)
    return se_factor * std::sqrt(a.se * a.se + b.se * b.se);
  return analytic_tol(std::max(std::abs(a.value), std::abs(b.value)));
}

// How much `candidate` improves on `stay` (positive = strictly better side).
double improvement(const Criterion& c, double stay, double candidate) {
  return c.maximize() ? candidate - stay : stay - candidate;
}

std::vector<CriterionValue> deviation_values(const Criterion& criterion,
                                             const PathEvaluator& ev,
                                             const PathCounts& others, int pair) {
  const int num = static_cast<int>(ev.game().paths_of(pair).size());
  std::vector<CriterionValue> values;
  values.reserve(static_cast<std::size_t>(num));
  for (int c = 0; c < num; ++c) values.push_back(ev.value_pure(criterion, others, pair, c));
  return values;
}

int best_index(const Criterion& criterion, const std::vector<CriterionValue>& values) {
  int best = 0;
  for (int c = 1; c < static_cast<int>(values.size()); ++c)
    if (improvement(criterion, values[static_cast<std::size_t>(best)].value,
                    values[static_cast<std::size_t>(c)].value) > 0.0)
      best = c;
  return best;
}

PathCounts remove_player(const Game& game, const PathCounts& assignment, int pair,
                         int path) {
  auto others = assignment;
  auto& row = others.at(static_cast<std::size_t>(pair));
  if (path < 0 || path >= static_cast<int>(row.size()))
    throw Error("ValidationError", "occupied path index out of range");
  if (row[static_cast<std::size_t>(path)] <= 0)
    throw Error("ValidationError", "no player to remove from path " + std::to_string(path));
  --row[static_cast<std::size_t>(path)];
  (void)game;
  return others;
}

}  // namespace

std::vector<int> best_response_set(const Criterion& criterion, const PathEvaluator& ev,
                                   const PathCounts& assignment, int pair,
                                   int occupied_path) {
  const PathCounts others = occupied_path == kEntrant
                                ? assignment
                                : remove_player(ev.game(), assignment, pair, occupied_path);
  const auto values = deviation_values(criterion, ev, others, pair);
  const auto& best = values[static_cast<std::size_t>(best_index(criterion, values))];
  std::vector<int> set;
  for (int c = 0; c < static_cast<int>(values.size()); ++c) {
    const auto& v = values[static_cast<std::size_t>(c)];
    if (improvement(criterion, v.value, best.value) <= tie_tol(v, best, 2.0))
      set.push_back(c);
  }
  return set;
}

namespace {

struct AssignmentCheck {
  bool ok = true;
  double max_gap = -std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> stay_values;
};

AssignmentCheck check_assignment(const Criterion& criterion, const PathEvaluator& ev,
                                 const PathCounts& assignment, double se_factor) {
  const auto& game = ev.game();
  AssignmentCheck out;
  out.stay_values.resize(assignment.size());
  for (int k = 0; k < game.num_pairs(); ++k) {
    const auto& row = assignment[static_cast<std::size_t>(k)];
    out.stay_values[static_cast<std::size_t>(k)].assign(
        row.size(), std::numeric_limits<double>::quiet_NaN());
    for (int p = 0; p < static_cast<int>(row.size()); ++p) {
      if (row[static_cast<std::size_t>(p)] == 0) continue;
      auto others = assignment;
      --others[static_cast<std::size_t>(k)][static_cast<std::size_t>(p)];
      const auto values = deviation_values(criterion, ev, others, k);
      const auto& stay = values[static_cast<std::size_t>(p)];
      out.stay_values[static_cast<std::size_t>(k)][static_cast<std::size_t>(p)] = stay.value;
      for (int c = 0; c < static_cast<int>(values.size()); ++c) {
        if (c == p) continue;
        const auto& cand = values[static_cast<std::size_t>(c)];
        const double gain = improvement(criterion, stay.value, cand.value);
        const double slack = gain - tie_tol(stay, cand, se_factor);
        out.max_gap = std::max(out.max_gap, gain);
        if (slack > 0.0) out.ok = false;
      }
      if (!out.ok) return out;
    }
  }
  return out;
}

}  // namespace

std::vector<PureEquilibriumReport> find_pure_equilibria(const Criterion& criterion,
                                                        const PathEvaluator& ev,
                                                        std::int64_t cap) {
  std::vector<PureEquilibriumReport> reports;
  for (const auto& assignment : enumerate_assignments(ev.game(), cap)) {
    auto check = check_assignment(criterion, ev, assignment, 2.0);
    if (!check.ok) continue;
    PureEquilibriumReport r;
    r.criterion = criterion;
    r.assignment = assignment;
    r.stay_values = std::move(check.stay_values);
    r.social_delay = social_delay_pure(ev.game(), assignment);
    r.max_gap = std::isfinite(check.max_gap) ? check.max_gap : 0.0;
    reports.push_back(std::move(r));
  }
  return reports;
}

EquilibriumCheck verify_pure_equilibrium(const Criterion& criterion,
                                         const PathEvaluator& ev,
                                         const PathCounts& assignment) {
  const auto& game = ev.game();
  EquilibriumCheck out;
  out.ok = true;
  out.max_gap = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < game.num_pairs(); ++k) {
    const auto& row = assignment[static_cast<std::size_t>(k)];
    for (int p = 0; p < static_cast<int>(row.size()); ++p) {
      if (row[static_cast<std::size_t>(p)] == 0) continue;
      auto others = assignment;
      --others[static_cast<std::size_t>(k)][static_cast<std::size_t>(p)];
      const auto values = deviation_values(criterion, ev, others, k);
      const auto& stay = values[static_cast<std::size_t>(p)];
      for (int c = 0; c < static_cast<int>(values.size()); ++c) {
        if (c == p) continue;
        const auto& cand = values[static_cast<std::size_t>(c)];
        const double excess = improvement(criterion, stay.value, cand.value) -
                              tie_tol(stay, cand, 3.0);
        out.max_gap = std::max(out.max_gap, excess);
        if (excess > 0.0) out.ok = false;
      }
    }
  }
  if (!std::isfinite(out.max_gap)) out.max_gap = 0.0;
  return out;
}

namespace {

// Assignments of the opponents (pair `pair` one player short) over the
// surviving paths, expressed in full path-index space.
std::vector<PathCounts> opponent_assignments(const Game& game,
                                             const std::vector<std::vector<int>>& kept,
                                             int pair, std::int64_t cap) {
  std::vector<PathCounts> result{{}};
  for (int k = 0; k < game.num_pairs(); ++k) {
    const auto& keep = kept[static_cast<std::size_t>(k)];
    const int players = game.sd_pairs()[static_cast<std::size_t>(k)].n_k - (k == pair ? 1 : 0);
    std::vector<std::vector<int>> rows;
    std::vector<int> row(game.paths_of(k).size(), 0);
    auto rec = [&](auto&& self, std::size_t idx, int left) -> void {
      if (idx + 1 == keep.size()) {
        row[static_cast<std::size_t>(keep[idx])] = left;
        rows.push_back(row);
        row[static_cast<std::size_t>(keep[idx])] = 0;
        return;
      }
      for (int m = 0; m <= left; ++m) {
        row[static_cast<std::size_t>(keep[idx])] = m;
        self(self, idx + 1, left - m);
      }
      row[static_cast<std::size_t>(keep[idx])] = 0;
    };
    rec(rec, 0, players);
    std::vector<PathCounts> next;
    next.reserve(result.size() * rows.size());
    for (const auto& prefix : result)
      for (const auto& r : rows) {
        if (static_cast<std::int64_t>(next.size()) > cap)
          throw Error("EnumerationCap",
                      "opponent profile count exceeds " + std::to_string(cap));
        auto counts = prefix;
        counts.push_back(r);
        next.push_back(std::move(counts));
      }
    result = std::move(next);
  }
  return result;
}

}  // namespace

DominanceReduction eliminate_strictly_dominated(const Criterion& criterion,
                                                const PathEvaluator& ev,
                                                std::int64_t cap) {
  const auto& game = ev.game();
  DominanceReduction red;
  red.kept.resize(static_cast<std::size_t>(game.num_pairs()));
  for (int k = 0; k < game.num_pairs(); ++k)
    for (int p = 0; p < static_cast<int>(game.paths_of(k).size()); ++p)
      red.kept[static_cast<std::size_t>(k)].push_back(p);

  bool changed = true;
  while (changed) {
    changed = false;
    for (int k = 0; k < game.num_pairs() && !changed; ++k) {
      auto& keep = red.kept[static_cast<std::size_t>(k)];
      if (keep.size() < 2) continue;
      const auto opponents = opponent_assignments(game, red.kept, k, cap);
      for (std::size_t ia = 0; ia < keep.size() && !changed; ++ia) {
        for (std::size_t ib = 0; ib < keep.size() && !changed; ++ib) {
          if (ia == ib) continue;
          const int a = keep[ia], b = keep[ib];
          bool dominated = true;
          bool all_low = true, all_high = true;  // profile means vs rho/2
          for (const auto& others : opponents) {
            const auto va = ev.value_pure(criterion, others, k, a);
            const auto vb = ev.value_pure(criterion, others, k, b);
            // Strict domination of a by b: b better beyond the noise allowance.
            if (improvement(criterion, va.value, vb.value) <= tie_tol(va, vb, 3.0)) {
              dominated = false;
              break;
            }
            if (criterion.kind == CriterionKind::kMv) {
              const double half_rho = 0.5 * criterion.rho;
              for (int c : {a, b}) {
                const double mean =
                    pure_mean_var(game, counts_with(game, others, k, c),
                                  game.paths_of(k)[static_cast<std::size_t>(c)])
                        .first;
                all_low = all_low && mean <= half_rho + 1e-9;
                all_high = all_high && mean >= half_rho - 1e-9;
              }
            }
          }
          if (!dominated) continue;
          if (criterion.kind == CriterionKind::kCvar ||
              (criterion.kind == CriterionKind::kMv && !all_low && !all_high))
            red.mixed_safe = false;
          keep.erase(keep.begin() + static_cast<std::ptrdiff_t>(ia));
          changed = true;
        }
      }
    }
  }
  return red;
}

}  // namespace scg
