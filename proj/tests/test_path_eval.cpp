#include "doctest.h"

#include <cmath>
#include <vector>

#include "fixtures.hpp"
#include "scg/errors.hpp"
#include "scg/path_eval.hpp"
#include "scg/rng.hpp"

using namespace scg;

namespace {

const McSettings kFastMc{kDefaultSeed, 200'000, 0};

// Same network with every delay doubled (time unit scaled by 2): centers and
// windows double, stiffness quarters, so samples double exactly.
Game scale_game(const Game& g, double s) {
  std::vector<Link> links;
  for (const auto& l : g.links()) {
    LatencyFamily family;
    switch (l.family.kind()) {
      case LatencyFamily::Kind::kDeterministicZero:
        family = LatencyFamily::deterministic_zero();
        break;
      case LatencyFamily::Kind::kAffineMixture: {
        auto comps = l.family.affine_components();
        for (auto& c : comps) {
          c.center = {c.center.a * s, c.center.b * s};
          c.lo = {c.lo.a * s, c.lo.b * s};
          c.hi = {c.hi.a * s, c.hi.b * s};
          c.stiffness /= s * s;
        }
        family = LatencyFamily::affine_mixture(std::move(comps));
        break;
      }
      case LatencyFamily::Kind::kFixedMixture: {
        auto comps = l.family.fixed_distribution().as_mixture().comps;
        for (auto& c : comps) {
          c.center *= s;
          c.lo *= s;
          c.hi *= s;
          c.stiffness /= s * s;
        }
        family = LatencyFamily::fixed_mixture(Distribution::normalize(std::move(comps)));
        break;
      }
    }
    links.push_back({l.id, l.tail, l.head, std::move(family)});
  }
  return Game::create(g.nodes(), std::move(links), g.sd_pairs(), g.paths());
}

Game single_zero_link_game() {
  return Game::create({0, 1}, {{1, 0, 1, LatencyFamily::deterministic_zero()}},
                      {{0, 1, 1}});
}

}  // namespace

TEST_CASE("single-link path delay is the link's own law") {
  const auto g = fixtures::pigou_game(4);
  const auto d = path_delay_distribution(g, PathCounts{{4, 0}}, {1});
  CHECK(d == link_distribution(g.links()[0], 4, 4));
  CHECK_THROWS_AS(path_delay_distribution(g, PathCounts{{4, 0}}, {1, 2}), Error);
}

TEST_CASE("shortcut route delay at full load has mean 2") {
  const auto g = fixtures::braess_game(4);
  const auto d = path_delay_distribution(g, PathCounts{{0, 4, 0}}, {1, 5, 4});
  CHECK(d.mean() == doctest::Approx(2.0).epsilon(1e-9));
  // With nobody on the first two routes the top route is a free link plus a
  // constant-mean link.
  const auto idle = path_delay_distribution(g, PathCounts{{0, 0, 4}}, {1, 2});
  CHECK(idle.mean() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("path moments add over links") {
  const auto zero = single_zero_link_game();
  CHECK(pure_mean_var(zero, PathCounts{{1}}, {1}) ==
        std::pair<double, double>{0.0, 0.0});

  const auto tail = fixtures::shared_tail_game(1);
  const auto [m, v] = pure_mean_var(tail, PureProfile{{0}}, {1});
  CHECK(m == doctest::Approx(6.0).epsilon(1e-9));
  CHECK(v == doctest::Approx(4.005).epsilon(1e-6));

  const auto g = fixtures::braess_game(4);
  const auto full = PathCounts{{0, 4, 0}};
  const auto [pm, pv] = pure_mean_var(g, full, {1, 5, 4});
  const double var_links = link_distribution(g.links()[0], 4, 4).variance() +
                           link_distribution(g.links()[3], 4, 4).variance();
  CHECK(pv == doctest::Approx(var_links).epsilon(1e-12));
  // The gridded convolution and a Monte Carlo draw agree with the link sums.
  const auto d = path_delay_distribution(g, full, {1, 5, 4});
  CHECK(d.mean() == doctest::Approx(pm).epsilon(1e-9));
  CHECK(d.variance() == doctest::Approx(pv).epsilon(1e-4 / pv));
  scg::RandomStream rs(seed_of(kDefaultSeed, {11}));
  double s1 = 0.0, s2 = 0.0;
  const int n = 200'000;
  for (int i = 0; i < n; ++i) {
    const double x = d.sample(rs);
    s1 += x;
    s2 += x * x;
  }
  const double sample_var = s2 / n - (s1 / n) * (s1 / n);
  CHECK(std::abs(sample_var - pv) < 4.0 * pv * std::sqrt(2.0 / n));
}

TEST_CASE("path tail expectation") {
  const auto ex5 = fixtures::steady_vs_spread_game(1);
  CHECK(pure_cvar(ex5, PathCounts{{0, 1}}, {2}, 1.0) ==
        doctest::Approx(6.5).epsilon(1e-9));
  // The spread link has the worse tail at alpha = 0.7 but the better one at
  // alpha = 0.8 (its mean advantage wins once most of the law is included).
  CHECK(pure_cvar(ex5, PathCounts{{0, 1}}, {2}, 0.7) >
        pure_cvar(ex5, PathCounts{{1, 0}}, {1}, 0.7));
  CHECK(pure_cvar(ex5, PathCounts{{0, 1}}, {2}, 0.8) <
        pure_cvar(ex5, PathCounts{{1, 0}}, {1}, 0.8));

  const auto g = fixtures::braess_game(4);
  CHECK(pure_cvar(g, PathCounts{{0, 4, 0}}, {1, 5, 4}, 0.25) ==
        doctest::Approx(3.0).epsilon(0.05 / 3.0));
}

TEST_CASE("staying probabilities on two parallel links") {
  const auto g = fixtures::pigou_game(4);
  // All others on the load-scaled link: switching to the constant link wins
  // exactly when the scaled link sits in its upper mode.
  const auto switch_out = pure_prob_min(g, PathCounts{{3, 0}}, 0, 1, kFastMc);
  CHECK(std::abs(switch_out.value - 0.6) < std::max(0.005, 3.0 * switch_out.se));
  const auto stay = pure_prob_min(g, PathCounts{{3, 0}}, 0, 0, kFastMc);
  CHECK(std::abs(stay.value - 0.4) < std::max(0.005, 3.0 * stay.se));
}

TEST_CASE("deviation probabilities on the diamond at full shortcut load") {
  const auto g = fixtures::braess_game(4);
  const PathCounts others{{0, 3, 0}};
  const auto dev1 = pure_prob_min(g, others, 0, 0, kFastMc);
  const auto stay = pure_prob_min(g, others, 0, 1, kFastMc);
  const auto dev3 = pure_prob_min(g, others, 0, 2, kFastMc);
  CHECK(std::abs(dev1.value - 0.375) < std::max(0.005, 3.0 * dev1.se));
  CHECK(std::abs(stay.value - 0.25) < std::max(0.005, 3.0 * stay.se));
  CHECK(std::abs(dev3.value - 0.375) < std::max(0.005, 3.0 * dev3.se));
}

TEST_CASE("a single-path pair is certainly shortest") {
  const auto g = single_zero_link_game();
  const auto p = pure_prob_min(g, PathCounts{{0}}, 0, 0, kFastMc);
  CHECK(p.value == 1.0);
  CHECK(p.se == 0.0);
}

TEST_CASE("shortest-path probabilities sum to one") {
  const auto g = fixtures::braess_game(4);
  const PathCounts others{{1, 1, 1}};
  double sum = 0.0, var = 0.0;
  for (int c = 0; c < 3; ++c) {
    const auto p = pure_prob_min(g, others, 0, c, kFastMc);
    sum += p.value;
    var += p.se * p.se;
  }
  CHECK(std::abs(sum - 1.0) < 3.0 * std::sqrt(var) + 1e-9);
}

TEST_CASE("rescaling the time unit leaves the probabilities unchanged") {
  const auto g = fixtures::braess_game(4);
  const auto doubled = scale_game(g, 2.0);
  const PathCounts others{{0, 3, 0}};
  for (int c = 0; c < 3; ++c) {
    const auto a = pure_prob_min(g, others, 0, c, kFastMc);
    const auto b = pure_prob_min(doubled, others, 0, c, kFastMc);
    CHECK(std::abs(a.value - b.value) < 1e-12);
  }
}

TEST_CASE("a degenerate opponent mixture reproduces the pure values exactly") {
  const auto g = fixtures::pigou_game(2);
  const PathEvaluator ev(g, kFastMc);
  const MixedProfile pure_opp{{{1.0, 0.0}, {1.0, 0.0}}};
  const PathCounts others{{1, 0}};

  const auto mixed_rae = ev.value_mixed(Criterion::rae(), 0, 1, pure_opp);
  CHECK(mixed_rae.value == pure_prob_min(g, others, 0, 1, kFastMc).value);

  const auto mixed_nash = ev.value_mixed(Criterion::nash(), 0, 1, pure_opp);
  CHECK(mixed_nash.value ==
        doctest::Approx(ev.value_pure(Criterion::nash(), others, 0, 1).value)
            .epsilon(1e-12));

  const auto mixed_mv = ev.value_mixed(Criterion::mv(1.0), 0, 1, pure_opp);
  CHECK(mixed_mv.value ==
        doctest::Approx(ev.value_pure(Criterion::mv(1.0), others, 0, 1).value)
            .epsilon(1e-12));

  const auto mixed_cvar = ev.value_mixed(Criterion::cvar(0.3), 0, 1, pure_opp);
  CHECK(mixed_cvar.value ==
        doctest::Approx(ev.value_pure(Criterion::cvar(0.3), others, 0, 1).value)
            .epsilon(1e-9));
}

TEST_CASE("probability value is affine in the opponent's mixing weight") {
  const auto g = fixtures::pigou_game(2);
  const PathEvaluator ev(g, kFastMc);
  auto value_at = [&](double q) {
    const MixedProfile opp{{{1.0, 0.0}, {q, 1.0 - q}}};
    return ev.value_mixed(Criterion::rae(), 0, 0, opp);
  };
  const auto v0 = value_at(0.0), v1 = value_at(1.0);
  for (double q : {0.25, 0.5, 0.75}) {
    const auto v = value_at(q);
    CHECK(v.value ==
          doctest::Approx(q * v1.value + (1.0 - q) * v0.value).epsilon(1e-12));
  }

  // Independent two-stage Monte Carlo oracle: draw the opponent's link, then
  // the link delays at the matching deviation loads.
  for (double q : {0.0, 0.5, 1.0}) {
    RandomStream rs(seed_of(kDefaultSeed, {21, static_cast<std::uint64_t>(q * 4)}));
    const int reps = 200'000;
    int wins = 0;
    for (int r = 0; r < reps; ++r) {
      const bool opp_on_1 = rs.uniform() < q;
      const auto d1 = link_distribution(g.links()[0], opp_on_1 ? 2 : 1, 2);
      const auto d2 = link_distribution(g.links()[1], opp_on_1 ? 1 : 2, 2);
      wins += d1.sample(rs) <= d2.sample(rs);
    }
    const double direct = double(wins) / reps;
    const double se = std::sqrt(direct * (1.0 - direct) / reps);
    const auto v = value_at(q);
    CHECK(std::abs(v.value - direct) < 3.0 * std::sqrt(se * se + v.se * v.se) + 1e-4);
  }
}

TEST_CASE("mixing opponents inflates the variance term") {
  const auto g = fixtures::pigou_game(2);
  const PathEvaluator ev(g, kFastMc);
  const MixedProfile opp{{{1.0, 0.0}, {0.5, 0.5}}};
  const auto mixture_var = ev.value_mixed(Criterion::mv(0.0), 0, 0, opp);
  double avg_var = 0.0;
  for (const auto& [w, counts] : ev.opponent_count_law(0, opp))
    avg_var += w * pure_mean_var(g, counts_with(g, counts, 0, 0), {1}).second;
  CHECK(mixture_var.value >= avg_var - 1e-12);
  CHECK(mixture_var.value > avg_var + 1e-4);  // conditional means differ
}

TEST_CASE("moment-form and gridded-mixture mean-variance values agree") {
  const auto g = fixtures::pigou_game(2);
  const PathEvaluator ev(g, kFastMc);
  const MixedProfile opp{{{1.0, 0.0}, {0.5, 0.5}}};
  for (int candidate : {0, 1}) {
    const auto law = ev.opponent_count_law(0, opp);
    std::vector<Distribution> dists;
    std::vector<std::pair<double, const Distribution*>> parts;
    dists.reserve(law.size());
    for (const auto& [w, counts] : law)
      dists.push_back(path_delay_distribution(g, counts_with(g, counts, 0, candidate),
                                              g.paths_of(0)[candidate]));
    for (std::size_t i = 0; i < law.size(); ++i) parts.emplace_back(law[i].first, &dists[i]);
    const auto grid = Distribution::mix_to_grid(parts);
    const double explicit_value = grid.variance() + 1.0 * grid.mean();
    const auto v = ev.value_mixed(Criterion::mv(1.0), 0, candidate, opp);
    CHECK(std::abs(v.value - explicit_value) < 1e-4);
  }
}

TEST_CASE("mixed tail value is non-increasing in alpha") {
  const auto g = fixtures::pigou_game(2);
  const PathEvaluator ev(g, kFastMc);
  const MixedProfile opp{{{1.0, 0.0}, {0.5, 0.5}}};
  double prev = std::numeric_limits<double>::infinity();
  for (double a = 0.05; a <= 1.0; a += 0.05) {
    const double v = ev.value_mixed(Criterion::cvar(a), 0, 0, opp).value;
    CHECK(v <= prev + 1e-9);
    prev = v;
  }
}

TEST_CASE("opponent support is capped") {
  const auto g = fixtures::braess_game(4);
  const PathEvaluator ev(g, kFastMc);
  MixedProfile uniform{{4, {1.0 / 3, 1.0 / 3, 1.0 / 3}}};
  CHECK(ev.opponent_count_law(0, uniform).size() == 10);  // counts of 3 over 3 paths
  CHECK_THROWS_WITH_AS(ev.opponent_count_law(0, uniform, 5),
                       doctest::Contains("SupportExplosion"), Error);
}

TEST_CASE("mixed profiles are validated") {
  const auto g = fixtures::pigou_game(2);
  const PathEvaluator ev(g, kFastMc);
  CHECK_THROWS_AS(ev.value_mixed(Criterion::rae(), 0, 0, MixedProfile{{{1.0, 0.0}}}),
                  Error);
  CHECK_THROWS_AS(
      ev.value_mixed(Criterion::rae(), 0, 0, MixedProfile{{{1.0, 0.0}, {0.6, 0.6}}}),
      Error);
  CHECK_THROWS_AS(
      ev.value_mixed(Criterion::rae(), 0, 0, MixedProfile{{{1.0, 0.0}, {1.5, -0.5}}}),
      Error);
}
