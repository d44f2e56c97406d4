#pragma once

// Shared reference networks used across the test suites.

#include <utility>
#include <vector>

#include "scg/distribution.hpp"
#include "scg/network.hpp"

namespace fixtures {

// Constant-delay law centered at `center` with the given half-width window.
inline scg::Distribution fixed_window(double center, double halfwidth) {
  return scg::Distribution::normalize(
      {{1.0, center, 100.0, center - halfwidth, center + halfwidth}});
}

// Two parallel links: link 1 load-scaled (mean m/n, two modes with masses
// 0.4/0.6 around u/4 and 3u/2), link 2 constant with mean 1.
inline scg::Game pigou_game(int n) {
  using namespace scg;
  std::vector<AffineComponent> scaled{
      {2.0, {0.0, 0.25}, {0.0, 0.0}, {0.0, 0.5}, 100.0},
      {3.0, {0.0, 1.5}, {0.0, 1.25}, {0.0, 1.75}, 100.0},
  };
  std::vector<Link> links{
      {1, 0, 1, LatencyFamily::affine_mixture(scaled)},
      {2, 0, 1, LatencyFamily::fixed_mixture(fixed_window(1.0, 0.25))},
  };
  return Game::create({0, 1}, std::move(links), {{0, 1, n}});
}

// Diamond with a free shortcut: links 1 and 4 load-scaled (mean m/n, equal
// masses around u/2 and 3u/2), links 2 and 3 constant with mean 1, link 5
// a zero-delay shortcut.  Paths come out as (1,2), (1,5,4), (3,4).
inline scg::Game braess_game(int n) {
  using namespace scg;
  std::vector<AffineComponent> scaled{
      {1.0, {0.0, 0.5}, {0.0, 0.0}, {0.0, 1.0}, 100.0},
      {1.0, {0.0, 1.5}, {0.0, 1.0}, {0.0, 2.0}, 100.0},
  };
  std::vector<Link> links{
      {1, 0, 1, LatencyFamily::affine_mixture(scaled)},
      {2, 1, 3, LatencyFamily::fixed_mixture(fixed_window(1.0, 0.5))},
      {3, 0, 2, LatencyFamily::fixed_mixture(fixed_window(1.0, 0.5))},
      {4, 2, 3, LatencyFamily::affine_mixture(scaled)},
      {5, 1, 2, LatencyFamily::deterministic_zero()},
  };
  return Game::create({0, 1, 2, 3}, std::move(links), {{0, 3, n}});
}

// Two parallel links with load-independent laws.
inline scg::Game two_link_game(scg::Distribution d1, scg::Distribution d2, int n) {
  using namespace scg;
  std::vector<Link> links{
      {1, 0, 1, LatencyFamily::fixed_mixture(std::move(d1))},
      {2, 0, 1, LatencyFamily::fixed_mixture(std::move(d2))},
  };
  return Game::create({0, 1}, std::move(links), {{0, 1, n}});
}

// Bimodal 14/19 (mean 16.5, variance 6.255) vs steady 20 (variance 0.005).
inline scg::Game risky_vs_steady_game(int n) {
  return two_link_game(
      scg::Distribution::normalize(
          {{1.0, 14.0, 100.0, 13.0, 15.0}, {1.0, 19.0, 100.0, 18.0, 20.0}}),
      fixed_window(20.0, 1.0), n);
}

// Masses 0.8/0.2 at 5/10 (mean 6, variance 4.005) vs 0.8/0.2 at 8/10
// (mean 8.4, variance 0.645); identical upper modes.
inline scg::Game shared_tail_game(int n) {
  return two_link_game(
      scg::Distribution::normalize(
          {{4.0, 5.0, 100.0, 4.0, 6.0}, {1.0, 10.0, 100.0, 9.0, 11.0}}),
      scg::Distribution::normalize(
          {{4.0, 8.0, 100.0, 7.0, 9.0}, {1.0, 10.0, 100.0, 9.0, 11.0}}),
      n);
}

// Steady 7 (variance 0.005) vs masses 0.7/0.3 at 5/10 (mean 6.5, variance
// 5.255): lower mean on the riskier link.
inline scg::Game steady_vs_spread_game(int n) {
  return two_link_game(
      fixed_window(7.0, 1.0),
      scg::Distribution::normalize(
          {{7.0, 5.0, 100.0, 4.0, 6.0}, {3.0, 10.0, 100.0, 9.0, 11.0}}),
      n);
}

}  // namespace fixtures
