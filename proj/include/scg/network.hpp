#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "scg/distribution.hpp"

namespace scg {

// Value of an affine function a + b·u of the load fraction u ∈ [0,1].
struct AffineCoef {
  double a = 0.0;
  double b = 0.0;

  double at(double u) const { return a + b * u; }
  friend bool operator==(const AffineCoef&, const AffineCoef&) = default;
};

// One windowed-Gaussian component whose center and window move affinely with
// the load fraction; weight and stiffness stay fixed.
struct AffineComponent {
  double weight = 1.0;
  AffineCoef center;
  AffineCoef lo;
  AffineCoef hi;
  double stiffness = 100.0;

  friend bool operator==(const AffineComponent&, const AffineComponent&) = default;
};

// How a link's delay law responds to load.
class LatencyFamily {
 public:
  enum class Kind { kAffineMixture, kFixedMixture, kDeterministicZero };

  static LatencyFamily affine_mixture(std::vector<AffineComponent> comps);
  static LatencyFamily fixed_mixture(Distribution d);
  static LatencyFamily deterministic_zero();

  // Instantiates the family at load fraction u.  A family whose windows are
  // all degenerate at u collapses to a point mass at zero.
  Distribution at_fraction(double u) const;

  Kind kind() const { return kind_; }
  const std::vector<AffineComponent>& affine_components() const { return affine_; }
  const Distribution& fixed_distribution() const { return fixed_; }

  friend bool operator==(const LatencyFamily&, const LatencyFamily&) = default;

 private:
  Kind kind_ = Kind::kDeterministicZero;
  std::vector<AffineComponent> affine_;
  Distribution fixed_ = Distribution::point_mass(0.0);
};

struct Link {
  int id = 0;
  int tail = 0;
  int head = 0;
  LatencyFamily family;

  friend bool operator==(const Link&, const Link&) = default;
};

struct SdPair {
  int source = 0;
  int dest = 0;
  int n_k = 1;  // players routing on this pair

  friend bool operator==(const SdPair&, const SdPair&) = default;
};

// A path is the sequence of link ids it traverses; counts are per-pair tallies
// of how many of that pair's players sit on each path.
using Path = std::vector<int>;
using PathCounts = std::vector<std::vector<int>>;

// A pure strategy profile: players are numbered pair by pair, and each entry
// is an index into that player's pair path list.
struct PureProfile {
  std::vector<int> choice;
};

// Enumerates all simple directed source→dest paths over the given links via
// depth-first search, visiting links in ascending id order so the result is
// lexicographic by link-id sequence.  Throws PathLimit past max_paths.
std::vector<Path> enumerate_simple_paths(const std::vector<Link>& links, int source,
                                         int dest, int max_paths = 10000);

class Game {
 public:
  // Validates the network and enumerates any pair's missing path list.
  // `paths` may be empty (all pairs enumerated) or one list per pair, where an
  // empty per-pair list also means "enumerate".
  static Game create(std::vector<int> nodes, std::vector<Link> links,
                     std::vector<SdPair> sd_pairs,
                     std::vector<std::vector<Path>> paths = {});

  const std::vector<int>& nodes() const { return nodes_; }
  const std::vector<Link>& links() const { return links_; }
  const std::vector<SdPair>& sd_pairs() const { return sd_pairs_; }
  const std::vector<std::vector<Path>>& paths() const { return paths_; }
  const std::vector<Path>& paths_of(int pair) const { return paths_.at(pair); }
  int n() const { return n_; }
  int num_pairs() const { return static_cast<int>(sd_pairs_.size()); }

  const Link& link_by_id(int id) const;
  int link_index(int id) const;  // position within links()

  int pair_of_player(int player) const;
  int first_player_of(int pair) const;

  friend bool operator==(const Game&, const Game&) = default;

 private:
  std::vector<int> nodes_;
  std::vector<Link> links_;
  std::vector<SdPair> sd_pairs_;
  std::vector<std::vector<Path>> paths_;
  int n_ = 0;
  std::unordered_map<int, int> link_index_;
  std::vector<int> player_offset_;  // first player id of each pair
};

// Tally of players per path induced by a per-player profile, and back again
// (players of one pair are interchangeable; the canonical profile assigns
// them to paths in index order).
PathCounts counts_of(const Game& game, const PureProfile& profile);
PureProfile profile_of(const Game& game, const PathCounts& counts);

// Players on each link (indexed like game.links()).
std::vector<int> link_loads(const Game& game, const PureProfile& profile);
std::vector<int> link_loads(const Game& game, const PathCounts& counts);

// Instantiates a link's delay law with `load` of `n` players on it.
// Throws BadLoad outside 0 ≤ load ≤ n or if n < 1.
Distribution link_distribution(const Link& link, int load, int n);

// Every anonymous assignment (per-pair path counts summing to that pair's
// player count), in ascending lexicographic order.  Throws EnumerationCap if
// there would be more than `cap` of them.
std::vector<PathCounts> enumerate_assignments(const Game& game,
                                              std::int64_t cap = 1'000'000);

}  // namespace scg
