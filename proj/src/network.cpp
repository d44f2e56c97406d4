#include "scg/network.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <unordered_set>

#include "scg/errors.hpp"

namespace scg {

namespace {

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw Error("NonFinite", std::string(what) + " is not finite");
}

}  // namespace

LatencyFamily LatencyFamily::affine_mixture(std::vector<AffineComponent> comps) {
  if (comps.empty())
    throw Error("ValidationError", "affine mixture needs at least one component");
  for (const auto& c : comps) {
    require_finite(c.weight, "component weight");
    require_finite(c.stiffness, "component stiffness");
    for (const AffineCoef* coef : {&c.center, &c.lo, &c.hi}) {
      require_finite(coef->a, "affine coefficient");
      require_finite(coef->b, "affine coefficient");
    }
    if (c.weight <= 0.0) throw Error("ValidationError", "component weight must be positive");
    if (c.stiffness <= 0.0)
      throw Error("ValidationError", "component stiffness must be positive");
    // The window must stay ordered across the whole admissible load range.
    for (double u : {0.0, 1.0}) {
      if (c.lo.at(u) > c.hi.at(u) + 1e-12)
        throw Error("ValidationError", "component window inverted at load fraction " +
                                           std::to_string(u));
    }
  }
  LatencyFamily f;
  f.kind_ = Kind::kAffineMixture;
  f.affine_ = std::move(comps);
  return f;
}

LatencyFamily LatencyFamily::fixed_mixture(Distribution d) {
  LatencyFamily f;
  f.kind_ = Kind::kFixedMixture;
  f.fixed_ = std::move(d);
  return f;
}

LatencyFamily LatencyFamily::deterministic_zero() { return LatencyFamily{}; }

Distribution LatencyFamily::at_fraction(double u) const {
  if (!std::isfinite(u) || u < -1e-12 || u > 1.0 + 1e-12)
    throw Error("BadLoad", "load fraction " + std::to_string(u) + " outside [0, 1]");
  switch (kind_) {
    case Kind::kDeterministicZero:
      return Distribution::point_mass(0.0);
    case Kind::kFixedMixture:
      return fixed_;
    case Kind::kAffineMixture:
      break;
  }
  std::vector<GaussComponent> comps;
  comps.reserve(affine_.size());
  bool any_width = false;
  for (const auto& c : affine_) {
    GaussComponent g;
    g.weight = c.weight;
    g.center = c.center.at(u);
    g.stiffness = c.stiffness;
    g.lo = c.lo.at(u);
    g.hi = c.hi.at(u);
    if (g.hi > g.lo) any_width = true;
    comps.push_back(g);
  }
  if (!any_width) return Distribution::point_mass(0.0);
  return Distribution::normalize(comps);
}

std::vector<Path> enumerate_simple_paths(const std::vector<Link>& links, int source,
                                         int dest, int max_paths) {
  if (source == dest)
    throw Error("ValidationError", "path enumeration requires source != dest");
  // Outgoing links per node, ascending by link id, so the DFS emits paths in
  // lexicographic link-id order.
  std::unordered_map<int, std::vector<const Link*>> out;
  for (const auto& l : links) out[l.tail].push_back(&l);
  for (auto& [node, outgoing] : out)
    std::sort(outgoing.begin(), outgoing.end(),
              [](const Link* a, const Link* b) { return a->id < b->id; });

  std::vector<Path> result;
  Path current;
  std::unordered_set<int> visited{source};
  auto dfs = [&](auto&& self, int node) -> void {
    if (node == dest) {
      // A simple path cannot revisit dest, so every arrival completes a path.
      if (static_cast<int>(result.size()) >= max_paths)
        throw Error("PathLimit", "more than " + std::to_string(max_paths) +
                                     " simple paths between the requested nodes");
      result.push_back(current);
      return;
    }
    auto it = out.find(node);
    if (it == out.end()) return;
    for (const Link* l : it->second) {
      if (visited.count(l->head)) continue;
      visited.insert(l->head);
      current.push_back(l->id);
      self(self, l->head);
      current.pop_back();
      visited.erase(l->head);
    }
  };
  dfs(dfs, source);
  return result;
}

Game Game::create(std::vector<int> nodes, std::vector<Link> links,
                  std::vector<SdPair> sd_pairs, std::vector<std::vector<Path>> paths) {
  Game g;
  g.nodes_ = std::move(nodes);
  g.links_ = std::move(links);
  g.sd_pairs_ = std::move(sd_pairs);

  std::set<int> node_set(g.nodes_.begin(), g.nodes_.end());
  if (node_set.size() != g.nodes_.size())
    throw Error("ValidationError", "duplicate node ids");
  for (std::size_t i = 0; i < g.links_.size(); ++i) {
    const auto& l = g.links_[i];
    if (l.tail == l.head)
      throw Error("ValidationError", "link " + std::to_string(l.id) + " is a self-loop");
    if (!node_set.count(l.tail) || !node_set.count(l.head))
      throw Error("ValidationError",
                  "link " + std::to_string(l.id) + " references an unknown node");
    if (!g.link_index_.emplace(l.id, static_cast<int>(i)).second)
      throw Error("ValidationError", "duplicate link id " + std::to_string(l.id));
  }
  if (g.sd_pairs_.empty()) throw Error("ValidationError", "at least one demand pair required");
  if (!paths.empty() && paths.size() != g.sd_pairs_.size())
    throw Error("ValidationError", "path lists must match the demand pairs one-to-one");

  g.paths_.resize(g.sd_pairs_.size());
  g.n_ = 0;
  for (std::size_t k = 0; k < g.sd_pairs_.size(); ++k) {
    const auto& sd = g.sd_pairs_[k];
    if (sd.source == sd.dest)
      throw Error("ValidationError", "demand pair " + std::to_string(k) +
                                         " has source equal to dest");
    if (!node_set.count(sd.source) || !node_set.count(sd.dest))
      throw Error("ValidationError",
                  "demand pair " + std::to_string(k) + " references an unknown node");
    if (sd.n_k <= 0)
      throw Error("ValidationError",
                  "demand pair " + std::to_string(k) + " needs a positive player count");
    g.player_offset_.push_back(g.n_);
    g.n_ += sd.n_k;

    if (paths.empty() || paths[k].empty()) {
      g.paths_[k] = enumerate_simple_paths(g.links_, sd.source, sd.dest);
    } else {
      g.paths_[k] = std::move(paths[k]);
    }
    if (g.paths_[k].empty())
      throw Error("ValidationError", "demand pair " + std::to_string(k) + " has no path");
    for (const auto& path : g.paths_[k]) {
      if (path.empty())
        throw Error("ValidationError", "empty path for demand pair " + std::to_string(k));
      std::unordered_set<int> seen{sd.source};
      int at = sd.source;
      for (int id : path) {
        auto it = g.link_index_.find(id);
        if (it == g.link_index_.end())
          throw Error("ValidationError", "path uses unknown link " + std::to_string(id));
        const auto& l = g.links_[static_cast<std::size_t>(it->second)];
        if (l.tail != at)
          throw Error("ValidationError",
                      "path links do not chain at link " + std::to_string(id));
        if (!seen.insert(l.head).second)
          throw Error("ValidationError", "path repeats a node at link " + std::to_string(id));
        at = l.head;
      }
      if (at != sd.dest)
        throw Error("ValidationError",
                    "path does not end at the demand pair's destination");
    }
  }
  return g;
}

const Link& Game::link_by_id(int id) const {
  return links_[static_cast<std::size_t>(link_index(id))];
}

int Game::link_index(int id) const {
  auto it = link_index_.find(id);
  if (it == link_index_.end())
    throw Error("ValidationError", "unknown link id " + std::to_string(id));
  return it->second;
}

int Game::pair_of_player(int player) const {
  if (player < 0 || player >= n_) throw Error("ValidationError", "player index out of range");
  int k = static_cast<int>(player_offset_.size()) - 1;
  while (k > 0 && player_offset_[static_cast<std::size_t>(k)] > player) --k;
  return k;
}

int Game::first_player_of(int pair) const {
  return player_offset_.at(static_cast<std::size_t>(pair));
}

PathCounts counts_of(const Game& game, const PureProfile& profile) {
  if (static_cast<int>(profile.choice.size()) != game.n())
    throw Error("ValidationError", "profile must assign every player a path");
  PathCounts counts(static_cast<std::size_t>(game.num_pairs()));
  for (int k = 0; k < game.num_pairs(); ++k)
    counts[static_cast<std::size_t>(k)].assign(game.paths_of(k).size(), 0);
  for (int i = 0; i < game.n(); ++i) {
    const int k = game.pair_of_player(i);
    const int c = profile.choice[static_cast<std::size_t>(i)];
    auto& row = counts[static_cast<std::size_t>(k)];
    if (c < 0 || c >= static_cast<int>(row.size()))
      throw Error("ValidationError", "path index out of range for player " + std::to_string(i));
    ++row[static_cast<std::size_t>(c)];
  }
  return counts;
}

PureProfile profile_of(const Game& game, const PathCounts& counts) {
  if (static_cast<int>(counts.size()) != game.num_pairs())
    throw Error("ValidationError", "counts must cover every demand pair");
  PureProfile p;
  p.choice.reserve(static_cast<std::size_t>(game.n()));
  for (int k = 0; k < game.num_pairs(); ++k) {
    const auto& row = counts[static_cast<std::size_t>(k)];
    if (row.size() != game.paths_of(k).size())
      throw Error("ValidationError", "counts must cover every path of pair " + std::to_string(k));
    int total = 0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (row[j] < 0) throw Error("ValidationError", "negative path count");
      total += row[j];
      for (int c = 0; c < row[j]; ++c) p.choice.push_back(static_cast<int>(j));
    }
    if (total != game.sd_pairs()[static_cast<std::size_t>(k)].n_k)
      throw Error("ValidationError",
                  "counts of pair " + std::to_string(k) + " do not sum to its player count");
  }
  return p;
}

std::vector<int> link_loads(const Game& game, const PathCounts& counts) {
  if (static_cast<int>(counts.size()) != game.num_pairs())
    throw Error("ValidationError", "counts must cover every demand pair");
  std::vector<int> loads(game.links().size(), 0);
  for (int k = 0; k < game.num_pairs(); ++k) {
    const auto& row = counts[static_cast<std::size_t>(k)];
    if (row.size() != game.paths_of(k).size())
      throw Error("ValidationError", "counts must cover every path of pair " + std::to_string(k));
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (row[j] == 0) continue;
      for (int id : game.paths_of(k)[j])
        loads[static_cast<std::size_t>(game.link_index(id))] += row[j];
    }
  }
  return loads;
}

std::vector<int> link_loads(const Game& game, const PureProfile& profile) {
  return link_loads(game, counts_of(game, profile));
}

Distribution link_distribution(const Link& link, int load, int n) {
  if (n < 1) throw Error("BadLoad", "need at least one player");
  if (load < 0 || load > n)
    throw Error("BadLoad", "load " + std::to_string(load) + " outside [0, " +
                               std::to_string(n) + "]");
  return link.family.at_fraction(static_cast<double>(load) / static_cast<double>(n));
}

namespace {

// Compositions of `total` into `parts` non-negative summands, ascending
// lexicographic.
std::vector<std::vector<int>> compositions(int total, int parts) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(static_cast<std::size_t>(parts), 0);
  auto rec = [&](auto&& self, int idx, int left) -> void {
    if (idx == parts - 1) {
      cur[static_cast<std::size_t>(idx)] = left;
      out.push_back(cur);
      return;
    }
    for (int m = 0; m <= left; ++m) {
      cur[static_cast<std::size_t>(idx)] = m;
      self(self, idx + 1, left - m);
    }
  };
  rec(rec, 0, total);
  return out;
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r *= static_cast<double>(n - k + i) / i;
  return r;
}

}  // namespace

std::vector<PathCounts> enumerate_assignments(const Game& game, std::int64_t cap) {
  double total = 1.0;
  for (int k = 0; k < game.num_pairs(); ++k) {
    const int parts = static_cast<int>(game.paths_of(k).size());
    total *= binomial(game.sd_pairs()[static_cast<std::size_t>(k)].n_k + parts - 1,
                      parts - 1);
  }
  if (total > static_cast<double>(cap))
    throw Error("EnumerationCap", "assignment count exceeds " + std::to_string(cap));

  std::vector<PathCounts> result{{}};
  for (int k = 0; k < game.num_pairs(); ++k) {
    const auto rows = compositions(game.sd_pairs()[static_cast<std::size_t>(k)].n_k,
                                   static_cast<int>(game.paths_of(k).size()));
    std::vector<PathCounts> next;
    next.reserve(result.size() * rows.size());
    for (const auto& prefix : result) {
      for (const auto& row : rows) {
        auto counts = prefix;
        counts.push_back(row);
        next.push_back(std::move(counts));
      }
    }
    result = std::move(next);
  }
  return result;
}

}  // namespace scg
