#include "scg/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"
#include "scg/equilibria_mixed.hpp"
#include "scg/equilibria_pure.hpp"
#include "scg/errors.hpp"
#include "scg/nonatomic.hpp"
#include "scg/social.hpp"

namespace scg {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Formatting: 6 significant digits, locale-independent.

std::string fmt6(double v) {
  char buf[48];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v,
                               std::chars_format::general, 6);
  return std::string(buf, r.ptr);
}

// ---------------------------------------------------------------------------
// Builtin scenarios (the reference networks of the accompanying write-up).

Distribution window(double center, double halfwidth) {
  return Distribution::normalize(
      {{1.0, center, 100.0, center - halfwidth, center + halfwidth}});
}

Game two_link(Distribution d1, Distribution d2, int n) {
  std::vector<Link> links{
      {1, 0, 1, LatencyFamily::fixed_mixture(std::move(d1))},
      {2, 0, 1, LatencyFamily::fixed_mixture(std::move(d2))},
  };
  return Game::create({0, 1}, std::move(links), {{0, 1, n}});
}

Game pigou_network(int n) {
  std::vector<AffineComponent> scaled{
      {2.0, {0.0, 0.25}, {0.0, 0.0}, {0.0, 0.5}, 100.0},
      {3.0, {0.0, 1.5}, {0.0, 1.25}, {0.0, 1.75}, 100.0},
  };
  std::vector<Link> links{
      {1, 0, 1, LatencyFamily::affine_mixture(scaled)},
      {2, 0, 1, LatencyFamily::fixed_mixture(window(1.0, 0.25))},
  };
  return Game::create({0, 1}, std::move(links), {{0, 1, n}});
}

Game braess_network(int n) {
  std::vector<AffineComponent> scaled{
      {1.0, {0.0, 0.5}, {0.0, 0.0}, {0.0, 1.0}, 100.0},
      {1.0, {0.0, 1.5}, {0.0, 1.0}, {0.0, 2.0}, 100.0},
  };
  std::vector<Link> links{
      {1, 0, 1, LatencyFamily::affine_mixture(scaled)},
      {2, 1, 3, LatencyFamily::fixed_mixture(window(1.0, 0.5))},
      {3, 0, 2, LatencyFamily::fixed_mixture(window(1.0, 0.5))},
      {4, 2, 3, LatencyFamily::affine_mixture(scaled)},
      {5, 1, 2, LatencyFamily::deterministic_zero()},
  };
  return Game::create({0, 1, 2, 3}, std::move(links), {{0, 3, n}});
}

Game ex3_network(int n) {  // bimodal 14/19 vs steady 20
  return two_link(Distribution::normalize({{1.0, 14.0, 100.0, 13.0, 15.0},
                                           {1.0, 19.0, 100.0, 18.0, 20.0}}),
                  window(20.0, 1.0), n);
}

Game ex4_network(int n) {  // masses 0.8/0.2 at 5/10 vs 0.8/0.2 at 8/10
  return two_link(Distribution::normalize({{4.0, 5.0, 100.0, 4.0, 6.0},
                                           {1.0, 10.0, 100.0, 9.0, 11.0}}),
                  Distribution::normalize({{4.0, 8.0, 100.0, 7.0, 9.0},
                                           {1.0, 10.0, 100.0, 9.0, 11.0}}),
                  n);
}

Game ex5_network(int n) {  // steady 7 vs masses 0.7/0.3 at 5/10
  return two_link(window(7.0, 1.0),
                  Distribution::normalize({{7.0, 5.0, 100.0, 4.0, 6.0},
                                           {3.0, 10.0, 100.0, 9.0, 11.0}}),
                  n);
}

// ---------------------------------------------------------------------------
// Criterion names.

std::string criterion_name(const Criterion& c) {
  switch (c.kind) {
    case CriterionKind::kNash:
      return "nash";
    case CriterionKind::kRae:
      return "rae";
    case CriterionKind::kMv:
      return "mv";
    case CriterionKind::kCvar:
      return "cvar";
  }
  return "nash";
}

std::string criterion_label(const Criterion& c) {
  switch (c.kind) {
    case CriterionKind::kMv:
      return "mv(rho=" + fmt6(c.rho) + ")";
    case CriterionKind::kCvar:
      return "cvar(alpha=" + fmt6(c.alpha) + ")";
    default:
      return criterion_name(c);
  }
}

// Resolves a criterion from a name plus optional hyper-parameter overrides,
// falling back to the scenario's own criterion for missing pieces.
Criterion resolve_criterion(const std::string& name, std::optional<double> rho,
                            std::optional<double> alpha, const Criterion& base) {
  const std::string n = name.empty() ? criterion_name(base) : name;
  Criterion c;
  if (n == "nash") {
    c = Criterion::nash();
  } else if (n == "rae") {
    c = Criterion::rae();
  } else if (n == "mv") {
    c = Criterion::mv(rho.value_or(base.kind == CriterionKind::kMv ? base.rho : 1.0));
  } else if (n == "cvar") {
    c = Criterion::cvar(
        alpha.value_or(base.kind == CriterionKind::kCvar ? base.alpha : 0.1));
  } else {
    throw Error("ValidationError",
                "criterion must be one of nash|rae|mv|cvar, got '" + n + "'");
  }
  if (c.kind == CriterionKind::kMv && !std::isfinite(c.rho))
    throw Error("ValidationError", "mean-variance weight rho must be finite");
  if (c.kind == CriterionKind::kCvar && !(c.alpha > 0.0 && c.alpha <= 1.0))
    throw Error("ValidationError", "tail mass alpha must lie in (0, 1]");
  return c;
}

// ---------------------------------------------------------------------------
// Scenario document parsing (strict: unknown fields rejected).

[[noreturn]] void parse_fail(const std::string& origin, const std::string& what) {
  throw Error("ParseError", origin + ": " + what);
}

void check_keys(const json& obj, const std::string& origin, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* a : allowed)
      if (item.key() == a) {
        known = true;
        break;
      }
    if (!known) parse_fail(origin, where + ": unknown field '" + item.key() + "'");
  }
}

const json& need(const json& obj, const char* key, const std::string& origin,
                 const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) parse_fail(origin, where + ": missing field '" + key + "'");
  return *it;
}

double as_number(const json& v, const std::string& origin, const std::string& where) {
  if (!v.is_number()) parse_fail(origin, where + ": expected a number");
  return v.get<double>();
}

int as_int(const json& v, const std::string& origin, const std::string& where) {
  if (!v.is_number_integer()) parse_fail(origin, where + ": expected an integer");
  return v.get<int>();
}

std::int64_t as_int64(const json& v, const std::string& origin,
                      const std::string& where) {
  if (!v.is_number_integer()) parse_fail(origin, where + ": expected an integer");
  return v.get<std::int64_t>();
}

AffineCoef as_coef(const json& v, const std::string& origin, const std::string& where) {
  if (!v.is_array() || v.size() != 2)
    parse_fail(origin, where + ": expected [constant, per-load] coefficients");
  return {as_number(v[0], origin, where + "[0]"),
          as_number(v[1], origin, where + "[1]")};
}

LatencyFamily family_from_json(const json& f, const std::string& origin,
                               const std::string& where) {
  if (!f.is_object()) parse_fail(origin, where + ": expected an object");
  check_keys(f, origin, where, {"kind", "components", "point"});
  const auto kind = need(f, "kind", origin, where);
  if (!kind.is_string()) parse_fail(origin, where + ".kind: expected a string");
  const std::string k = kind.get<std::string>();
  if (k == "zero") {
    if (f.size() != 1)
      parse_fail(origin, where + ": a zero family carries no parameters");
    return LatencyFamily::deterministic_zero();
  }
  if (k == "fixed" && f.contains("point")) {
    if (f.contains("components"))
      parse_fail(origin, where + ": give either components or point, not both");
    return LatencyFamily::fixed_mixture(Distribution::point_mass(
        as_number(f["point"], origin, where + ".point")));
  }
  if (k == "affine" && f.contains("point"))
    parse_fail(origin, where + ": point is only valid for fixed families");
  const auto& comps = need(f, "components", origin, where);
  if (!comps.is_array() || comps.empty())
    parse_fail(origin, where + ".components: expected a non-empty array");
  if (k == "affine") {
    std::vector<AffineComponent> out;
    for (std::size_t i = 0; i < comps.size(); ++i) {
      const std::string cw = where + ".components[" + std::to_string(i) + "]";
      const auto& c = comps[i];
      if (!c.is_object()) parse_fail(origin, cw + ": expected an object");
      check_keys(c, origin, cw, {"weight", "center", "lo", "hi", "stiffness"});
      out.push_back({as_number(need(c, "weight", origin, cw), origin, cw + ".weight"),
                     as_coef(need(c, "center", origin, cw), origin, cw + ".center"),
                     as_coef(need(c, "lo", origin, cw), origin, cw + ".lo"),
                     as_coef(need(c, "hi", origin, cw), origin, cw + ".hi"),
                     as_number(need(c, "stiffness", origin, cw), origin,
                               cw + ".stiffness")});
    }
    return LatencyFamily::affine_mixture(std::move(out));
  }
  if (k == "fixed") {
    std::vector<GaussComponent> out;
    for (std::size_t i = 0; i < comps.size(); ++i) {
      const std::string cw = where + ".components[" + std::to_string(i) + "]";
      const auto& c = comps[i];
      if (!c.is_object()) parse_fail(origin, cw + ": expected an object");
      check_keys(c, origin, cw, {"weight", "center", "lo", "hi", "stiffness"});
      out.push_back({as_number(need(c, "weight", origin, cw), origin, cw + ".weight"),
                     as_number(need(c, "center", origin, cw), origin, cw + ".center"),
                     as_number(need(c, "stiffness", origin, cw), origin,
                               cw + ".stiffness"),
                     as_number(need(c, "lo", origin, cw), origin, cw + ".lo"),
                     as_number(need(c, "hi", origin, cw), origin, cw + ".hi")});
    }
    return LatencyFamily::fixed_mixture(Distribution::normalize(std::move(out)));
  }
  parse_fail(origin, where + ".kind: expected one of zero|fixed|affine, got '" + k + "'");
}

// ---------------------------------------------------------------------------
// Scenario document serialization.

ordered_json coef_json(const AffineCoef& c) { return ordered_json::array({c.a, c.b}); }

ordered_json family_json(const LatencyFamily& f) {
  ordered_json out;
  switch (f.kind()) {
    case LatencyFamily::Kind::kDeterministicZero:
      out["kind"] = "zero";
      return out;
    case LatencyFamily::Kind::kAffineMixture: {
      out["kind"] = "affine";
      auto comps = ordered_json::array();
      for (const auto& c : f.affine_components()) {
        ordered_json j;
        j["weight"] = c.weight;
        j["center"] = coef_json(c.center);
        j["lo"] = coef_json(c.lo);
        j["hi"] = coef_json(c.hi);
        j["stiffness"] = c.stiffness;
        comps.push_back(std::move(j));
      }
      out["components"] = std::move(comps);
      return out;
    }
    case LatencyFamily::Kind::kFixedMixture:
      break;
  }
  out["kind"] = "fixed";
  const auto& d = f.fixed_distribution();
  if (d.is_point_mass()) {
    out["point"] = d.point_value();
    return out;
  }
  if (!d.is_mixture())
    throw Error("ValidationError",
                "only mixture or point-mass fixed families serialize");
  auto comps = ordered_json::array();
  for (const auto& c : d.as_mixture().comps) {
    ordered_json j;
    j["weight"] = c.weight;
    j["center"] = c.center;
    j["lo"] = c.lo;
    j["hi"] = c.hi;
    j["stiffness"] = c.stiffness;
    comps.push_back(std::move(j));
  }
  out["components"] = std::move(comps);
  return out;
}

// ---------------------------------------------------------------------------
// Seed resolution: flag > SCG_SEED environment variable > scenario document.

std::optional<std::uint64_t> env_seed() {
  const char* s = std::getenv("SCG_SEED");
  if (s == nullptr || *s == '\0') return std::nullopt;
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s, &end, 0);
  if (errno != 0 || end == s || *end != '\0')
    throw Error("ParseError", "SCG_SEED must be an unsigned integer, got '" +
                                  std::string(s) + "'");
  return static_cast<std::uint64_t>(v);
}

std::uint64_t resolve_seed(std::optional<std::uint64_t> flag, std::uint64_t scenario) {
  if (flag) return *flag;
  if (const auto env = env_seed()) return *env;
  return scenario;
}

Game with_players(const Game& game, int players) {
  auto pairs = game.sd_pairs();
  for (auto& p : pairs) p.n_k = players;
  return Game::create(game.nodes(), game.links(), std::move(pairs));
}

std::string joined_counts(const std::vector<int>& row) {
  std::string s = "(";
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(row[i]);
  }
  return s + ")";
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("IoError", "cannot open '" + path + "' for writing");
  f << content;
  if (!f) throw Error("IoError", "failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------
// Sweep plumbing.

struct SweepCell {
  int n = 0;
  std::string criterion;
  std::string status = "ok";
  std::vector<double> frac;  // per path, pair-major
  double social = 0.0;
  double opt_delay = 0.0;
  double poa = 0.0;
};

SweepCell sweep_cell(const Game& game, const std::string& label,
                     const Criterion& criterion, const McSettings& mc,
                     std::int64_t max_assignments, double opt_delay) {
  SweepCell cell;
  cell.n = game.n();
  cell.criterion = label;
  cell.opt_delay = opt_delay;
  try {
    PathEvaluator ev(game, mc);
    const auto reports = find_pure_equilibria(criterion, ev, max_assignments);
    if (reports.empty()) {
      cell.status = "EmptyEquilibria";
      return cell;
    }
    const auto worst = std::max_element(
        reports.begin(), reports.end(),
        [](const auto& a, const auto& b) { return a.social_delay < b.social_delay; });
    cell.social = worst->social_delay;
    cell.poa = worst->social_delay / opt_delay;
    for (int k = 0; k < game.num_pairs(); ++k) {
      const double nk = game.sd_pairs()[static_cast<std::size_t>(k)].n_k;
      for (int c : worst->assignment[static_cast<std::size_t>(k)])
        cell.frac.push_back(static_cast<double>(c) / nk);
    }
  } catch (const Error& e) {
    cell.status = e.code();
    cell.frac.clear();
  }
  return cell;
}

// Minimal static SVG: fraction-of-path-1 vs n on the left, price of anarchy
// vs n on the right, one polyline per criterion.
std::string sweep_svg(const std::string& scenario,
                      const std::vector<std::string>& labels,
                      const std::vector<SweepCell>& cells, int n_min, int n_max) {
  static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                   "#9467bd", "#8c564b", "#e377c2"};
  double poa_hi = 1.05;
  for (const auto& c : cells)
    if (c.status == "ok") poa_hi = std::max(poa_hi, c.poa);
  poa_hi *= 1.05;

  const double px0 = 70, px1 = 430, qx0 = 560, qx1 = 920;  // panel x ranges
  const double y0 = 330, y1 = 60;                          // shared y range
  const auto xmap = [&](double x0, double x1, double n) {
    return n_max > n_min ? x0 + (x1 - x0) * (n - n_min) / (n_max - n_min)
                         : 0.5 * (x0 + x1);
  };
  const auto ymap = [&](double lo, double hi, double v) {
    return y0 + (y1 - y0) * (v - lo) / (hi - lo);
  };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" "
       "viewBox=\"0 0 960 400\" font-family=\"sans-serif\" font-size=\"13\">\n"
    << "<text x=\"480\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
    << scenario << " sweep</text>\n";
  const auto axes = [&](double x0, double x1, const std::string& title, double lo,
                        double hi) {
    s << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\""
      << y0 << "\" stroke=\"#333\"/>\n"
      << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\""
      << y1 << "\" stroke=\"#333\"/>\n"
      << "<text x=\"" << 0.5 * (x0 + x1) << "\" y=\"365\" text-anchor=\"middle\">n</text>\n"
      << "<text x=\"" << x0 << "\" y=\"" << y0 + 16 << "\" text-anchor=\"middle\">"
      << n_min << "</text>\n"
      << "<text x=\"" << x1 << "\" y=\"" << y0 + 16 << "\" text-anchor=\"middle\">"
      << n_max << "</text>\n"
      << "<text x=\"" << x0 - 8 << "\" y=\"" << y0 << "\" text-anchor=\"end\">"
      << fmt6(lo) << "</text>\n"
      << "<text x=\"" << x0 - 8 << "\" y=\"" << y1 + 4 << "\" text-anchor=\"end\">"
      << fmt6(hi) << "</text>\n"
      << "<text x=\"" << 0.5 * (x0 + x1) << "\" y=\"46\" text-anchor=\"middle\">"
      << title << "</text>\n";
  };
  axes(px0, px1, "fraction of path 1", 0.0, 1.0);
  axes(qx0, qx1, "price of anarchy", 1.0, poa_hi);

  for (std::size_t li = 0; li < labels.size(); ++li) {
    const char* color = kPalette[li % 6];
    std::ostringstream fpts, ppts;
    for (const auto& c : cells) {
      if (c.criterion != labels[li] || c.status != "ok" || c.frac.empty()) continue;
      fpts << fmt6(xmap(px0, px1, c.n)) << ',' << fmt6(ymap(0.0, 1.0, c.frac[0]))
           << ' ';
      ppts << fmt6(xmap(qx0, qx1, c.n)) << ',' << fmt6(ymap(1.0, poa_hi, c.poa))
           << ' ';
    }
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\""
      << fpts.str() << "\"/>\n"
      << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\""
      << ppts.str() << "\"/>\n"
      << "<rect x=\"" << 70 + 120 * static_cast<double>(li) << "\" y=\"378\" "
      << "width=\"10\" height=\"10\" fill=\"" << color << "\"/>\n"
      << "<text x=\"" << 84 + 120 * static_cast<double>(li) << "\" y=\"388\">"
      << labels[li] << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace

// ---------------------------------------------------------------------------

const std::vector<std::string>& builtin_scenarios() {
  static const std::vector<std::string> kNames{"pigou", "braess", "ex3", "ex4",
                                               "ex5"};
  return kNames;
}

ScenarioConfig builtin_scenario(const std::string& name, int players) {
  ScenarioConfig cfg;
  cfg.name = name;
  if (name == "pigou") {
    cfg.game = pigou_network(players > 0 ? players : 2);
  } else if (name == "braess") {
    cfg.game = braess_network(players > 0 ? players : 2);
    cfg.solver.symmetric_paths = {0, 2};
  } else if (name == "ex3") {
    cfg.game = ex3_network(players > 0 ? players : 1);
  } else if (name == "ex4") {
    cfg.game = ex4_network(players > 0 ? players : 1);
  } else if (name == "ex5") {
    cfg.game = ex5_network(players > 0 ? players : 1);
  } else {
    throw Error("ValidationError", "unknown builtin scenario '" + name + "'");
  }
  return cfg;
}

ScenarioConfig parse_scenario(const std::string& text, const std::string& origin,
                              int players) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t at = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() +
                                     static_cast<std::ptrdiff_t>(at), '\n');
    parse_fail(origin, "line " + std::to_string(line) + ": " + e.what());
  }
  if (!doc.is_object()) parse_fail(origin, "top level: expected an object");
  check_keys(doc, origin, "top level",
             {"schema", "name", "nodes", "links", "pairs", "criterion", "solver"});
  if (as_int(need(doc, "schema", origin, "top level"), origin, "schema") != 1)
    parse_fail(origin, "schema: unsupported version (expected 1)");

  ScenarioConfig cfg;
  if (doc.contains("name")) {
    if (!doc["name"].is_string()) parse_fail(origin, "name: expected a string");
    cfg.name = doc["name"].get<std::string>();
  } else {
    cfg.name = origin;
  }

  const auto& jnodes = need(doc, "nodes", origin, "top level");
  if (!jnodes.is_array()) parse_fail(origin, "nodes: expected an array");
  std::vector<int> nodes;
  for (std::size_t i = 0; i < jnodes.size(); ++i)
    nodes.push_back(as_int(jnodes[i], origin, "nodes[" + std::to_string(i) + "]"));

  const auto& jlinks = need(doc, "links", origin, "top level");
  if (!jlinks.is_array()) parse_fail(origin, "links: expected an array");
  std::vector<Link> links;
  for (std::size_t i = 0; i < jlinks.size(); ++i) {
    const std::string lw = "links[" + std::to_string(i) + "]";
    const auto& l = jlinks[i];
    if (!l.is_object()) parse_fail(origin, lw + ": expected an object");
    check_keys(l, origin, lw, {"id", "tail", "head", "family"});
    links.push_back({as_int(need(l, "id", origin, lw), origin, lw + ".id"),
                     as_int(need(l, "tail", origin, lw), origin, lw + ".tail"),
                     as_int(need(l, "head", origin, lw), origin, lw + ".head"),
                     family_from_json(need(l, "family", origin, lw), origin,
                                      lw + ".family")});
  }

  const auto& jpairs = need(doc, "pairs", origin, "top level");
  if (!jpairs.is_array() || jpairs.empty())
    parse_fail(origin, "pairs: expected a non-empty array");
  std::vector<SdPair> pairs;
  for (std::size_t i = 0; i < jpairs.size(); ++i) {
    const std::string pw = "pairs[" + std::to_string(i) + "]";
    const auto& p = jpairs[i];
    if (!p.is_object()) parse_fail(origin, pw + ": expected an object");
    check_keys(p, origin, pw, {"source", "dest", "n"});
    pairs.push_back({as_int(need(p, "source", origin, pw), origin, pw + ".source"),
                     as_int(need(p, "dest", origin, pw), origin, pw + ".dest"),
                     as_int(need(p, "n", origin, pw), origin, pw + ".n")});
  }
  if (players > 0)
    for (auto& p : pairs) p.n_k = players;

  if (doc.contains("criterion")) {
    const auto& c = doc["criterion"];
    if (!c.is_object()) parse_fail(origin, "criterion: expected an object");
    check_keys(c, origin, "criterion", {"name", "rho", "alpha"});
    const auto& cname = need(c, "name", origin, "criterion");
    if (!cname.is_string()) parse_fail(origin, "criterion.name: expected a string");
    std::optional<double> rho, alpha;
    if (c.contains("rho")) rho = as_number(c["rho"], origin, "criterion.rho");
    if (c.contains("alpha")) alpha = as_number(c["alpha"], origin, "criterion.alpha");
    cfg.criterion = resolve_criterion(cname.get<std::string>(), rho, alpha,
                                      Criterion::nash());
  }

  if (doc.contains("solver")) {
    const auto& s = doc["solver"];
    if (!s.is_object()) parse_fail(origin, "solver: expected an object");
    check_keys(s, origin, "solver",
               {"seed", "replications", "grid_step", "max_assignments",
                "max_players_mixed", "symmetric_paths"});
    if (s.contains("seed")) {
      if (!s["seed"].is_number_unsigned() && !s["seed"].is_number_integer())
        parse_fail(origin, "solver.seed: expected an unsigned integer");
      cfg.solver.seed = s["seed"].get<std::uint64_t>();
    }
    if (s.contains("replications")) {
      cfg.solver.replications =
          as_int64(s["replications"], origin, "solver.replications");
      if (cfg.solver.replications <= 0)
        throw Error("ValidationError", "replications must be positive");
    }
    if (s.contains("grid_step")) {
      cfg.solver.grid_step = as_number(s["grid_step"], origin, "solver.grid_step");
      if (!(cfg.solver.grid_step > 0.0))
        throw Error("ValidationError", "grid_step must be positive");
    }
    if (s.contains("max_assignments"))
      cfg.solver.max_assignments =
          as_int64(s["max_assignments"], origin, "solver.max_assignments");
    if (s.contains("max_players_mixed"))
      cfg.solver.max_players_mixed =
          as_int(s["max_players_mixed"], origin, "solver.max_players_mixed");
    if (s.contains("symmetric_paths")) {
      const auto& sp = s["symmetric_paths"];
      if (!sp.is_array() || sp.size() != 2)
        parse_fail(origin, "solver.symmetric_paths: expected [first, second]");
      cfg.solver.symmetric_paths = {
          as_int(sp[0], origin, "solver.symmetric_paths[0]"),
          as_int(sp[1], origin, "solver.symmetric_paths[1]")};
    }
  }

  cfg.game = Game::create(std::move(nodes), std::move(links), std::move(pairs));
  return cfg;
}

ScenarioConfig load_scenario(const std::string& name_or_path, int players) {
  const auto& names = builtin_scenarios();
  if (std::find(names.begin(), names.end(), name_or_path) != names.end())
    return builtin_scenario(name_or_path, players);
  std::ifstream f(name_or_path, std::ios::binary);
  if (!f)
    throw Error("ParseError", "no builtin scenario or readable file named '" +
                                  name_or_path + "'");
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_scenario(buf.str(), name_or_path, players);
}

std::string serialize_scenario(const ScenarioConfig& config) {
  ordered_json doc;
  doc["schema"] = 1;
  doc["name"] = config.name;
  doc["nodes"] = config.game.nodes();
  auto links = ordered_json::array();
  for (const auto& l : config.game.links()) {
    ordered_json j;
    j["id"] = l.id;
    j["tail"] = l.tail;
    j["head"] = l.head;
    j["family"] = family_json(l.family);
    links.push_back(std::move(j));
  }
  doc["links"] = std::move(links);
  auto pairs = ordered_json::array();
  for (const auto& p : config.game.sd_pairs()) {
    ordered_json j;
    j["source"] = p.source;
    j["dest"] = p.dest;
    j["n"] = p.n_k;
    pairs.push_back(std::move(j));
  }
  doc["pairs"] = std::move(pairs);
  ordered_json crit;
  crit["name"] = criterion_name(config.criterion);
  if (config.criterion.kind == CriterionKind::kMv) crit["rho"] = config.criterion.rho;
  if (config.criterion.kind == CriterionKind::kCvar)
    crit["alpha"] = config.criterion.alpha;
  doc["criterion"] = std::move(crit);
  ordered_json solver;
  solver["seed"] = config.solver.seed;
  solver["replications"] = config.solver.replications;
  solver["grid_step"] = config.solver.grid_step;
  solver["max_assignments"] = config.solver.max_assignments;
  solver["max_players_mixed"] = config.solver.max_players_mixed;
  if (config.solver.symmetric_paths)
    solver["symmetric_paths"] = ordered_json::array(
        {config.solver.symmetric_paths->first, config.solver.symmetric_paths->second});
  doc["solver"] = std::move(solver);
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

int cmd_solve(const SolveCommand& cmd, std::ostream& out, std::ostream& err) {
  try {
    const auto cfg = load_scenario(cmd.scenario, cmd.players);
    const auto criterion =
        resolve_criterion(cmd.criterion, cmd.rho, cmd.alpha, cfg.criterion);
    const McSettings mc{resolve_seed(cmd.seed, cfg.solver.seed),
                        cmd.replications.value_or(cfg.solver.replications), 0};
    const auto& game = cfg.game;
    out << "scenario " << cfg.name << ": " << game.n() << " player(s), criterion "
        << criterion_label(criterion) << ", mode " << cmd.mode << "\n";
    std::ostringstream csv;

    if (cmd.mode == "pure") {
      PathEvaluator ev(game, mc);
      const auto reports =
          find_pure_equilibria(criterion, ev, cfg.solver.max_assignments);
      if (reports.empty()) {
        out << "no pure equilibrium found\n";
        return 2;
      }
      const auto opt = optimal_assignment(game, cfg.solver.max_assignments);
      csv << "equilibrium,pair,path,count,social_delay,opt_delay,poa\n";
      std::vector<double> delays;
      for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto& r = reports[i];
        delays.push_back(r.social_delay);
        out << "equilibrium " << i + 1 << ":";
        for (int k = 0; k < game.num_pairs(); ++k)
          out << " pair " << k << " counts "
              << joined_counts(r.assignment[static_cast<std::size_t>(k)]);
        out << "  social delay " << fmt6(r.social_delay) << "\n";
        for (int k = 0; k < game.num_pairs(); ++k) {
          const auto& row = r.assignment[static_cast<std::size_t>(k)];
          for (std::size_t p = 0; p < row.size(); ++p)
            csv << i + 1 << ',' << k << ',' << p + 1 << ',' << row[p] << ','
                << fmt6(r.social_delay) << ',' << fmt6(opt.delay) << ','
                << fmt6(r.social_delay / opt.delay) << '\n';
        }
      }
      const double poa = price_of_anarchy(delays, opt.delay);
      out << "optimum delay " << fmt6(opt.delay) << "\n"
          << "price of anarchy " << fmt6(poa) << "\n";
    } else if (cmd.mode == "mixed") {
      PathEvaluator ev(game, mc);
      const auto profiles =
          enumerate_mixed_equilibria(criterion, ev, cfg.solver.max_players_mixed);
      if (profiles.empty()) {
        out << "no mixed equilibria found by support enumeration\n";
        return 0;
      }
      const auto opt = optimal_assignment(game, cfg.solver.max_assignments);
      csv << "equilibrium,player,path,prob,social_delay,opt_delay,poa\n";
      std::vector<double> delays;
      for (std::size_t i = 0; i < profiles.size(); ++i) {
        const auto& prof = profiles[i];
        const double d =
            social_delay_mixed(game, prof, cfg.solver.max_assignments);
        delays.push_back(d);
        out << "equilibrium " << i + 1 << ":";
        for (std::size_t pl = 0; pl < prof.strategy.size(); ++pl) {
          out << " player " << pl << " (";
          for (std::size_t p = 0; p < prof.strategy[pl].size(); ++p) {
            if (p) out << ", ";
            out << fmt6(prof.strategy[pl][p]);
            csv << i + 1 << ',' << pl << ',' << p + 1 << ','
                << fmt6(prof.strategy[pl][p]) << ',' << fmt6(d) << ','
                << fmt6(opt.delay) << ',' << fmt6(d / opt.delay) << '\n';
          }
          out << ")";
        }
        out << "  social delay " << fmt6(d) << "\n";
      }
      const double poa = price_of_anarchy(delays, opt.delay);
      out << "optimum delay " << fmt6(opt.delay) << "\n"
          << "price of anarchy " << fmt6(poa) << "\n";
    } else if (cmd.mode == "nonatomic") {
      NonatomicOptions options;
      options.symmetric_paths = cfg.solver.symmetric_paths;
      options.mc = mc;
      const auto eq = solve_nonatomic(criterion, game, options);
      const double d = nonatomic_social_delay(game, eq);
      const auto opt = nonatomic_optimum(game);
      csv << "pair,path,frac,social_delay,opt_delay,poa\n";
      for (int k = 0; k < game.num_pairs(); ++k) {
        const auto& row = eq.fractions[static_cast<std::size_t>(k)];
        out << "equilibrium flow pair " << k << ": (";
        for (std::size_t p = 0; p < row.size(); ++p) {
          if (p) out << ", ";
          out << fmt6(row[p]);
          csv << k << ',' << p + 1 << ',' << fmt6(row[p]) << ',' << fmt6(d) << ','
              << fmt6(opt.delay) << ',' << fmt6(d / opt.delay) << '\n';
        }
        out << ")\n";
      }
      out << "social delay " << fmt6(d) << "\n"
          << "optimum delay " << fmt6(opt.delay) << "\n"
          << "price of anarchy " << fmt6(d / opt.delay) << "\n";
    } else {
      throw Error("ValidationError",
                  "mode must be one of pure|mixed|nonatomic, got '" + cmd.mode + "'");
    }

    if (!cmd.out_csv.empty()) write_file(cmd.out_csv, csv.str());
    return 0;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "[InternalError] " << e.what() << "\n";
    return 1;
  }
}

int cmd_sweep(const SweepCommand& cmd, std::ostream& out, std::ostream& err) {
  try {
    if (cmd.n_min < 1 || cmd.n_max < cmd.n_min)
      throw Error("ValidationError", "player range must satisfy 1 <= n_min <= n_max");
    const auto base = load_scenario(cmd.scenario, 0);
    std::vector<std::string> labels =
        cmd.criteria.empty() ? std::vector<std::string>{criterion_name(base.criterion)}
                             : cmd.criteria;
    std::vector<Criterion> criteria;
    for (const auto& name : labels)
      criteria.push_back(resolve_criterion(name, cmd.rho, cmd.alpha, base.criterion));
    const McSettings mc{resolve_seed(cmd.seed, base.solver.seed),
                        cmd.replications.value_or(base.solver.replications), 0};

    const int jobs = cmd.n_max - cmd.n_min + 1;
    std::vector<std::vector<SweepCell>> cells(static_cast<std::size_t>(jobs));
    std::atomic<int> next{0};
    const auto worker = [&] {
      for (int job = next.fetch_add(1); job < jobs; job = next.fetch_add(1)) {
        const int n = cmd.n_min + job;
        auto& slot = cells[static_cast<std::size_t>(job)];
        try {
          const auto game = with_players(base.game, n);
          const auto opt = optimal_assignment(game, base.solver.max_assignments);
          for (std::size_t c = 0; c < criteria.size(); ++c)
            slot.push_back(sweep_cell(game, labels[c], criteria[c], mc,
                                      base.solver.max_assignments, opt.delay));
        } catch (const Error& e) {
          slot.clear();
          for (const auto& label : labels) {
            SweepCell cell;
            cell.n = n;
            cell.criterion = label;
            cell.status = e.code();
            slot.push_back(cell);
          }
        }
      }
    };
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const int nthreads = static_cast<int>(
        std::min<unsigned>(hw, static_cast<unsigned>(std::min(jobs, 8))));
    std::vector<std::thread> pool;
    for (int t = 1; t < nthreads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::ostringstream csv;
    csv << "n,criterion,path,frac,social_delay,opt_delay,poa,status\n";
    std::vector<SweepCell> flat;
    for (const auto& slot : cells)
      for (const auto& cell : slot) {
        flat.push_back(cell);
        if (cell.status == "ok") {
          for (std::size_t p = 0; p < cell.frac.size(); ++p)
            csv << cell.n << ',' << cell.criterion << ',' << p + 1 << ','
                << fmt6(cell.frac[p]) << ',' << fmt6(cell.social) << ','
                << fmt6(cell.opt_delay) << ',' << fmt6(cell.poa) << ",ok\n";
        } else {
          csv << cell.n << ',' << cell.criterion << ",,,,,," << cell.status << '\n';
        }
      }

    if (cmd.out_csv.empty())
      out << csv.str();
    else
      write_file(cmd.out_csv, csv.str());
    if (!cmd.plot_svg.empty())
      write_file(cmd.plot_svg,
                 sweep_svg(base.name, labels, flat, cmd.n_min, cmd.n_max));
    return 0;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "[InternalError] " << e.what() << "\n";
    return 1;
  }
}

}  // namespace scg
