#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "scg/network.hpp"
#include "scg/path_eval.hpp"

namespace scg {

/**
 * Solver knobs a scenario document may carry.  Every field is optional in
 * the file; command-line flags override the file, and the SCG_SEED
 * environment variable sits between the two for the seed.
 */
struct ScenarioSolver {
  std::uint64_t seed = kDefaultSeed;
  std::int64_t replications = 1'000'000;
  double grid_step = 1e-3;
  std::int64_t max_assignments = 1'000'000;
  int max_players_mixed = 2;
  // Interchangeable paths of a three-path pair, consumed by the continuum
  // solver's symmetry reduction.
  std::optional<std::pair<int, int>> symmetric_paths;

  friend bool operator==(const ScenarioSolver&, const ScenarioSolver&) = default;
};

struct ScenarioConfig {
  std::string name;  // builtin name or document name
  Game game;
  Criterion criterion = Criterion::nash();
  ScenarioSolver solver;
};

// Builtin scenario names: pigou, braess, ex3, ex4, ex5.
const std::vector<std::string>& builtin_scenarios();

/**
 * Builds a builtin scenario.  `players` overrides every pair's player count
 * when positive (0 keeps the builtin default: 2 for pigou/braess, 1 for the
 * two-link example networks ex3/ex4/ex5).
 */
ScenarioConfig builtin_scenario(const std::string& name, int players = 0);

/**
 * Parses a scenario document (JSON, schema version 1).  Unknown fields are
 * rejected.  Throws ParseError with line/field context for malformed
 * documents and ValidationError (from Game::create or the criterion checks)
 * for structurally invalid ones.  `origin` labels error messages.
 */
ScenarioConfig parse_scenario(const std::string& text, const std::string& origin,
                              int players = 0);

// Loads a builtin by name, or reads and parses a scenario file.
ScenarioConfig load_scenario(const std::string& name_or_path, int players = 0);

// Serializes a scenario to a schema-1 document that parses back to an equal
// game, criterion, and solver block.
std::string serialize_scenario(const ScenarioConfig& config);

/**
 * `solve` command: computes equilibria of one scenario in one mode and
 * writes a human-readable report to `out` (plus an optional CSV file).
 * Exit codes: 0 success, 2 pure mode found no equilibrium, 1 any error
 * (diagnostics go to `err` as "code: message").
 */
struct SolveCommand {
  std::string scenario;        // builtin name or file path
  std::string criterion;       // nash|rae|mv|cvar; empty = scenario's own
  std::string mode = "pure";   // pure | mixed | nonatomic
  int players = 0;             // 0 = scenario default
  std::optional<double> rho;   // mean weight for mv
  std::optional<double> alpha; // tail mass for cvar
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> replications;
  std::string out_csv;         // empty = no CSV
};

int cmd_solve(const SolveCommand& cmd, std::ostream& out, std::ostream& err);

/**
 * `sweep` command: pure-equilibrium sweep over a player range, one CSV block
 * per (players, criterion) with per-path rows:
 *   n,criterion,path,frac,social_delay,opt_delay,poa,status
 * Numbers use 6 significant digits, '.' decimal separator, LF endings; the
 * fraction and delay columns describe the worst (largest social delay)
 * equilibrium, matching the price-of-anarchy convention.  Rows that fail
 * keep their position with the error code in `status`.  Rows are computed
 * in parallel across player counts and written in order; identical
 * invocations with identical seeds are byte-identical.  With `plot_svg`
 * set, writes a minimal two-panel SVG (fraction of path 1 vs n, PoA vs n).
 */
struct SweepCommand {
  std::string scenario;
  std::vector<std::string> criteria;  // empty = scenario's own criterion
  int n_min = 2;
  int n_max = 20;
  std::optional<double> rho;
  std::optional<double> alpha;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> replications;
  std::string out_csv;   // empty = write CSV to `out`
  std::string plot_svg;  // empty = no plot
};

int cmd_sweep(const SweepCommand& cmd, std::ostream& out, std::ostream& err);

}  // namespace scg
