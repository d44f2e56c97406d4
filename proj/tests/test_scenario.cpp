// Scenario documents, builtin networks, and the solve/sweep command layer:
// round-trips, strict parsing, seed precedence, exit codes, CSV stability.
#include "scg/scenario.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "json.hpp"
#include "scg/errors.hpp"
#include "scg/rng.hpp"

using namespace scg;
using namespace fixtures;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(static_cast<bool>(f));
  std::ostringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::string write_temp(const std::string& name, const std::string& content) {
  const auto path = temp_path(name);
  std::ofstream f(path, std::ios::binary);
  f << content;
  return path;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

void expect_error(const std::string& text, const std::string& code,
                  const std::string& needle) {
  try {
    (void)parse_scenario(text, "doc");
    FAIL_CHECK("expected [" << code << "] for: " << needle);
  } catch (const Error& e) {
    CHECK(e.code() == code);
    CHECK(std::string(e.what()).find(needle) != std::string::npos);
  }
}

// Sets or clears SCG_SEED for one scope, restoring the previous value.
struct EnvSeed {
  bool had;
  std::string old;
  explicit EnvSeed(const char* value) {
    const char* p = std::getenv("SCG_SEED");
    had = p != nullptr;
    if (p) old = p;
    if (value)
      setenv("SCG_SEED", value, 1);
    else
      unsetenv("SCG_SEED");
  }
  ~EnvSeed() {
    if (had)
      setenv("SCG_SEED", old.c_str(), 1);
    else
      unsetenv("SCG_SEED");
  }
};

struct RunResult {
  int exit = 0;
  std::string out;
  std::string err;
};

RunResult run_solve(SolveCommand cmd) {
  std::ostringstream out, err;
  RunResult r;
  r.exit = cmd_solve(cmd, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

RunResult run_sweep(SweepCommand cmd) {
  std::ostringstream out, err;
  RunResult r;
  r.exit = cmd_sweep(cmd, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

SolveCommand mixed_rae_probe() {
  SolveCommand cmd;
  cmd.scenario = "pigou";
  cmd.criterion = "rae";
  cmd.mode = "mixed";
  cmd.players = 2;
  cmd.replications = 50'000;
  return cmd;
}

}  // namespace

TEST_CASE("builtin scenarios reproduce the reference networks") {
  CHECK(builtin_scenarios() ==
        std::vector<std::string>{"pigou", "braess", "ex3", "ex4", "ex5"});

  const auto pigou = builtin_scenario("pigou");
  CHECK(pigou.game == pigou_game(2));
  CHECK(pigou.criterion == Criterion::nash());
  CHECK(pigou.solver.seed == kDefaultSeed);
  CHECK_FALSE(pigou.solver.symmetric_paths.has_value());

  const auto braess = builtin_scenario("braess");
  CHECK(braess.game == braess_game(2));
  REQUIRE(braess.solver.symmetric_paths.has_value());
  CHECK(*braess.solver.symmetric_paths == std::pair<int, int>{0, 2});

  CHECK(builtin_scenario("ex3").game == risky_vs_steady_game(1));
  CHECK(builtin_scenario("ex4").game == shared_tail_game(1));
  CHECK(builtin_scenario("ex5").game == steady_vs_spread_game(1));

  CHECK(builtin_scenario("pigou", 7).game == pigou_game(7));
  CHECK(builtin_scenario("braess", 5).game == braess_game(5));
  CHECK(builtin_scenario("ex4", 3).game == shared_tail_game(3));

  CHECK_THROWS_AS((void)builtin_scenario("nope"), Error);
}

TEST_CASE("scenario documents round-trip through serialize and parse") {
  for (const auto& name : builtin_scenarios()) {
    CAPTURE(name);
    const auto cfg = builtin_scenario(name);
    const auto text = serialize_scenario(cfg);
    const auto back = parse_scenario(text, name + ".json");
    CHECK(back.name == cfg.name);
    CHECK(back.game == cfg.game);
    CHECK(back.criterion == cfg.criterion);
    CHECK(back.solver == cfg.solver);
  }
}

TEST_CASE("scenario files load from disk with overrides intact") {
  auto cfg = builtin_scenario("braess");
  cfg.name = "tweaked";
  cfg.criterion = Criterion::mv(2.5);
  cfg.solver.seed = 99;
  cfg.solver.replications = 5000;
  cfg.solver.grid_step = 2e-3;
  cfg.solver.max_assignments = 777;
  cfg.solver.max_players_mixed = 3;

  const auto path = write_temp("scg_roundtrip.json", serialize_scenario(cfg));
  const auto back = load_scenario(path);
  CHECK(back.name == "tweaked");
  CHECK(back.game == cfg.game);
  CHECK(back.criterion == Criterion::mv(2.5));
  CHECK(back.solver == cfg.solver);

  const auto rescaled = load_scenario(path, 5);
  CHECK(rescaled.game == braess_game(5));

  CHECK_THROWS_AS((void)load_scenario("definitely_missing.json"), Error);
  std::filesystem::remove(path);
}

TEST_CASE("mean-variance and tail criteria serialize their parameters") {
  auto cfg = builtin_scenario("pigou");
  cfg.criterion = Criterion::cvar(0.25);
  auto back = parse_scenario(serialize_scenario(cfg), "doc");
  CHECK(back.criterion == Criterion::cvar(0.25));

  cfg.criterion = Criterion::mv(0.5);
  back = parse_scenario(serialize_scenario(cfg), "doc");
  CHECK(back.criterion == Criterion::mv(0.5));
}

TEST_CASE("parse errors name the line or field") {
  expect_error("{\n  \"schema\": 1,\n  oops\n}", "ParseError", "line 3");
  expect_error("[]", "ParseError", "top level");

  using nlohmann::json;
  const auto base = json::parse(serialize_scenario(builtin_scenario("braess")));

  auto doc = base;
  doc["extra"] = 1;
  expect_error(doc.dump(), "ParseError", "unknown field 'extra'");

  doc = base;
  doc["schema"] = 2;
  expect_error(doc.dump(), "ParseError", "unsupported version");

  doc = base;
  doc.erase("nodes");
  expect_error(doc.dump(), "ParseError", "missing field 'nodes'");

  doc = base;
  doc["links"][0]["family"]["kind"] = "banana";
  expect_error(doc.dump(), "ParseError", "links[0].family.kind");

  doc = base;
  doc["links"][1]["volume"] = 3;
  expect_error(doc.dump(), "ParseError", "unknown field 'volume'");

  doc = base;
  doc["pairs"][0]["n"] = 1.5;
  expect_error(doc.dump(), "ParseError", "pairs[0].n: expected an integer");

  doc = base;
  doc["solver"]["symmetric_paths"] = json::array({1});
  expect_error(doc.dump(), "ParseError", "symmetric_paths");

  doc = base;
  doc["criterion"]["name"] = 7;
  expect_error(doc.dump(), "ParseError", "criterion.name");

  doc = base;
  doc["links"][0]["family"]["point"] = 1.0;  // link 0 is load-dependent
  expect_error(doc.dump(), "ParseError", "point is only valid");

  doc = base;
  doc["links"][4]["family"]["components"] = json::array();  // link 4 is zero
  expect_error(doc.dump(), "ParseError", "carries no parameters");
}

TEST_CASE("scenario validation rejects bad criteria and solver settings") {
  using nlohmann::json;
  const auto base = json::parse(serialize_scenario(builtin_scenario("pigou")));

  auto doc = base;
  doc["criterion"]["name"] = "foo";
  expect_error(doc.dump(), "ValidationError", "nash|rae|mv|cvar");

  doc = base;
  doc["criterion"] = {{"name", "cvar"}, {"alpha", 0.0}};
  expect_error(doc.dump(), "ValidationError", "(0, 1]");

  doc = base;
  doc["solver"]["replications"] = 0;
  expect_error(doc.dump(), "ValidationError", "replications");

  doc = base;
  doc["solver"]["grid_step"] = -1.0;
  expect_error(doc.dump(), "ValidationError", "grid_step");
}

TEST_CASE("solve command solves builtin scenarios with documented outputs") {
  SolveCommand cmd;
  cmd.scenario = "pigou";
  cmd.criterion = "nash";
  cmd.mode = "pure";
  cmd.players = 10;
  auto r = run_solve(cmd);
  CHECK(r.exit == 0);
  CHECK(r.out.find("counts (10, 0)") != std::string::npos);
  CHECK(r.out.find("price of anarchy 1.33333") != std::string::npos);
  CHECK(r.err.empty());

  cmd = {};
  cmd.scenario = "ex4";
  cmd.criterion = "mv";
  cmd.rho = 1.0;
  cmd.mode = "pure";
  cmd.players = 1;
  r = run_solve(cmd);
  CHECK(r.exit == 0);
  CHECK(r.out.find("counts (0, 1)") != std::string::npos);

  cmd = {};
  cmd.scenario = "pigou";
  cmd.criterion = "mv";
  cmd.rho = 1.0;
  cmd.mode = "nonatomic";
  r = run_solve(cmd);
  CHECK(r.exit == 0);
  const auto at = r.out.find("pair 0: (");
  REQUIRE(at != std::string::npos);
  CHECK(std::stod(r.out.substr(at + 9)) == doctest::Approx(0.77505).epsilon(5e-4));
  CHECK(r.out.find("price of anarchy 1.1008") != std::string::npos);

  cmd = {};
  cmd.scenario = "braess";
  cmd.criterion = "cvar";
  cmd.alpha = 0.1;
  cmd.mode = "nonatomic";
  r = run_solve(cmd);
  CHECK(r.exit == 0);
  CHECK(r.out.find("0.304") != std::string::npos);
  CHECK(r.out.find("price of anarchy 1.051") != std::string::npos);
}

TEST_CASE("solve command writes a per-equilibrium CSV when asked") {
  SolveCommand cmd;
  cmd.scenario = "pigou";
  cmd.criterion = "nash";
  cmd.players = 10;
  cmd.out_csv = temp_path("scg_solve.csv");
  const auto r = run_solve(cmd);
  REQUIRE(r.exit == 0);
  const auto lines = split(slurp(cmd.out_csv), '\n');
  REQUIRE(lines.size() >= 3);
  CHECK(lines[0] == "equilibrium,pair,path,count,social_delay,opt_delay,poa");
  CHECK(split(lines[1], ',').size() == 7);
  std::filesystem::remove(cmd.out_csv);
}

TEST_CASE("solve command reports errors on stderr with exit 1") {
  SolveCommand cmd;
  cmd.scenario = "nope";
  auto r = run_solve(cmd);
  CHECK(r.exit == 1);
  CHECK(r.err.find("[ParseError]") != std::string::npos);
  CHECK(r.out.empty());

  cmd = {};
  cmd.scenario = "pigou";
  cmd.mode = "sideways";
  r = run_solve(cmd);
  CHECK(r.exit == 1);
  CHECK(r.err.find("[ValidationError]") != std::string::npos);

  cmd = {};
  cmd.scenario = "pigou";
  cmd.criterion = "cvar";
  cmd.alpha = 0.0;
  r = run_solve(cmd);
  CHECK(r.exit == 1);
  CHECK(r.err.find("[ValidationError]") != std::string::npos);
}

TEST_CASE("mixed mode reports the support-enumeration profiles") {
  auto cmd = mixed_rae_probe();
  cmd.seed = 222;
  const auto r = run_solve(cmd);
  REQUIRE(r.exit == 0);
  CHECK(r.out.find("player 0") != std::string::npos);
  const auto at = r.out.find("price of anarchy ");
  REQUIRE(at != std::string::npos);
  const double poa = std::stod(r.out.substr(at + 17));
  CHECK(poa == doctest::Approx(1.2405).epsilon(0.02));
}

TEST_CASE("seed precedence is flag over environment over scenario document") {
  auto cmd = mixed_rae_probe();
  cmd.seed = 222;
  const auto base = run_solve(cmd);
  REQUIRE(base.exit == 0);

  {
    EnvSeed env("222");
    auto plain = mixed_rae_probe();
    CHECK(run_solve(plain).out == base.out);
  }
  {
    EnvSeed env("999");
    auto flagged = mixed_rae_probe();
    flagged.seed = 222;
    CHECK(run_solve(flagged).out == base.out);
  }
  {
    auto cfg = builtin_scenario("pigou");
    cfg.criterion = Criterion::rae();
    cfg.solver.seed = 222;
    cfg.solver.replications = 50'000;
    const auto path = write_temp("scg_seed.json", serialize_scenario(cfg));
    SolveCommand from_file;
    from_file.scenario = path;
    from_file.mode = "mixed";
    from_file.players = 2;
    CHECK(run_solve(from_file).out == base.out);

    cfg.solver.seed = 999;
    const auto path2 = write_temp("scg_seed2.json", serialize_scenario(cfg));
    EnvSeed env("222");
    SolveCommand enved;
    enved.scenario = path2;
    enved.mode = "mixed";
    enved.players = 2;
    CHECK(run_solve(enved).out == base.out);
    std::filesystem::remove(path);
    std::filesystem::remove(path2);
  }
  {
    EnvSeed env("not_a_seed");
    const auto r = run_solve(mixed_rae_probe());
    CHECK(r.exit == 1);
    CHECK(r.err.find("[ParseError]") != std::string::npos);
  }
}

TEST_CASE("sweep output is byte-identical across reruns") {
  SweepCommand cmd;
  cmd.scenario = "pigou";
  cmd.criteria = {"rae"};
  cmd.n_min = 2;
  cmd.n_max = 4;
  cmd.seed = 7;
  cmd.replications = 40'000;
  const auto a = run_sweep(cmd);
  const auto b = run_sweep(cmd);
  REQUIRE(a.exit == 0);
  CHECK(a.out == b.out);

  const auto lines = split(a.out, '\n');
  REQUIRE(lines.size() >= 7);
  CHECK(lines[0] == "n,criterion,path,frac,social_delay,opt_delay,poa,status");
  for (std::size_t i = 1; i + 1 < lines.size(); ++i) {
    const auto cells = split(lines[i], ',');
    REQUIRE(cells.size() == 8);
    CHECK(cells[7] == "ok");
  }
  // Per-(n, criterion) fractions form a distribution over the two paths.
  for (int n = 2; n <= 4; ++n) {
    double sum = 0.0;
    for (std::size_t i = 1; i + 1 < lines.size(); ++i) {
      const auto cells = split(lines[i], ',');
      if (cells[0] == std::to_string(n)) sum += std::stod(cells[3]);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("sweep reports the worst equilibrium, matching the anarchy ratio") {
  SweepCommand cmd;
  cmd.scenario = "pigou";
  cmd.criteria = {"nash"};
  cmd.n_min = 10;
  cmd.n_max = 10;
  const auto r = run_sweep(cmd);
  REQUIRE(r.exit == 0);
  const auto lines = split(r.out, '\n');
  REQUIRE(lines.size() >= 3);
  CHECK(lines[1] == "10,nash,1,1,1,0.75,1.33333,ok");
  CHECK(lines[2] == "10,nash,2,0,1,0.75,1.33333,ok");
}

TEST_CASE("sweep covers the detour network at the documented ratio") {
  SweepCommand cmd;
  cmd.scenario = "braess";
  cmd.criteria = {"nash"};
  cmd.n_min = 2;
  cmd.n_max = 3;
  const auto r = run_sweep(cmd);
  REQUIRE(r.exit == 0);
  const auto lines = split(r.out, '\n');
  REQUIRE(lines.size() >= 8);  // header + 2 player counts x 3 paths + tail
  for (std::size_t i = 1; i + 1 < lines.size(); ++i) {
    const auto cells = split(lines[i], ',');
    REQUIRE(cells.size() == 8);
    CHECK(cells[4] == "2");  // the all-detour profile is always worst
    const double poa = std::stod(cells[6]);
    const double opt = std::stod(cells[5]);
    // Both sides round-trip through 6 significant digits.
    CHECK(poa == doctest::Approx(2.0 / opt).epsilon(3e-5));
  }
}

TEST_CASE("sweep writes CSV and SVG files") {
  SweepCommand cmd;
  cmd.scenario = "pigou";
  cmd.criteria = {"nash", "mv"};
  cmd.rho = 1.0;
  cmd.n_min = 2;
  cmd.n_max = 5;
  cmd.out_csv = temp_path("scg_sweep.csv");
  cmd.plot_svg = temp_path("scg_sweep.svg");
  const auto r = run_sweep(cmd);
  REQUIRE(r.exit == 0);
  CHECK(r.out.empty());
  const auto csv = slurp(cmd.out_csv);
  CHECK(csv.rfind("n,criterion,path,frac", 0) == 0);
  CHECK(csv.find("\r") == std::string::npos);
  const auto svg = slurp(cmd.plot_svg);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("polyline") != std::string::npos);
  CHECK(svg.find("price of anarchy") != std::string::npos);
  std::filesystem::remove(cmd.out_csv);
  std::filesystem::remove(cmd.plot_svg);
}

TEST_CASE("sweep keeps failed rows in place with the error code") {
  auto cfg = builtin_scenario("braess");
  cfg.solver.max_assignments = 2;  // below the 6 assignments of n = 2
  const auto path = write_temp("scg_capped.json", serialize_scenario(cfg));
  SweepCommand cmd;
  cmd.scenario = path;
  cmd.criteria = {"nash"};
  cmd.n_min = 2;
  cmd.n_max = 2;
  const auto r = run_sweep(cmd);
  REQUIRE(r.exit == 0);
  const auto lines = split(r.out, '\n');
  REQUIRE(lines.size() >= 2);
  CHECK(lines[1] == "2,nash,,,,,,EnumerationCap");
  std::filesystem::remove(path);
}

TEST_CASE("sweep rejects a bad player range") {
  SweepCommand cmd;
  cmd.scenario = "pigou";
  cmd.n_min = 5;
  cmd.n_max = 2;
  const auto r = run_sweep(cmd);
  CHECK(r.exit == 1);
  CHECK(r.err.find("[ValidationError]") != std::string::npos);
}

// A two-player serial-parallel network whose tail-average best responses
// cycle: every one of the ten assignments leaves some player a strictly
// profitable deviation (worst margin ~0.018, far above the tie tolerance),
// so pure-mode solving must report exit code 2.  Found by randomized search
// over two-lobe load-scaled families; parameters frozen verbatim.
static const char* const kCyclicGridScenario = R"scg({"criterion":{"alpha":0.3582317530453744,"name":"cvar"},"links":[{"family":{"components":[{"center":[0.0,0.31572561178544034],"hi":[0.0,0.5302350398515807],"lo":[0.0,0.10121618371929997],"stiffness":100.0,"weight":0.5163245491807367},{"center":[0.0,1.2582073863675955],"hi":[0.0,1.472716814433736],"lo":[0.0,1.0436979583014552],"stiffness":100.0,"weight":0.48367545081926333}],"kind":"affine"},"head":1,"id":1,"tail":0},{"family":{"components":[{"center":[0.0,1.0156918646870434],"hi":[0.0,1.30969539144755],"lo":[0.0,0.721688337926537],"stiffness":100.0,"weight":0.2494740391099359},{"center":[0.0,2.254484557788258],"hi":[0.0,2.5484880845487643],"lo":[0.0,1.9604810310277516],"stiffness":100.0,"weight":0.7505259608900641}],"kind":"affine"},"head":1,"id":2,"tail":0},{"family":{"components":[{"center":[0.0,1.1080679048378186],"hi":[0.0,1.4499851235261911],"lo":[0.0,0.766150686149446],"stiffness":100.0,"weight":0.6481062124754527},{"center":[0.0,3.0771898858518867],"hi":[0.0,3.4191071045402595],"lo":[0.0,2.735272667163514],"stiffness":100.0,"weight":0.35189378752454725}],"kind":"affine"},"head":2,"id":3,"tail":1},{"family":{"components":[{"center":[0.0,0.6741695428747767],"hi":[0.0,0.901850624117748],"lo":[0.0,0.44648846163180544],"stiffness":100.0,"weight":0.4240085454427194},{"center":[0.0,1.2022929961421684],"hi":[0.0,1.4299740773851397],"lo":[0.0,0.9746119148991972],"stiffness":100.0,"weight":0.5759914545572806}],"kind":"affine"},"head":2,"id":4,"tail":1}],"name":"cyclic-grid","nodes":[0,1,2],"pairs":[{"dest":2,"n":2,"source":0}],"schema":1,"solver":{"grid_step":0.001,"max_assignments":1000000,"max_players_mixed":2,"replications":1000000,"seed":24301}})scg";

TEST_CASE("pure mode exits 2 when best responses cycle") {
  const auto path = write_temp("scg_cyclic.json", kCyclicGridScenario);
  SolveCommand cmd;
  cmd.scenario = path;
  cmd.mode = "pure";
  const auto r = run_solve(cmd);
  CHECK(r.exit == 2);
  CHECK(r.out.find("no pure equilibrium found") != std::string::npos);
  CHECK(r.err.empty());

  // The scenario document itself round-trips like any other.
  const auto cfg = load_scenario(path);
  CHECK(cfg.criterion.kind == CriterionKind::kCvar);
  const auto back = parse_scenario(serialize_scenario(cfg), "doc");
  CHECK(back.game == cfg.game);
  CHECK(back.criterion == cfg.criterion);
  std::filesystem::remove(path);
}
