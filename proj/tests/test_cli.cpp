#include "support.hpp"

#include "folharm/config.hpp"
#include "folharm/errors.hpp"
#include "folharm/io.hpp"
#include "folharm/runner.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace testing;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("folharm_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str(const std::string& rel = "") const { return (path / rel).string(); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string write_config(const TempDir& dir, const json& doc, const std::string& name = "config.json") {
  std::ofstream(dir.path / name) << doc.dump(2);
  return dir.str(name);
}

struct Run {
  int code = 0;
  std::string out, err;
};

Run run(const std::string& command, const std::string& config, std::optional<std::string> out_dir,
        std::vector<std::string> checks = {}) {
  CliOptions o;
  o.command = command;
  o.config_path = config;
  o.out_dir = std::move(out_dir);
  o.checks = std::move(checks);
  std::ostringstream out, err;
  Run r;
  r.code = run_command(o, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

json circle_flow_config() {
  return json::parse(R"({
    "source": {"kind": "flat_torus", "periods": ["2pi"]},
    "resolutions": [32],
    "map": {"family": "sine_perturbation", "winding": [[1]],
            "modes": [{"component": 0, "amplitude": 0.5, "k": [1]}]},
    "flow": {"tension_tol": 1e-6}
  })");
}

json lemma_config() {
  return json::parse(R"({
    "source": {"kind": "flat_torus", "periods": ["2pi"]},
    "foliation": {"leaf_dimension": 1, "profile": {"name": "cosine", "offset": 2, "amplitude": 1}},
    "resolutions": [64],
    "verify": [{"name": "lemma-volume"}]
  })");
}

// Field plus message of the ConfigError raised for `doc`.
std::string config_error_field(const json& doc) {
  try {
    parse_config(doc);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "<accepted>";
}

}  // namespace

TEST_CASE("config parsing accepts pi multiples") {
  const auto cfg = parse_config(json::parse(R"({"source": {"kind": "flat_torus", "periods": ["2pi", "pi", "0.5pi", 3]}})"));
  REQUIRE(cfg.source.periods.size() == 4);
  CHECK(cfg.source.periods[0] == doctest::Approx(2 * kPi).epsilon(1e-15));
  CHECK(cfg.source.periods[1] == doctest::Approx(kPi).epsilon(1e-15));
  CHECK(cfg.source.periods[2] == doctest::Approx(kPi / 2).epsilon(1e-15));
  CHECK(cfg.source.periods[3] == 3.0);
  CHECK(cfg.source.dimension == 4);
  CHECK(cfg.resolutions == std::vector<int>{64});
}

TEST_CASE("config parsing rejects unknown keys and names their path") {
  CHECK(config_error_field(json::parse(R"({"source": {"kind": "flat_torus", "periods": [1]}, "colour": 1})"))
            .find("colour") != std::string::npos);
  CHECK(config_error_field(json::parse(R"({"source": {"kind": "flat_torus", "perods": [1]}})")).find("perods") !=
        std::string::npos);
  CHECK(config_error_field(json::parse(
            R"({"source": {"kind": "flat_torus", "periods": [1]}, "flow": {"dt": 0.1, "tolerance": 1}})"))
            .find("tolerance") != std::string::npos);
  CHECK(config_error_field(json::parse(
            R"({"source": {"kind": "flat_torus", "periods": [1]}, "verify": [{"name": "lemma-volume", "mode": "x"}]})")) !=
        "<accepted>");
}

TEST_CASE("config parsing rejects bad values") {
  CHECK(config_error_field(json::parse(R"({"source": {"kind": "klein_bottle"}})")) != "<accepted>");
  CHECK(config_error_field(json::parse(R"({"source": {"kind": "round_sphere", "radius": "big"}})")) != "<accepted>");
  CHECK(config_error_field(json::parse(R"({"source": {"kind": "flat_torus", "periods": [1]}, "resolutions": []})")) !=
        "<accepted>");
  CHECK(config_error_field(json::parse(
            R"({"source": {"kind": "flat_torus", "periods": [1]}, "verify": [{"name": "first-variation"}]})")) !=
        "<accepted>");
  CHECK(config_error_field(json::parse(
            R"({"source": {"kind": "flat_torus", "periods": [1]}, "verify": [{"name": "nonsense"}]})")) != "<accepted>");
}

TEST_CASE("format_double round-trips and json_number maps non-finite to null") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) CHECK(std::stod(format_double(v)) == v);
  CHECK(json_number(std::nan("")).is_null());
  CHECK(json_number(std::numeric_limits<double>::infinity()).is_null());
  CHECK(json_number(2.0).get<double>() == 2.0);
  RigidityDiagnostics d;
  d.bound_value = std::numeric_limits<double>::infinity();
  d.verdict = Verdict::TotallyGeodesic;
  const json j = to_json(d);
  CHECK(j["bound_value"].is_null());
  CHECK(j["verdict"] == "totally_geodesic");
}

TEST_CASE("map CSV round trip is bit-exact") {
  const auto t = torus2();
  const auto s2 = sphere();
  const auto grid = GridChart::uniform(t, 16);
  Point offset(2);
  offset << kPi / 2, 0.1;
  Eigen::MatrixXd linear = Eigen::MatrixXd::Zero(2, 2);
  linear(1, 0) = 1.0;
  const auto map = sample_map(grid, AnalyticMap("m", t, s2, offset, linear,
                                                {{0, 0.3, {0.0, 1.0}, {0.0}, false}, {1, 1.0 / 3, {1.0, 1.0}, {0.3}, false}}));
  std::stringstream csv;
  write_map_csv(csv, map);
  const std::string text = csv.str();

  std::istringstream in1(text);
  const auto inferred = read_map_csv(in1, grid, s2);
  CHECK(inferred.raw() == map.raw());
  CHECK(inferred.winding() == map.winding());

  std::istringstream in2(text);
  const auto given = read_map_csv(in2, grid, s2, map.winding());
  CHECK(given.raw() == map.raw());

  std::stringstream again;
  write_map_csv(again, inferred);
  CHECK(again.str() == text);
}

TEST_CASE("map CSV on a different grid is rejected") {
  const auto c = circle();
  const auto map = sample_map(GridChart::uniform(c, 16), *circle_sine(0.1));
  std::stringstream csv;
  write_map_csv(csv, map);
  std::istringstream in(csv.str());
  CHECK_THROWS(read_map_csv(in, GridChart::uniform(c, 32), c));
}

TEST_CASE("energy subcommand on the identity of T^2") {
  TempDir dir;
  const auto cfg = write_config(dir, json::parse(R"({
    "source": {"kind": "flat_torus", "periods": ["2pi", "2pi"]}, "resolutions": [32], "map": {"family": "identity"}})"));
  const Run r = run("energy", cfg, dir.str("out"));
  CHECK(r.code == kExitOk);
  const json j = json::parse(slurp(dir.path / "out/energy.json"));
  CHECK(std::abs(j["energy"].get<double>() - 4 * kPi * kPi) < 1e-8);
  CHECK(r.out.find("E_B = ") != std::string::npos);
}

TEST_CASE("tension subcommand writes field and summary") {
  TempDir dir;
  const Run r = run("tension", write_config(dir, circle_flow_config()), dir.str("out"));
  CHECK(r.code == kExitOk);
  CHECK(fs::exists(dir.path / "out/tension.csv"));
  const json j = json::parse(slurp(dir.path / "out/tension.json"));
  CHECK(j.contains("max_tension"));
}

TEST_CASE("flow subcommand converges with a monotone trace") {
  TempDir dir;
  const Run r = run("flow", write_config(dir, circle_flow_config()), dir.str("out"));
  CHECK(r.code == kExitOk);
  const json j = json::parse(slurp(dir.path / "out/flow.json"));
  CHECK(j["termination"] == "converged");
  CHECK(j["energy_monotone"] == true);
  CHECK(std::abs(j["final_energy"].get<double>() - kPi) < 1e-9);
  CHECK(fs::exists(dir.path / "out/trace.csv"));
  CHECK(fs::exists(dir.path / "out/final_map.csv"));
}

TEST_CASE("verify subcommand: lemma volume passes") {
  TempDir dir;
  const Run r = run("verify", write_config(dir, lemma_config()), dir.str("out"), {"lemma-volume"});
  CHECK(r.code == kExitOk);
  const json j = json::parse(slurp(dir.path / "out/reports/lemma-volume.json"));
  CHECK(j["passed"] == true);
  CHECK(j["residuals"][0].get<double>() <= 1e-12);
  CHECK(r.out.find("PASS") != std::string::npos);
  CHECK(fs::exists(dir.path / "out/summary.csv"));
}

TEST_CASE("verify subcommand: refinement passes when residuals sit at rounding level") {
  TempDir dir;
  const auto cfg = write_config(dir, json::parse(R"({
    "source": {"kind": "flat_torus", "periods": ["2pi"]},
    "target": {"kind": "round_sphere", "radius": 1, "cap_angle": 0.3},
    "foliation": {"leaf_dimension": 1, "profile": {"name": "cosine", "offset": 2, "amplitude": 1}},
    "resolutions": [32, 64, 128],
    "map": {"family": "latitude_circle", "theta0": "0.25pi"},
    "verify": [{"name": "weitzenbock", "mode": "general"}]
  })"));
  const Run r = run("verify", cfg, dir.str("out"));
  CHECK(r.code == kExitOk);
  const json j = json::parse(slurp(dir.path / "out/reports/weitzenbock-general.json"));
  CHECK(j["passed"] == true);
  CHECK(j["residuals"][2].get<double>() <= 1e-9);
}

TEST_CASE("exit codes") {
  TempDir dir;
  SUBCASE("failing check") {
    json doc = json::parse(R"({
      "source": {"kind": "flat_torus", "periods": ["2pi"]}, "resolutions": [32],
      "map": {"family": "sine_perturbation", "winding": [[1]], "modes": [{"component": 0, "amplitude": 0.3, "k": [1]}]},
      "verify": [{"name": "weitzenbock", "mode": "harmonic", "tolerance": 1e-14, "refinement": false}]})");
    CHECK(run("verify", write_config(dir, doc), dir.str("out")).code == kExitCheckFailed);
  }
  SUBCASE("schema violation") {
    json doc = lemma_config();
    doc["foliation"]["profile"]["ofset"] = 2;
    const Run r = run("verify", write_config(dir, doc), dir.str("out"));
    CHECK(r.code == kExitConfigError);
    CHECK(r.err.find("ofset") != std::string::npos);
  }
  SUBCASE("missing config file") {
    CHECK(run("energy", dir.str("absent.json"), dir.str("out")).code == kExitConfigError);
  }
  SUBCASE("unknown check name") {
    CHECK(run("verify", write_config(dir, lemma_config()), dir.str("out"), {"no-such-check"}).code == kExitConfigError);
  }
  SUBCASE("runtime failure") {
    // A variation that moves the fixed ends of an interval.
    json doc = json::parse(R"({
      "source": {"kind": "flat_torus", "periods": ["pi"], "boundaries": ["fixed"]}, "resolutions": [33],
      "map": {"family": "identity"},
      "verify": [{"name": "first-variation", "refinement": false,
                  "variation": {"modes": [{"component": 0, "amplitude": 1, "k": [0], "phase": ["0.5pi"]}]}}]})");
    CHECK(run("verify", write_config(dir, doc), dir.str("out")).code == kExitRuntimeError);
  }
}

TEST_CASE("output directory precedence") {
  TempDir dir;
  json doc = lemma_config();
  doc["output_dir"] = dir.str("from_config");
  const auto cfg = write_config(dir, doc);

  ::unsetenv("FOLHARM_OUT");
  CHECK(resolve_output_dir(std::nullopt, "c") == "c");
  CHECK(run("verify", cfg, std::nullopt).code == kExitOk);
  CHECK(fs::exists(dir.path / "from_config/summary.csv"));

  ::setenv("FOLHARM_OUT", dir.str("from_env").c_str(), 1);
  CHECK(run("verify", cfg, std::nullopt).code == kExitOk);
  CHECK(fs::exists(dir.path / "from_env/summary.csv"));
  CHECK(run("verify", cfg, dir.str("from_flag")).code == kExitOk);
  CHECK(fs::exists(dir.path / "from_flag/summary.csv"));
  CHECK(resolve_output_dir(std::string("f"), "c") == "f");
  ::unsetenv("FOLHARM_OUT");
}

TEST_CASE("runs are deterministic") {
  TempDir dir;
  const auto cfg = write_config(dir, circle_flow_config());
  REQUIRE(run("flow", cfg, dir.str("a")).code == kExitOk);
  REQUIRE(run("flow", cfg, dir.str("b")).code == kExitOk);
  for (const char* f : {"trace.csv", "final_map.csv", "flow.json"})
    CHECK(slurp(dir.path / "a" / f) == slurp(dir.path / "b" / f));

  json doc = json::parse(R"({
    "source": {"kind": "round_sphere"}, "target": {"kind": "hyperbolic_patch"},
    "resolutions": [16], "seed": 5, "map": {"family": "identity"}})");
  doc.erase("map");
  const auto report_cfg = write_config(dir, doc, "report.json");
  REQUIRE(run("report", report_cfg, dir.str("r1")).code == kExitOk);
  REQUIRE(run("report", report_cfg, dir.str("r2")).code == kExitOk);
  CHECK(slurp(dir.path / "r1/geometry_report.json") == slurp(dir.path / "r2/geometry_report.json"));
}

TEST_CASE("csv maps load relative to the config file") {
  TempDir dir;
  const auto c = circle();
  const auto map = sample_map(GridChart::uniform(c, 32), *circle_sine(0.2));
  std::ofstream(dir.path / "start.csv") << [&] {
    std::ostringstream s;
    write_map_csv(s, map);
    return s.str();
  }();
  json doc = json::parse(R"({
    "source": {"kind": "flat_torus", "periods": ["2pi"]}, "resolutions": [32],
    "map": {"family": "csv", "path": "start.csv"}})");
  const Run r = run("energy", write_config(dir, doc), dir.str("out"));
  CHECK(r.code == kExitOk);
  const json j = json::parse(slurp(dir.path / "out/energy.json"));
  CHECK(j["energy"].get<double>() == transversal_energy(map, point_foliation(map.source_ptr())));
}
