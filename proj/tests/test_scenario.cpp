#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cstring>

#include "hardylab/io.hpp"
#include "hardylab/parallel.hpp"
#include "hardylab/scenario.hpp"
#include "oracles.hpp"

using namespace hardylab;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag)
      : path(fs::temp_directory_path() / ("hardylab-" + tag + "-" + std::to_string(::getpid()))) {
    fs::remove_all(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

RunManifest run_in(const ScenarioConfig& c, const fs::path& dir) {
  RunOptions o;
  o.output = dir;
  return run_scenario(c, o);
}

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("config round trip is a fixed point") {
  for (const auto& name : builtin_names()) {
    const ScenarioConfig c = builtin_scenario(name);
    const std::string text = serialize_config(c);
    const ScenarioConfig back = parse_config(text);
    CHECK(back == c);
    CHECK(serialize_config(back) == text);
    CHECK(config_hash(back) == config_hash(c));
  }
  // expression entries survive too
  ScenarioConfig c = builtin_scenario("system-n2");
  c.potential.A = {{"cos(x1)", 0.5}, {0.5, "-x1^2/10"}};
  c.evolution.method = "strang";
  CHECK(parse_config(serialize_config(c)) == c);
}

TEST_CASE("config errors name the field") {
  CHECK(config_error(R"({"name": "x", "gird": {}})").find("gird") != std::string::npos);
  CHECK(config_error(R"({"grid": {"points": 100}})").find("grid.points") != std::string::npos);
  CHECK(config_error(R"({"grid": {"points": 64, "colour": 1}})").find("grid.colour") != std::string::npos);
  CHECK(config_error(R"({"evolution": {"method": "rk4"}})").find("evolution.method") != std::string::npos);
  CHECK(config_error(R"({"initial": {"family": "lorentzian"}})").find("initial.family") != std::string::npos);
  CHECK(config_error(R"({"potential": {"A": [["sin(("]]}})").find("potential.A") != std::string::npos);
  const std::string syntax = config_error("{\n  \"name\": \"x\",\n  \"grid\": {\n    \"points\": ,\n  }\n}\n");
  CHECK(syntax.find("line 4") != std::string::npos);
  CHECK(syntax.find("column") != std::string::npos);
  CHECK_THROWS_AS(load_config("/nonexistent/hardylab.json"), ConfigError);
}

TEST_CASE("dotted overrides") {
  ScenarioConfig c = builtin_scenario("free-gaussian-sharp");
  set_config_value(c, "grid.points", "256");
  set_config_value(c, "weights.alpha", "1.5");
  set_config_value(c, "initial.family", "gaussian");
  CHECK(c.grid.points == 256);
  CHECK(c.alpha == 1.5);
  CHECK(c.initial.family == "gaussian");
  CHECK_THROWS_AS(set_config_value(c, "grid.points", "100"), ConfigError);
  CHECK_THROWS_AS(set_config_value(c, "grid.nope", "1"), ConfigError);
}

TEST_CASE("preconditions are checked before the run") {
  ScenarioConfig c = builtin_scenario("system-n2");
  c.potential.A = {{0.0, 1.0}, {2.0, 0.0}};
  CHECK_THROWS_AS(build_setup(c), ConfigError);
  ScenarioConfig wide = builtin_scenario("free-gaussian-sharp");
  wide.initial.family = "gaussian";
  wide.initial.params = {{"c", 0.01}};
  CHECK_THROWS_AS(build_setup(wide), ConfigError);  // not resolved on the box
  ScenarioConfig nl = builtin_scenario("nonlinear-pair");
  nl.evolution.method = "exact_multiplier";
  CHECK_THROWS_AS(build_setup(nl), ConfigError);
}

TEST_CASE("free-gaussian-sharp: manifest, hardy product, convexity") {
  TempDir tmp("sharp");
  const RunManifest m = run_in(builtin_scenario("free-gaussian-sharp"), tmp.path);
  CHECK(m.pass());
  CHECK(m.tool_version == kToolVersion);
  // every file in the directory is listed, and nothing else
  CHECK(list_tree(tmp.path) == m.files);
  const json rep = json::parse(read_file(tmp.path / "report.json"));
  CHECK(rep["diagnostics"]["hardy"]["endpoint_product"].get<double>() == doctest::Approx(4.0).epsilon(2e-2));
  CHECK(rep["diagnostics"]["convexity"]["pass"].get<bool>());
  const json man = json::parse(read_file(tmp.path / "manifest.json"));
  CHECK(man["config_hash"] == m.config_hash);
  CHECK(!man.contains("timings"));
  // alpha beta = 4 is outside the admissible region, the run still completes
  CHECK(std::find(m.notes.begin(), m.notes.end(), "theorem1: outside uniqueness admissibility (alpha beta < 2)") !=
        m.notes.end());
  CHECK(config_hash(load_config(tmp.path / "config.json")) == m.config_hash);
}

TEST_CASE("identical config and seed give identical bytes") {
  TempDir a("det-a"), b("det-b");
  ScenarioConfig c = builtin_scenario("carleman-probes");
  c.carleman.probes = 2;
  c.diagnostics.snapshots = true;
  run_in(c, a.path);
  run_in(c, b.path);
  const TreeDiff d = compare_trees(a.path, b.path);
  CHECK(d.identical());
  CHECK(fs::exists(a.path / "u_final.snap"));
}

TEST_CASE("rerunning in a directory drops files from the earlier run") {
  TempDir tmp("stale");
  ScenarioConfig c = builtin_scenario("free-gaussian-sharp");
  run_in(c, tmp.path);
  CHECK(fs::exists(tmp.path / "hardy.csv"));
  c.diagnostics.hardy = false;
  const RunManifest m = run_in(c, tmp.path);
  CHECK(!fs::exists(tmp.path / "hardy.csv"));
  CHECK(list_tree(tmp.path) == m.files);
}

TEST_CASE("zero data: degenerate diagnostics pass, norm trace vanishes") {
  TempDir tmp("zero");
  const RunManifest m = run_in(builtin_scenario("zero-data"), tmp.path);
  CHECK(m.pass());
  CHECK(!m.summary.empty());
  const json rep = json::parse(read_file(tmp.path / "report.json"));
  CHECK(rep["degenerate"].get<bool>());
  for (const auto& [name, d] : rep["diagnostics"].items()) {
    CHECK(d["pass"].get<bool>());
    CHECK(d["degenerate"].get<bool>());
  }
  for (const auto& row : rep["norms"]["rows"]) CHECK(row[1].get<double>() == 0.0);
}

TEST_CASE("snapshots: little-endian layout and exact round trip") {
  const Grid g = Grid::make(2, 8, 3.0, 2);
  const Field f = Field::sample(
      g, [](const Point& x, int k) { return cplx(x[0] + 0.1 * k, -x[1] * x[1] + 1e-300); }, 0.375);
  const std::string bytes = encode_snapshot(f);
  REQUIRE(bytes.size() == 8 + 16 + 16 + f.values().size() * 16);
  CHECK(bytes.substr(0, 8) == "HLSNAP01");
  auto u32 = [&](std::size_t off) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(bytes[off + i]);
    return v;
  };
  CHECK(u32(8) == 2);
  CHECK(u32(12) == 8);
  CHECK(u32(16) == 2);
  CHECK(u32(20) == kSnapshotComplex128);
  // 0.375 = 0x3FD8000000000000, least significant byte first
  CHECK(static_cast<unsigned char>(bytes[39]) == 0x3F);
  CHECK(static_cast<unsigned char>(bytes[38]) == 0xD8);
  const Field back = decode_snapshot(bytes);
  CHECK(back.grid() == g);
  CHECK(back.time() == 0.375);
  CHECK(std::memcmp(back.values().data(), f.values().data(), f.values().size() * sizeof(cplx)) == 0);
  CHECK_THROWS(decode_snapshot(bytes.substr(0, 30)));
  std::string bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS(decode_snapshot(bad));

  // file family reads it back as initial data
  TempDir tmp("snap");
  write_snapshot(tmp.path / "u0.snap", f);
  InitialConfig ic;
  ic.family = "file";
  ic.path = (tmp.path / "u0.snap").string();
  const Field u0 = build_initial(ic, g, WeightSpec{}, 1.0, 1);
  CHECK(std::memcmp(u0.values().data(), f.values().data(), f.values().size() * sizeof(cplx)) == 0);
  CHECK_THROWS_AS(build_initial(ic, Grid::make(2, 16, 3.0, 2), WeightSpec{}, 1.0, 1), ConfigError);
}

TEST_CASE("random_smooth is seeded") {
  const Grid g = Grid::make(1, 256, 16.0, 1);
  InitialConfig ic;
  ic.family = "random_smooth";
  const Field a = build_initial(ic, g, WeightSpec{}, 1.0, 7), b = build_initial(ic, g, WeightSpec{}, 1.0, 7),
              c = build_initial(ic, g, WeightSpec{}, 1.0, 8);
  CHECK(a.values() == b.values());
  CHECK(a.values() != c.values());
}

TEST_CASE("frontier sweep") {
  ScenarioConfig base;
  base.grid = {1, 512, 16.0, 1};
  base.evolution = {0.0, 1.0, 1.0, 64, "exact_multiplier"};
  InitialConfig gauss;
  gauss.family = "gaussian";
  gauss.params = {{"c", 1.0}};
  InitialConfig zero;
  zero.family = "zero";
  const std::vector<double> grid{0.5, 1.0, 2.0, 4.0, 8.0};
  const FrontierReport r = theorem1_falsification_sweep(base, grid, grid, {gauss, zero});
  CHECK(r.rows.size() == 50);
  CHECK(r.candidates == 0);
  CHECK(r.sharp_survives);
  CHECK(r.sharp_product == doctest::Approx(4.0).epsilon(2e-2));
  CHECK(r.pass());
  for (const auto& row : r.rows) {
    CHECK(row.admissible == (row.alpha * row.beta < 2.0));
    if (row.family == "zero") {
      CHECK(row.solution_norm == 0.0);
      CHECK(!row.candidate);
    }
    // e^{-x^2} at t = 0: |e^{x^2/b^2} u0| diverges for b <= 1
    if (row.family == "gaussian" && row.beta <= 1.0) CHECK(!row.finite0);
    if (row.family == "gaussian" && row.beta >= 2.0) CHECK(row.finite0);
  }
  // closed-form endpoint norm of e^{-x^2}: |e^{x^2/4} e^{-x^2}|^2 = sqrt(pi / (2 * 3/4))
  for (const auto& row : r.rows)
    if (row.family == "gaussian" && row.beta == 2.0)
      CHECK(row.log_norm0 == doctest::Approx(0.25 * std::log(oracle::pi / 1.5)).epsilon(1e-10));
  CHECK(r.table().size() == 50);
}

TEST_CASE("heat flow at t = 1") {
  const std::vector<double> deltas{0.5, 0.75, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 6.0, 8.0};
  SUBCASE("box") {
    const auto r = theorem4_parabolic_scenario(builtin_scenario("heat-box"), deltas);
    CHECK(r.solution_gap <= 1e-10);
    CHECK(r.oracle_gap <= 1e-6);
    CHECK(r.consistent);
    CHECK(!r.below_one_finite);
    CHECK(r.fitted_delta > 1.9);
    CHECK(r.fitted_delta < 2.4);
    CHECK(r.pass());
  }
  SUBCASE("box in 2D") {
    ScenarioConfig c = builtin_scenario("heat-box");
    c.grid = {2, 128, 16.0, 1};
    const auto r = theorem4_parabolic_scenario(c, deltas);
    CHECK(r.solution_gap <= 1e-10);
    CHECK(r.oracle_gap <= 1e-6);
    CHECK(!r.below_one_finite);
    // corner weights e^{|x|^2/8} amplify roundoff; only delta >= 6 resolves on this box
    for (std::size_t i = 0; i < deltas.size(); ++i) {
      if (deltas[i] <= 0.9 * r.fitted_delta) CHECK(!r.finite[i]);
      if (deltas[i] >= 6.0) CHECK(r.finite[i]);
    }
  }
  SUBCASE("wide Gaussian") {
    const auto r = theorem4_parabolic_scenario(builtin_scenario("heat-gaussian"), deltas);
    CHECK(r.oracle_gap <= 1e-6);
    CHECK(r.solution_gap <= 1e-10);
    // c = 1/4 becomes c / (1 + 4c) = 1/8: threshold delta = sqrt(8)
    CHECK(r.fitted_delta == doctest::Approx(std::sqrt(8.0)).epsilon(1e-3));
    CHECK(r.pass());
  }
  SUBCASE("zero data") {
    ScenarioConfig c = builtin_scenario("heat-box");
    c.initial.family = "zero";
    c.initial.params.clear();
    const auto r = theorem4_parabolic_scenario(c, deltas);
    CHECK(r.degenerate);
    for (std::size_t i = 0; i < deltas.size(); ++i) {
      CHECK(r.finite[i]);
      CHECK(r.log_norms[i] == -std::numeric_limits<double>::infinity());
    }
  }
  SUBCASE("a = 0 refused") {
    ScenarioConfig c = builtin_scenario("heat-box");
    c.evolution.a = 0.0;
    c.evolution.b = 1.0;
    CHECK_THROWS_AS(theorem4_parabolic_scenario(c, deltas), InvalidArgument);
  }
}

TEST_CASE("coupled system") {
  const ScenarioConfig c = builtin_scenario("system-n2");
  const SystemReport r = system_scenario_n(c);
  CHECK(r.oracle_gap <= 1e-6);
  CHECK(r.norm_drift <= 1e-8);
  CHECK(r.exchange);
  const double g = r.total_norm.front();
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    CHECK(r.component_norms[0][i] == doctest::Approx(std::abs(std::cos(r.times[i])) * g).epsilon(1e-8));
    CHECK(r.component_norms[1][i] == doctest::Approx(std::abs(std::sin(r.times[i])) * g).epsilon(1e-8));
  }

  ScenarioConfig asym = c;
  asym.potential.A = {{0.0, 1.0}, {0.5, 0.0}};
  CHECK_THROWS_AS(system_scenario_n(asym), ConfigError);

  // one component, A = 0: same numbers as the scalar run
  ScenarioConfig one = c;
  one.grid.components = 1;
  one.potential.A = {{0.0}};
  ScenarioConfig scalar = one;
  scalar.potential.A.clear();
  const SystemReport r1 = system_scenario_n(one), rs = system_scenario_n(scalar);
  CHECK(r1.total_norm == rs.total_norm);
  CHECK(!r1.exchange);
}

TEST_CASE("two nonlinear solutions") {
  ScenarioConfig c = builtin_scenario("nonlinear-pair");
  SUBCASE("identical data") {
    const auto r = nonlinear_difference_scenario(c, c.initial);
    CHECK(r.max_w <= 1e-8);
  }
  SUBCASE("lambda = 0 is linear in w") {
    c.nonlinearity->lambda = 0.0;
    InitialConfig second = c.initial;
    second.params["amplitude"] = 0.7;
    const auto r = nonlinear_difference_scenario(c, second);
    for (double gap : r.linear_gap) CHECK(gap <= 1e-8);
    CHECK(r.w_norm.front() > 0.1);
  }
  SUBCASE("small perturbation") {
    InitialConfig second = c.initial;
    second.params["amplitude"] = 1.01;
    const auto r = nonlinear_difference_scenario(c, second);
    CHECK(std::isfinite(r.growth_rate));
    CHECK(r.max_w > 0.0);
    CHECK(r.finite0);
    CHECK(r.table().size() == r.times.size());
  }
  SUBCASE("no nonlinearity") {
    c.nonlinearity.reset();
    CHECK_THROWS_AS(nonlinear_difference_scenario(c, c.initial), ConfigError);
  }
}

TEST_CASE("worker pool") {
  std::vector<int> out(100, 0);
  parallel_for(out.size(), 4, [&](std::size_t i) { out[i] = int(i) * 2; });
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == int(i) * 2);
  try {
    parallel_for(50, 3, [](std::size_t i) {
      if (i == 17 || i == 31) throw std::runtime_error(std::to_string(i));
    });
    CHECK(false);
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) == "17");
  }
  CHECK(worker_count(3) == 3);
  ::setenv("HARDYLAB_WORKERS", "5", 1);
  CHECK(worker_count() == 5);
  ::unsetenv("HARDYLAB_WORKERS");
}

TEST_CASE("stage annotation of module errors") {
  ScenarioConfig c = builtin_scenario("carleman-probes");
  c.carleman.time_samples = 11;  // too coarse, the Carleman module refuses
  TempDir tmp("stage");
  try {
    run_in(c, tmp.path);
    CHECK(false);
  } catch (const ScenarioError& e) {
    CHECK(std::string(e.what()).find("carleman") != std::string::npos);
  }
}
