#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fracfreq/harness.hpp"
#include "fracfreq/io.hpp"

using namespace fracfreq;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fracfreq_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ScenarioConfig linear_config() {
  ScenarioConfig c;
  c.name = "linear";
  c.kind = ScenarioKind::AnalyticLinear;
  c.s = 0.5;
  c.radii = {0.1, 0.8, 10};
  return c;
}

}  // namespace

TEST_CASE("real numbers round-trip through text") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.05}) {
    double back = 0.0;
    std::istringstream(format_real(v)) >> back;
    CHECK(back == v);
  }
  CHECK(format_real(0.05) == "0.05");
}

TEST_CASE("grid function csv round-trip is exact") {
  for (const SpatialGrid& g : {SpatialGrid::line(-1.0, 1.0, 37), SpatialGrid({Axis{-1.0, 2.0, 11}, Axis{-0.5, 0.5, 7}})}) {
    Eigen::VectorXd v(g.size());
    for (int i = 0; i < g.size(); ++i) v[i] = std::sin(1.7 * i + 0.3) / 3.0;
    const GridFunction u(g, v);
    const GridFunction back = parse_grid_function_csv(grid_function_csv(u));
    CHECK(back.grid.dimension() == g.dimension());
    CHECK(back.grid.size() == g.size());
    CHECK(back.values == u.values);
  }
  CHECK_THROWS(parse_grid_function_csv("x,value\n0.5,1\n"));
}

TEST_CASE("extension field csv round-trip is exact") {
  const SpatialGrid g = SpatialGrid::line(-1.0, 1.0, 11);
  ExtensionField f;
  f.grid = g;
  f.y = YGrid(2.0, 6, 2.0).nodes();
  f.s = 0.3;
  f.values.resize(f.levels(), g.size());
  for (int j = 0; j < f.levels(); ++j)
    for (int i = 0; i < g.size(); ++i) f.values(j, i) = std::exp(-f.y[j]) * std::cos(0.7 * i) / 7.0;
  const ExtensionField back = parse_extension_field_csv(extension_field_csv(f));
  CHECK(back.y == f.y);
  CHECK(back.values == f.values);
  CHECK(back.s == f.s);
  CHECK(back.provenance == f.provenance);
}

TEST_CASE("atomic writes create parents and replace contents") {
  const fs::path dir = scratch("atomic");
  const fs::path p = dir / "a" / "b" / "file.txt";
  write_atomic(p, "first");
  write_atomic(p, "second");
  CHECK(read_text(p) == "second");
  int entries = 0;
  for (const auto& e : fs::directory_iterator(p.parent_path())) entries += e.is_regular_file();
  CHECK(entries == 1);
}

TEST_CASE("config parsing") {
  const ScenarioConfig c = parse_config(to_json(linear_config()));
  CHECK(to_json(c) == to_json(linear_config()));

  auto j = to_json(linear_config());
  j["s"] = 1.0;
  CHECK_THROWS_AS(parse_config(j), std::invalid_argument);

  j = to_json(linear_config());
  j["unexpected"] = 3;
  CHECK_THROWS_AS(parse_config(j), std::invalid_argument);

  j = to_json(linear_config());
  j["grid"]["spacing"] = 0.1;
  CHECK_THROWS_AS(parse_config(j), std::invalid_argument);

  j = to_json(linear_config());
  j["coefficient"]["name"] = "id_plus_eps_sin";
  j["coefficient"]["epsilon"] = 0.1;
  CHECK_THROWS_AS(parse_config(j), std::invalid_argument);

  j = to_json(linear_config());
  j["kind"] = "bogus";
  CHECK_THROWS(parse_config(j));
}

TEST_CASE("linear field report") {
  const VerificationReport r = run_scenario(linear_config());
  CHECK(r.passed());
  for (const char* name : {"exact_frequency", "doubling_ratio", "closed_form_HD", "cauchy_schwarz",
                           "monotonicity", "order_monomial_x1", "order_monomial_x2"}) {
    CAPTURE(name);
    const CheckResult* c = r.find(name);
    REQUIRE(c != nullptr);
    CHECK(c->status == CheckStatus::Pass);
  }
  CHECK(r.find("exact_frequency")->value < 1e-6);
  CHECK(r.find("exact_frequency")->criterion == 4);
  CHECK(r.metrics["kind"] == "analytic:U=x");
}

TEST_CASE("scenario artifacts are deterministic") {
  const fs::path dir = scratch("determinism");
  std::vector<std::string> runs;
  for (const char* sub : {"a", "b"}) {
    ScenarioConfig c = linear_config();
    c.output = (dir / sub).string();
    run_scenario(c);
    std::string all;
    for (const char* f : {"profile.csv", "report.json", "blowup.json", "verification.json"}) {
      REQUIRE(fs::exists(dir / sub / f));
      all += read_text(dir / sub / f);
    }
    runs.push_back(all);
  }
  CHECK(runs[0] == runs[1]);
}

TEST_CASE("batch isolation") {
  const fs::path dir = scratch("batch");
  std::ostringstream log;
  CHECK(verify_all(dir / "missing", log).exit_status == 2);

  const BatchResult empty = verify_all(dir, log);
  CHECK(empty.exit_status == 0);
  CHECK(empty.reports.empty());

  {
    std::ofstream(dir / "a_broken.json") << "{ not json";
    auto j = to_json(linear_config());
    j["output"] = "";
    std::ofstream(dir / "b_linear.json") << j.dump();
  }
  const BatchResult b = verify_all(dir, log);
  REQUIRE(b.reports.size() == 2);
  CHECK(b.exit_status == 1);
  CHECK_FALSE(b.reports[0].passed());
  CHECK(b.reports[0].find("stage:config") != nullptr);
  CHECK(b.reports[1].passed());
}
