#include <doctest.h>

#include <string>
#include <vector>

#include "nullcond/experiment.hpp"
#include "properties.hpp"

using namespace nullcond;
using namespace nullcond::experiment;

namespace {

ErrorKind parse_error_kind(const std::string& text, std::vector<std::string> overrides = {}) {
  try {
    (void)parse_config(text, overrides);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::domain;
}

std::string parse_error_text(const std::string& text) {
  try {
    (void)parse_config(text);
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("config defaults") {
  const auto cfg = parse_config("scenario: sphere_map_meridian\n");
  CHECK(cfg.scenario == Scenario::sphere_map_meridian);
  CHECK(cfg.resolution == std::vector<std::size_t>{200, 400});
  CHECK(cfg.a_schedule.a0 == 100.0);
  CHECK(cfg.a_schedule.factor == 2.0);
  CHECK(cfg.a_schedule.steps == 12);
  CHECK(cfg.a_schedule.values().size() == 13);
  CHECK(cfg.R == 1.0);
  CHECK(cfg.tolerance == 0.02);
  CHECK(cfg.tilt_rule == TiltRule::cell_average);
  CHECK(cfg.seed == 0);
  CHECK(cfg.warnings.empty());
  CHECK(parse_config("scenario: gaussian_product").resolution ==
        std::vector<std::size_t>{300, 300});
}

TEST_CASE("config forms") {
  const auto nested = parse_config(
      "scenario: sphere_geodesic_equator\n"
      "resolution: 60x120\n"
      "a_schedule:\n  a0: 10\n  factor: 3\n  steps: 5\n"
      "tilt_rule: node\n");
  CHECK(nested.resolution == std::vector<std::size_t>{60, 120});
  CHECK(nested.a_schedule.a0 == 10.0);
  CHECK(nested.a_schedule.factor == 3.0);
  CHECK(nested.a_schedule.steps == 5);
  CHECK(nested.tilt_rule == TiltRule::node);

  const auto listed = parse_config("scenario: gaussian_product\nresolution: [40, 50]\n");
  CHECK(listed.resolution == std::vector<std::size_t>{40, 50});

  const std::vector<std::string> overrides{"R=2.5", "a_schedule.steps=6"};
  const auto over = parse_config("scenario: truncation_invariance\nR: 1\n", overrides);
  CHECK(over.R == 2.5);
  CHECK(over.a_schedule.steps == 6);

  const auto atoms = parse_config("scenario: finite_atoms\nresolution: 10x10\n");
  CHECK(atoms.resolution.empty());
  REQUIRE(atoms.warnings.size() == 1);
  CHECK(atoms.warnings[0].find("resolution") != std::string::npos);
}

TEST_CASE("config validation") {
  CHECK(parse_error_kind("scenario: sphere_map_meridian\na_schedule: {steps: 3}\n") ==
        ErrorKind::validation);
  CHECK(parse_error_kind("scenario: sphere_map_meridian\nfoo: 1\n") == ErrorKind::validation);
  CHECK(parse_error_kind("scenario: sphere_map_meridian\nR: 0\n") == ErrorKind::validation);
  CHECK(parse_error_kind("scenario: sphere_map_meridian\nresolution: 40x400\n") ==
        ErrorKind::validation);
  CHECK(parse_error_kind("scenario: sphere_map_meridian\ntilt_rule: spline\n") ==
        ErrorKind::validation);
  CHECK(parse_error_kind("resolution: 60x120\n") == ErrorKind::validation);
  CHECK(parse_error_kind("scenario: [1, 2\n") == ErrorKind::validation);
  CHECK(parse_error_kind("scenario: sphere_map_meridian\n", {"novalue"}) ==
        ErrorKind::validation);

  CHECK(parse_error_text("scenario: sphere_map_meridian\nfoo: 1\n").find("'foo'") !=
        std::string::npos);
  const auto unknown = parse_error_text("scenario: torus\n");
  CHECK(unknown.find("'torus'") != std::string::npos);
  for (const auto& info : scenario_catalog()) {
    CHECK(unknown.find(std::string(info.name)) != std::string::npos);
  }
}

TEST_CASE("scenario catalog") {
  CHECK(scenario_catalog().size() == 10);
  for (const auto& info : scenario_catalog()) {
    CHECK(parse_scenario(info.name) == info.id);
    CHECK(to_string(info.id) == info.name);
  }
  CHECK_FALSE(parse_scenario("nope").has_value());
  CHECK(list_scenarios_json().front() == '[');
}

TEST_CASE("finite_atoms report") {
  const auto report = run_experiment(parse_config("scenario: finite_atoms\n"));
  CHECK(report.exit_code() == 0);
  CHECK(report.passed);
  REQUIRE(report.value("dual_posterior_max_error").has_value());
  CHECK(*report.value("dual_posterior_max_error") <= 1e-10);
  CHECK(*report.value("duality_gap") <= 1e-8);
  CHECK_FALSE(report.value("no_such_threshold").has_value());

  const auto json = report_json(report);
  CHECK(json.find("\"scenario\": \"finite_atoms\"") != std::string::npos);
  CHECK(json.find("wall_time") == std::string::npos);
  const auto conv = convergence_csv(report);
  CHECK(conv.rfind("a,C_a,E[d_R^2],lp_gap,mass_outside\n", 0) == 0);
  const auto post = posterior_csv(report);
  CHECK(post.find("numerical_density,reference_density,abs_error\n") != std::string::npos);
}

TEST_CASE("gaussian_product does not rely on a grid row at y_hat") {
  // 300 rows put a node row on y = 0.5; 240 and 301 rows straddle it.
  for (const char* res : {"240x240", "301x301"}) {
    const auto report = run_experiment(
        parse_config(std::string("scenario: gaussian_product\nresolution: ") + res + "\n"));
    CHECK_MESSAGE(report.passed, res);
    CHECK(*report.value("posterior_mean_rel_error") <= 0.01);
    CHECK(*report.value("posterior_variance_rel_error") <= 0.02);
    CHECK(*report.value("delta_final_expected_sq") < 1e-4);
  }
}

TEST_CASE("exit codes") {
  SUBCASE("threshold failure") {
    const auto report = run_experiment(parse_config("scenario: finite_atoms\ntolerance: 1e-12\n"));
    CHECK(report.exit_code() == 1);
    CHECK_FALSE(report.failure.has_value());
  }
  SUBCASE("numerical failure") {
    const auto report = run_experiment(parse_config(
        "scenario: sphere_map_equator\nresolution: 50x100\ntilt_rule: node\n"
        "a_schedule: {a0: 1.0e12, steps: 4}\n"));
    CHECK(report.exit_code() == 3);
    REQUIRE(report.failure.has_value());
    CHECK(*report.failure == ErrorKind::overflow_guard);
  }
}

TEST_CASE("property suites") {
  for (const auto& r : testing::run_all_properties(0)) {
    CHECK_MESSAGE(r.passed, r.name << ": " << r.detail << " (worst " << r.worst << ")");
    CHECK(r.cases > 0);
  }
}
