#pragma once

// Named experiment scenarios: configuration, execution and report output.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nullcond/convergence.hpp"
#include "nullcond/error.hpp"

namespace nullcond::experiment {

enum class Scenario {
  sphere_geodesic_equator,
  sphere_geodesic_meridian,
  sphere_map_equator,
  sphere_map_meridian,
  gaussian_product,
  finite_atoms,
  truncation_invariance,
  isometry_invariance,
  ratio_limit_baseline,
  positive_measure_recovery,
};

std::string_view to_string(Scenario s) noexcept;
std::optional<Scenario> parse_scenario(std::string_view name) noexcept;

struct ScenarioInfo {
  Scenario id;
  std::string_view name;
  std::string_view summary;
  std::string_view reference;  // the closed form the scenario is checked against
};

std::span<const ScenarioInfo> scenario_catalog() noexcept;
std::string list_scenarios_text();
std::string list_scenarios_json();

struct ScheduleConfig {
  double a0 = 100.0;
  double factor = 2.0;
  int steps = 12;

  std::vector<double> values() const { return geometric_schedule(a0, factor, steps); }
};

struct ExperimentConfig {
  Scenario scenario = Scenario::sphere_map_meridian;
  std::vector<std::size_t> resolution;  // empty for scenarios without a grid
  ScheduleConfig a_schedule;
  double R = 1.0;
  double tolerance = 0.02;
  TiltRule tilt_rule = TiltRule::cell_average;
  std::uint64_t seed = 0;
  std::string output_dir;
  std::vector<std::string> warnings;  // filled during parsing
};

/// Parses a YAML mapping (nested or with dotted keys), applies `key=value`
/// overrides, fills defaults and validates. Throws Error(validation) naming
/// the offending field; an unknown scenario lists the valid names.
ExperimentConfig parse_config(std::string_view text,
                              std::span<const std::string> overrides = {});

/// Defaults that depend on the scenario (grid resolution).
std::vector<std::size_t> default_resolution(Scenario s);

struct Threshold {
  std::string name;
  double value = 0.0;
  double limit = 0.0;
  bool at_most = true;  // value <= limit, otherwise value >= limit
  bool passed = false;
};

struct Metric {
  std::string name;
  double value = 0.0;
};

/// One row of the numerical-vs-reference table.
struct CellRow {
  std::vector<double> params;
  double numerical = 0.0;
  double reference = 0.0;
  double abs_error = 0.0;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::optional<ConvergenceReport> convergence;
  std::vector<std::string> cell_columns;  // names of CellRow::params
  std::vector<CellRow> cells;
  double max_abs_error = 0.0;
  double mean_abs_error = 0.0;
  std::vector<Metric> metrics;
  std::vector<Threshold> thresholds;
  std::vector<std::string> notes;
  bool passed = false;
  double wall_time = 0.0;  // seconds; kept out of report.json
  std::optional<ErrorKind> failure;
  std::string failure_message;

  /// 0 pass, 1 threshold failure, 3 numerical failure.
  int exit_code() const noexcept;
  /// Threshold or metric by name; nullopt if absent.
  std::optional<double> value(std::string_view name) const;
};

/// Runs a scenario. Numerical failures are captured in the report rather than
/// thrown.
ExperimentReport run_experiment(const ExperimentConfig& config);

std::string report_json(const ExperimentReport& report);
std::string posterior_csv(const ExperimentReport& report);
std::string convergence_csv(const ExperimentReport& report);

/// Writes report.json, posterior.csv, convergence.csv and timing.json into
/// `dir` (created if needed), each through a temporary file and a rename.
void write_outputs(const ExperimentReport& report, const std::filesystem::path& dir);

}  // namespace nullcond::experiment
