#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "nullcond/experiment.hpp"

namespace nullcond::experiment {

using Json = nlohmann::ordered_json;

namespace {

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

Json config_json(const ExperimentConfig& cfg) {
  Json j;
  j["scenario"] = std::string(to_string(cfg.scenario));
  j["resolution"] = cfg.resolution;
  j["a_schedule"] = {{"a0", cfg.a_schedule.a0},
                     {"factor", cfg.a_schedule.factor},
                     {"steps", cfg.a_schedule.steps}};
  j["R"] = cfg.R;
  j["tolerance"] = cfg.tolerance;
  j["tilt_rule"] = std::string(to_string(cfg.tilt_rule));
  j["seed"] = cfg.seed;
  return j;
}

Json convergence_json(const ConvergenceReport& c) {
  Json gaps = Json::array();
  for (const auto& g : c.lp_gaps) {
    gaps.push_back({{"value", g.value},
                    {"lower_bound", g.lower_bound},
                    {"saturated", g.saturated},
                    {"worst_set", g.worst_set},
                    {"test_sets", g.test_sets}});
  }
  Json j;
  j["a_schedule"] = c.a_schedule;
  j["normalizations"] = c.normalizations;
  j["expected_sq_distance"] = c.expected_sq;
  j["mass_outside"] = c.mass_outside;
  j["lp_gaps"] = gaps;
  j["lp_test_family"] =
      "balls at up to 384 support nodes plus sub- and superlevel sets of the "
      "distance to the conditioning set; value is the smallest grid eps passing all";
  j["cauchy"] = c.cauchy;
  j["all_saturated"] = c.all_saturated;
  j["tolerance"] = c.tolerance;
  j["resolution_limit_a"] = c.resolution_limit_a;
  return j;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw std::runtime_error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

std::string list_scenarios_text() {
  std::ostringstream out;
  for (const auto& s : scenario_catalog()) {
    out << s.name << "  " << s.summary << " [reference: " << s.reference << "]\n";
  }
  return out.str();
}

std::string list_scenarios_json() {
  Json arr = Json::array();
  for (const auto& s : scenario_catalog()) {
    arr.push_back({{"name", std::string(s.name)},
                   {"summary", std::string(s.summary)},
                   {"reference", std::string(s.reference)}});
  }
  return arr.dump(2) + "\n";
}

std::string report_json(const ExperimentReport& r) {
  Json j;
  j["config"] = config_json(r.config);
  j["verdict"] = r.passed ? "pass" : "fail";
  Json thresholds = Json::array();
  for (const auto& t : r.thresholds) {
    thresholds.push_back({{"name", t.name},
                          {"value", t.value},
                          {"limit", t.limit},
                          {"comparison", t.at_most ? "<=" : ">="},
                          {"passed", t.passed}});
  }
  j["thresholds"] = thresholds;
  Json metrics = Json::object();
  for (const auto& m : r.metrics) metrics[m.name] = m.value;
  j["metrics"] = metrics;
  j["reference_comparison"] = {{"columns", r.cell_columns},
                               {"rows", r.cells.size()},
                               {"max_abs_error", r.max_abs_error},
                               {"mean_abs_error", r.mean_abs_error}};
  j["convergence"] = r.convergence ? convergence_json(*r.convergence) : Json(nullptr);
  j["warnings"] = r.config.warnings;
  j["notes"] = r.notes;
  if (r.failure) {
    j["error"] = {{"kind", std::string(to_string(*r.failure))}, {"message", r.failure_message}};
  }
  return j.dump(2) + "\n";
}

std::string posterior_csv(const ExperimentReport& r) {
  std::ostringstream out;
  for (const auto& c : r.cell_columns) out << c << ',';
  out << "numerical_density,reference_density,abs_error\n";
  for (const auto& row : r.cells) {
    for (double p : row.params) out << number(p) << ',';
    out << number(row.numerical) << ',' << number(row.reference) << ','
        << number(row.abs_error) << '\n';
  }
  return out.str();
}

std::string convergence_csv(const ExperimentReport& r) {
  std::ostringstream out;
  out << "a,C_a,E[d_R^2],lp_gap,mass_outside\n";
  if (!r.convergence) return out.str();
  const auto& c = *r.convergence;
  for (std::size_t k = 0; k < c.a_schedule.size(); ++k) {
    out << number(c.a_schedule[k]) << ',' << number(c.normalizations[k]) << ','
        << number(c.expected_sq[k]) << ',';
    if (k > 0) out << number(c.lp_gaps[k - 1].value);
    out << ',' << number(c.mass_outside[k]) << '\n';
  }
  return out.str();
}

void write_outputs(const ExperimentReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_atomic(dir / "report.json", report_json(report));
  write_atomic(dir / "posterior.csv", posterior_csv(report));
  write_atomic(dir / "convergence.csv", convergence_csv(report));
  Json timing = {{"wall_time_seconds", report.wall_time}};
  write_atomic(dir / "timing.json", timing.dump(2) + "\n");
}

}  // namespace nullcond::experiment
