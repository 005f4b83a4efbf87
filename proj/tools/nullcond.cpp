// nullcond: run annealed-conditioning scenarios and write their reports.
//
//   nullcond run <config> [--output-dir DIR] [--override key=value ...]
//   nullcond list-scenarios [--json]
//   nullcond --version
//
// Exit codes: 0 pass, 1 threshold failure, 2 usage or config error,
// 3 numerical failure.

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "nullcond/experiment.hpp"

namespace ex = nullcond::experiment;

namespace {

constexpr int kUsageError = 2;

std::filesystem::path pick_output_dir(const std::string& flag, const ex::ExperimentConfig& cfg) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("NULLCOND_OUTPUT_DIR"); env && *env) return env;
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  return std::filesystem::path("out") / std::string(ex::to_string(cfg.scenario));
}

int run(const std::string& config_path, const std::string& output_flag,
        const std::vector<std::string>& overrides) {
  std::ifstream in(config_path);
  if (!in) {
    std::cerr << "error: cannot read config '" << config_path << "'\n";
    return kUsageError;
  }
  std::stringstream text;
  text << in.rdbuf();

  ex::ExperimentConfig cfg;
  try {
    cfg = ex::parse_config(text.str(), overrides);
  } catch (const nullcond::Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsageError;
  }
  for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << '\n';

  const auto dir = pick_output_dir(output_flag, cfg);
  const auto report = ex::run_experiment(cfg);
  try {
    ex::write_outputs(report, dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  }

  std::printf("scenario %s\n", std::string(ex::to_string(cfg.scenario)).c_str());
  for (const auto& t : report.thresholds) {
    std::printf("  %-36s %-4s %.6g (%s %.6g)\n", t.name.c_str(), t.passed ? "ok" : "FAIL",
                t.value, t.at_most ? "<=" : ">=", t.limit);
  }
  if (report.failure) {
    std::printf("  numerical failure (%s): %s\n",
                std::string(nullcond::to_string(*report.failure)).c_str(),
                report.failure_message.c_str());
  }
  std::printf("verdict %s  wall_time %.2fs  output %s\n", report.passed ? "pass" : "fail",
              report.wall_time, dir.string().c_str());
  return report.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Posteriors on null sets by entropy-annealed conditioning"};
  app.require_subcommand(0, 1);
  app.set_version_flag("--version", std::string("nullcond ") + NULLCOND_VERSION);

  std::string config_path;
  std::string output_dir;
  std::vector<std::string> overrides;
  auto* run_cmd = app.add_subcommand("run", "Run the scenario described by a config file");
  run_cmd->add_option("config", config_path, "YAML config file")->required();
  run_cmd->add_option("--output-dir", output_dir,
                      "Output directory (overrides NULLCOND_OUTPUT_DIR and the config)");
  run_cmd->add_option("--override", overrides, "Config override key=value (repeatable)");

  bool as_json = false;
  auto* list_cmd = app.add_subcommand("list-scenarios", "List the available scenarios");
  list_cmd->add_flag("--json", as_json, "Print the catalog as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  if (*run_cmd) return run(config_path, output_dir, overrides);
  if (*list_cmd) {
    std::cout << (as_json ? ex::list_scenarios_json() : ex::list_scenarios_text());
    return 0;
  }
  std::cerr << app.help();
  return kUsageError;
}
