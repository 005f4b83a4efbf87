#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <charconv>
#include <map>
#include <sstream>

#include "nullcond/experiment.hpp"

namespace nullcond::experiment {

namespace {

constexpr std::string_view kKnownKeys[] = {
    "scenario", "resolution", "a_schedule.a0", "a_schedule.factor", "a_schedule.steps",
    "R",        "tolerance",  "tilt_rule",     "seed",              "output_dir",
};

[[noreturn]] void invalid(const std::string& what) {
  throw Error(ErrorKind::validation, what);
}

void flatten(const YAML::Node& node, const std::string& prefix,
             std::map<std::string, YAML::Node>& out) {
  if (node.IsMap()) {
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      flatten(kv.second, prefix.empty() ? key : prefix + "." + key, out);
    }
    return;
  }
  out[prefix] = node;
}

template <class T>
T read(const std::map<std::string, YAML::Node>& kv, const std::string& key, T fallback) {
  auto it = kv.find(key);
  if (it == kv.end() || it->second.IsNull()) return fallback;
  try {
    return it->second.as<T>();
  } catch (const YAML::Exception&) {
    invalid("field '" + key + "' has the wrong type");
  }
}

std::vector<std::size_t> parse_resolution(const YAML::Node& node) {
  std::vector<std::size_t> out;
  auto push = [&](std::string_view token) {
    std::size_t v = 0;
    const auto* end = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(token.data(), end, v);
    if (ec != std::errc{} || ptr != end) {
      invalid("field 'resolution' must be a list of grid counts or 'NxM'");
    }
    out.push_back(v);
  };
  if (node.IsSequence()) {
    for (const auto& item : node) push(item.as<std::string>());
  } else if (node.IsScalar()) {
    const auto text = node.as<std::string>();
    std::string_view rest = text;
    for (std::size_t pos; (pos = rest.find('x')) != std::string_view::npos;) {
      push(rest.substr(0, pos));
      rest.remove_prefix(pos + 1);
    }
    push(rest);
  } else {
    invalid("field 'resolution' must be a list of grid counts or 'NxM'");
  }
  return out;
}

bool is_sphere_scenario(Scenario s) {
  return s != Scenario::gaussian_product && s != Scenario::finite_atoms;
}

}  // namespace

std::vector<std::size_t> default_resolution(Scenario s) {
  switch (s) {
    case Scenario::finite_atoms: return {};
    case Scenario::gaussian_product: return {300, 300};
    default: return {200, 400};
  }
}

ExperimentConfig parse_config(std::string_view text, std::span<const std::string> overrides) {
  std::map<std::string, YAML::Node> kv;
  try {
    const YAML::Node root = YAML::Load(std::string(text));
    if (root.IsMap()) {
      flatten(root, "", kv);
    } else if (!root.IsNull()) {
      invalid("config must be a key-value mapping");
    }
    for (const auto& item : overrides) {
      const auto eq = item.find('=');
      if (eq == std::string::npos || eq == 0) {
        invalid("override '" + item + "' is not of the form key=value");
      }
      kv[item.substr(0, eq)] = YAML::Load(item.substr(eq + 1));
    }
  } catch (const YAML::Exception& e) {
    invalid(std::string("malformed config: ") + e.what());
  }

  for (const auto& [key, value] : kv) {
    if (std::find(std::begin(kKnownKeys), std::end(kKnownKeys), key) == std::end(kKnownKeys)) {
      invalid("unknown field '" + key + "'");
    }
  }

  ExperimentConfig cfg;
  const auto name = read<std::string>(kv, "scenario", "");
  if (name.empty()) invalid("field 'scenario' is required");
  const auto scenario = parse_scenario(name);
  if (!scenario) {
    std::ostringstream msg;
    msg << "unknown scenario '" << name << "'; valid choices:";
    for (const auto& info : scenario_catalog()) msg << ' ' << info.name;
    invalid(msg.str());
  }
  cfg.scenario = *scenario;

  cfg.resolution = default_resolution(cfg.scenario);
  if (auto it = kv.find("resolution"); it != kv.end() && !it->second.IsNull()) {
    if (cfg.scenario == Scenario::finite_atoms) {
      cfg.warnings.push_back("resolution is ignored by the finite_atoms scenario");
    } else {
      cfg.resolution = parse_resolution(it->second);
    }
  }

  cfg.a_schedule.a0 = read<double>(kv, "a_schedule.a0", cfg.a_schedule.a0);
  cfg.a_schedule.factor = read<double>(kv, "a_schedule.factor", cfg.a_schedule.factor);
  cfg.a_schedule.steps = read<int>(kv, "a_schedule.steps", cfg.a_schedule.steps);
  cfg.R = read<double>(kv, "R", cfg.R);
  cfg.tolerance = read<double>(kv, "tolerance", cfg.tolerance);
  const auto rule = read<std::string>(kv, "tilt_rule", "cell_average");
  if (rule == "node") {
    cfg.tilt_rule = TiltRule::node;
  } else if (rule == "cell_average") {
    cfg.tilt_rule = TiltRule::cell_average;
  } else {
    invalid("field 'tilt_rule' must be 'node' or 'cell_average'");
  }
  cfg.seed = read<std::uint64_t>(kv, "seed", cfg.seed);
  cfg.output_dir = read<std::string>(kv, "output_dir", "");

  if (!(cfg.a_schedule.a0 > 0.0)) invalid("field 'a_schedule.a0' must be > 0");
  if (!(cfg.a_schedule.factor > 1.0)) invalid("field 'a_schedule.factor' must be > 1");
  if (cfg.a_schedule.steps < 4) invalid("field 'a_schedule.steps' must be >= 4");
  if (!(cfg.R > 0.0)) invalid("field 'R' must be > 0");
  if (!(cfg.tolerance > 0.0)) invalid("field 'tolerance' must be > 0");
  if (cfg.scenario != Scenario::finite_atoms) {
    if (cfg.resolution.size() != 2) invalid("field 'resolution' needs two grid counts");
    const std::size_t floor = is_sphere_scenario(cfg.scenario) ? 50 : 2;
    for (auto n : cfg.resolution) {
      if (n < floor) {
        invalid("field 'resolution' must be at least " + std::to_string(floor) +
                " per axis for this scenario");
      }
    }
  }
  return cfg;
}

}  // namespace nullcond::experiment
