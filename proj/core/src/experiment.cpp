#include "nullcond/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "nullcond/closed_form.hpp"
#include "nullcond/entropy_dual.hpp"

namespace nullcond::experiment {

namespace {

constexpr ScenarioInfo kCatalog[] = {
    {Scenario::sphere_geodesic_equator, "sphere_geodesic_equator",
     "uniform sphere, geodesic metric, conditioned on the equator",
     "uniform 1/(2 pi) per radian"},
    {Scenario::sphere_geodesic_meridian, "sphere_geodesic_meridian",
     "uniform sphere, geodesic metric, conditioned on a meridian pair",
     "uniform 1/(2 pi) per radian"},
    {Scenario::sphere_map_equator, "sphere_map_equator",
     "uniform sphere, map-projection metric, conditioned on the equator",
     "uniform 1/(2 pi) per radian"},
    {Scenario::sphere_map_meridian, "sphere_map_meridian",
     "uniform sphere, map-projection metric, conditioned on a meridian pair",
     "cos(phi)/4 on each branch"},
    {Scenario::gaussian_product, "gaussian_product",
     "bivariate Gaussian (rho = 0.8) observed at y = 0.5",
     "Gaussian conditional, mean 0.4, variance 0.36"},
    {Scenario::finite_atoms, "finite_atoms",
     "four atoms (0.1, 0.2, 0.3, 0.4) conditioned on the first two",
     "classical conditional (1/3, 2/3, 0, 0)"},
    {Scenario::truncation_invariance, "truncation_invariance",
     "map-metric meridian posterior under truncation radii R and 2R",
     "identical limits"},
    {Scenario::isometry_invariance, "isometry_invariance",
     "geodesic equator posterior under a longitude rotation",
     "pushforward equals posterior of the image set"},
    {Scenario::ratio_limit_baseline, "ratio_limit_baseline",
     "ratio of enlargement masses versus the entropy posterior, map meridian",
     "band |phi| <= pi/6 has mass 1/2"},
    {Scenario::positive_measure_recovery, "positive_measure_recovery",
     "uniform sphere conditioned on the northern hemisphere",
     "classical conditional 1_A nu / nu(A)"},
};

/// Collects thresholds, metrics and the comparison table of one run.
struct Builder {
  ExperimentReport& rep;

  void threshold(const std::string& name, double value, double limit, bool at_most = true) {
    const bool ok = at_most ? value <= limit : value >= limit;
    rep.thresholds.push_back({name, value, limit, at_most, ok});
  }

  void metric(const std::string& name, double value) { rep.metrics.push_back({name, value}); }

  void note(std::string text) { rep.notes.push_back(std::move(text)); }

  void set_table(std::vector<std::string> columns, std::vector<CellRow> rows) {
    double max_err = 0.0;
    double sum = 0.0;
    for (auto& r : rows) {
      r.abs_error = std::abs(r.numerical - r.reference);
      max_err = std::max(max_err, r.abs_error);
      sum += r.abs_error;
    }
    rep.cell_columns = std::move(columns);
    rep.max_abs_error = max_err;
    rep.mean_abs_error = rows.empty() ? 0.0 : sum / static_cast<double>(rows.size());
    rep.cells = std::move(rows);
  }

  void record_convergence(const ConvergenceReport& conv) {
    threshold("cauchy", conv.cauchy ? 1.0 : 0.0, 1.0, false);
    threshold("mass_outside_at_a_max", conv.mass_outside.back(), 0.01);
    metric("resolution_limit_a", conv.resolution_limit_a);
    metric("a_max", conv.a_schedule.back());
    if (rep.config.tilt_rule == TiltRule::node &&
        conv.a_schedule.back() > conv.resolution_limit_a) {
      std::ostringstream msg;
      msg << "the schedule passes the grid resolution limit a ~ " << conv.resolution_limit_a
          << "; beyond it the tilted measure sits on the nodes nearest the set";
      note(msg.str());
    }
  }
};

MetricMeasureSpace uniform_sphere(Chart chart, const std::vector<std::size_t>& res) {
  return discretize(GridSpec::sphere(chart, res[0], res[1]), [](const Point&) { return 1.0; });
}

/// Posterior mass per probe cell of a node measure, nodes assigned through
/// the set's projection; returned as densities (mass / width).
std::vector<double> cell_densities(const MetricMeasureSpace& space,
                                   std::span<const double> weights,
                                   const ConditioningSet& set,
                                   std::span<const ProbeCell> cells) {
  std::vector<double> out(cells.size(), 0.0);
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (weights[i] == 0.0) continue;
    const auto c = set.project(space.node(i));
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (cells[k].contains(c)) {
        out[k] += weights[i];
        break;
      }
    }
  }
  for (std::size_t k = 0; k < cells.size(); ++k) out[k] /= cells[k].width();
  return out;
}

std::vector<CellRow> cell_rows(std::span<const ProbeCell> cells, std::span<const double> numerical,
                               std::span<const double> reference, bool with_branch) {
  std::vector<CellRow> rows;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    CellRow r;
    if (with_branch) r.params.push_back(cells[k].branch);
    r.params.push_back(cells[k].lo);
    r.params.push_back(std::min(cells[k].hi, cells[k].lo + cells[k].width()));
    r.numerical = numerical[k];
    r.reference = reference[k];
    rows.push_back(r);
  }
  return rows;
}

std::vector<std::string> cell_columns(const char* param, bool with_branch) {
  std::vector<std::string> cols;
  if (with_branch) cols.emplace_back("branch");
  cols.push_back(std::string(param) + "_lo");
  cols.push_back(std::string(param) + "_hi");
  return cols;
}

std::vector<ProbeCell> meridian_cells() { return uniform_cells(-kPi / 2, kPi / 2, 20, 2); }
std::vector<ProbeCell> equator_cells() { return uniform_cells(-kPi, kPi, 40, 1); }

AnnealOptions anneal_options(const ExperimentConfig& cfg) {
  AnnealOptions opt;
  opt.tolerance = cfg.tolerance;
  opt.rule = cfg.tilt_rule;
  return opt;
}

void run_sphere(Builder& out, const ExperimentConfig& cfg, Chart chart, GreatCircle circle) {
  auto& rep = out.rep;
  const auto space = uniform_sphere(chart, cfg.resolution);
  const auto prior = space.probability_weights();
  const bool meridian = circle == GreatCircle::meridian_pair;
  const auto set = meridian ? sets::meridian_pair(chart) : sets::equator(chart);

  rep.convergence = anneal(space, prior, set, cfg.R, cfg.a_schedule.values(), anneal_options(cfg));
  out.record_convergence(*rep.convergence);

  const auto cells = meridian ? meridian_cells() : equator_cells();
  const auto bd = boundary_density(space, prior, set, cells);
  const auto ref = sphere_reference(chart, circle);
  std::vector<double> expected;
  for (const auto& c : cells) expected.push_back(ref.mass(c) / c.width());
  out.set_table(cell_columns(meridian ? "phi" : "theta", meridian),
            cell_rows(cells, bd.densities, expected, meridian));
  out.threshold("boundary_density_max_abs_error", rep.max_abs_error, cfg.tolerance);
  for (const auto& w : bd.warnings) out.note(w);

  out.metric("reference_mass_check", ref.mass_check);
  const auto& limit = rep.convergence->limit;
  const auto tilted = cell_densities(space, limit.weights, set, cells);
  double tilted_err = 0.0;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    tilted_err = std::max(tilted_err, std::abs(tilted[k] - expected[k]));
  }
  out.metric("tilted_limit_max_abs_error", tilted_err);
  out.metric("sqrt_a_times_C_a_at_a_max", std::sqrt(limit.a) * limit.normalization);
}

double bivariate_gaussian(const Point& p, double rho) {
  const double q = (p[0] * p[0] - 2 * rho * p[0] * p[1] + p[1] * p[1]) / (1 - rho * rho);
  return std::exp(-0.5 * q) / (2 * kPi * std::sqrt(1 - rho * rho));
}

void run_gaussian(Builder& out, const ExperimentConfig& cfg) {
  auto& rep = out.rep;
  constexpr double rho = 0.8;
  constexpr double y_hat = 0.5;
  const Density joint = [](const Point& p) { return bivariate_gaussian(p, rho); };
  const auto space = discretize(GridSpec::product(Axis{-6, 6, cfg.resolution[0]},
                                                  Axis{-6, 6, cfg.resolution[1]}),
                                joint);
  const auto prior = space.probability_weights();
  out.metric("prior_mass_in_box", space.total_mass());
  const auto set = sets::hyperplane(MetricMeasureSpace::y_axis, y_hat);
  const auto schedule = cfg.a_schedule.values();

  rep.convergence = anneal(space, prior, set, cfg.R, schedule, anneal_options(cfg));
  out.record_convergence(*rep.convergence);

  const auto field = squared_distance_field(space, set, cfg.R, cfg.tilt_rule);
  std::vector<TiltedMeasure> family;
  for (double a : schedule) family.push_back(tilt(field, prior, a));
  const auto delta = marginal_delta_check(space, family, y_hat);
  out.threshold("delta_final_expected_sq", delta.series.back(), 1e-4);
  out.threshold("delta_series_monotone", delta.monotone ? 1.0 : 0.0, 1.0, false);
  out.threshold("delta_chebyshev_bound", delta.chebyshev_holds ? 1.0 : 0.0, 1.0, false);

  // X-marginal of the annealed limit.
  const Axis& xs = space.axes()[0];
  const std::size_t ny = space.axes()[1].count;
  std::vector<double> marginal(xs.count, 0.0);
  const auto& w = rep.convergence->limit.weights;
  for (std::size_t i = 0; i < xs.count; ++i) {
    for (std::size_t j = 0; j < ny; ++j) marginal[i] += w[space.node_index(i, j)];
  }
  double mean = 0.0;
  for (std::size_t i = 0; i < xs.count; ++i) mean += marginal[i] * xs.center(i);
  double var = 0.0;
  for (std::size_t i = 0; i < xs.count; ++i) {
    var += marginal[i] * (xs.center(i) - mean) * (xs.center(i) - mean);
  }
  constexpr double kMean = rho * y_hat;
  constexpr double kVar = 1 - rho * rho;
  out.metric("posterior_mean", mean);
  out.metric("posterior_variance", var);
  out.threshold("posterior_mean_rel_error", std::abs(mean - kMean) / kMean, 0.01);
  out.threshold("posterior_variance_rel_error", std::abs(var - kVar) / kVar, 0.02);

  const auto ref = product_posterior(space, joint, y_hat);
  out.metric("reference_mass_check", ref.mass_check);
  std::vector<CellRow> rows;
  for (std::size_t i = 0; i < xs.count; ++i) {
    CellRow r;
    r.params = {xs.center(i)};
    r.numerical = marginal[i] / xs.step();
    r.reference = ref.density(SetCoordinate{0, xs.center(i)});
    rows.push_back(r);
  }
  out.set_table({"x"}, std::move(rows));
  out.threshold("density_max_abs_error", rep.max_abs_error, cfg.tolerance);
}

void run_finite_atoms(Builder& out, const ExperimentConfig& cfg) {
  auto& rep = out.rep;
  const std::vector<double> p{0.1, 0.2, 0.3, 0.4};
  const std::vector<double> expected{1.0 / 3.0, 2.0 / 3.0, 0.0, 0.0};

  const DiscreteMeasure nu(p);
  const std::vector<LinearConstraint> constraints{{{1, 1, 1, 1}, 1.0}, {{1, 1, 0, 0}, 1.0}};
  const auto sol = solve_dual(nu, constraints);
  double err = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    err = std::max(err, std::abs(sol.posterior[k] - expected[k]));
  }
  out.threshold("dual_posterior_max_error", err, 1e-10);
  out.threshold("duality_gap", sol.duality_gap(), 1e-8);
  out.metric("dual_iterations", sol.iterations);
  out.metric("primal_value", sol.primal_value);
  out.metric("dual_value", sol.dual_value);
  out.metric("max_residual", sol.max_residual());

  // The same atoms on a line at unit spacing, conditioned on {x <= 2}
  // through the annealed path.
  const auto space = discretize(GridSpec::box({Axis{0.0, 4.0, 4}}), [&p](const Point& x) {
    return p[std::min<std::size_t>(3, static_cast<std::size_t>(x[0]))];
  });
  const auto prior = space.probability_weights();
  const auto set = sets::half_space(0, 2.0);
  rep.convergence = anneal(space, prior, set, cfg.R, cfg.a_schedule.values(), anneal_options(cfg));
  double anneal_err = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    anneal_err = std::max(anneal_err, std::abs(rep.convergence->limit.weights[k] - expected[k]));
  }
  out.threshold("annealed_limit_max_error", anneal_err, cfg.tolerance);
  out.threshold("C_a_at_a_max_vs_nu_A",
            std::abs(rep.convergence->normalizations.back() - 0.3), cfg.tolerance);

  std::vector<CellRow> rows;
  for (std::size_t k = 0; k < p.size(); ++k) {
    rows.push_back(CellRow{{static_cast<double>(k + 1)}, sol.posterior[k], expected[k], 0.0});
  }
  out.set_table({"atom"}, std::move(rows));
}

void run_positive(Builder& out, const ExperimentConfig& cfg) {
  auto& rep = out.rep;
  const Chart chart = Chart::sphere_geodesic;
  const auto space = uniform_sphere(chart, cfg.resolution);
  const auto prior = space.probability_weights();
  const auto set = sets::northern_hemisphere(chart);

  auto opt = anneal_options(cfg);
  rep.convergence = anneal(space, prior, set, cfg.R, cfg.a_schedule.values(), opt);
  out.record_convergence(*rep.convergence);
  const auto& limit = rep.convergence->limit;

  const auto ref = conditional_positive(space, prior, set);
  out.metric("nu_A", set_mass(space, prior, set));
  out.threshold("C_a_at_a_max_error", std::abs(limit.normalization - 0.5), 0.01);
  const auto dist = distance_field(space, set);
  opt.lp.set_fields.push_back(dist);
  const auto gap = levy_prokhorov(space, limit.weights, ref.node_weights, opt.lp);
  out.threshold("lp_gap_vs_conditional", gap.value, cfg.tolerance);
  out.metric("lp_gap_lower_bound", gap.lower_bound);

  const auto cells = uniform_cells(0.0, kPi / 2, 10);
  out.set_table(cell_columns("phi", false),
            cell_rows(cells, cell_densities(space, limit.weights, set, cells),
                      cell_densities(space, ref.node_weights, set, cells), false));
}

void run_truncation(Builder& out, const ExperimentConfig& cfg) {
  auto& rep = out.rep;
  constexpr double kTestTilt = 1e4;
  const Chart chart = Chart::sphere_map;
  const auto space = uniform_sphere(chart, cfg.resolution);
  const auto prior = space.probability_weights();
  const auto set = sets::meridian_pair(chart);

  rep.convergence = anneal(space, prior, set, cfg.R, cfg.a_schedule.values(), anneal_options(cfg));
  out.record_convergence(*rep.convergence);

  const double R2 = 2 * cfg.R;
  const auto gap = truncation_invariance_test(space, prior, set, cfg.R, R2, kTestTilt);
  out.threshold("lp_gap_R_vs_2R", gap.value, 0.01);
  out.metric("test_tilt", kTestTilt);
  out.metric("R2", R2);
  // Truncating inside the boundary layer: reported only.
  const auto clipped = truncation_invariance_test(space, prior, set, cfg.R, 1e-3, kTestTilt);
  out.metric("lp_gap_R_vs_layer_scale_R", clipped.value);

  const auto cells = meridian_cells();
  const auto m1 = tilt(space, prior, set, kTestTilt, cfg.R);
  const auto m2 = tilt(space, prior, set, kTestTilt, R2);
  out.set_table(cell_columns("phi", true),
            cell_rows(cells, cell_densities(space, m1.weights, set, cells),
                      cell_densities(space, m2.weights, set, cells), true));
}

void run_isometry(Builder& out, const ExperimentConfig& cfg) {
  auto& rep = out.rep;
  const Chart chart = Chart::sphere_geodesic;
  const auto space = uniform_sphere(chart, cfg.resolution);
  const auto prior = space.probability_weights();
  const auto set = sets::equator(chart);
  const auto schedule = cfg.a_schedule.values();

  rep.convergence = anneal(space, prior, set, cfg.R, schedule, anneal_options(cfg));
  out.record_convergence(*rep.convergence);

  const double a = schedule.back();
  const int shift = static_cast<int>(cfg.resolution[1] / 4);
  const auto rotation = GridTransform::theta_rotation(space, shift);
  const auto check = isometry_invariance_test(space, prior, set, rotation, a, cfg.R);
  out.threshold("lp_gap_rotation", check.gap.value, 1e-10);
  out.metric("rotation_cells", shift);
  out.metric("max_distance_defect", check.max_distance_defect);

  const auto reflect = GridTransform::reflection(space, 0);
  const auto flipped = isometry_invariance_test(space, prior, set, reflect, a, cfg.R);
  out.metric("lp_gap_reflection", flipped.gap.value);

  // Posterior of the image set against the pushforward, per longitude cell.
  const auto image = transform_set(set, rotation);
  const auto perm = rotation.permutation(space);
  const auto before = tilt(space, prior, set, a, cfg.R);
  const auto after = tilt(space, prior, image, a, cfg.R);
  std::vector<double> pushed(space.size(), 0.0);
  for (std::size_t i = 0; i < space.size(); ++i) pushed[perm[i]] = before.weights[i];
  const auto cells = equator_cells();
  out.set_table(cell_columns("theta", false),
            cell_rows(cells, cell_densities(space, after.weights, image, cells),
                      cell_densities(space, pushed, image, cells), false));
}

void run_ratio_limit(Builder& out, const ExperimentConfig& cfg) {
  auto& rep = out.rep;
  const Chart chart = Chart::sphere_map;
  const auto space = uniform_sphere(chart, cfg.resolution);
  const auto prior = space.probability_weights();
  const auto set = sets::meridian_pair(chart);

  rep.convergence = anneal(space, prior, set, cfg.R, cfg.a_schedule.values(), anneal_options(cfg));
  out.record_convergence(*rep.convergence);

  const auto eps = default_eta_steps(space);
  const auto band = sets::latitude_band(chart, kPi / 6);
  const auto rl = ratio_limit_conditional(space, prior, set, band, eps);
  out.metric("ratio_limit_band", rl.limit);
  out.threshold("ratio_limit_band_error", std::abs(rl.limit - 0.5), cfg.tolerance);

  // Entropy-posterior mass of the same band from the boundary density.
  std::vector<ProbeCell> thirds;
  for (int b = 0; b < 2; ++b) {
    thirds.push_back({b, -kPi / 2, -kPi / 6});
    thirds.push_back({b, -kPi / 6, kPi / 6});
    thirds.push_back({b, kPi / 6, std::nextafter(kPi / 2, 2.0)});
  }
  const auto bd_band = boundary_density(space, prior, set, thirds);
  const double maxent_band = bd_band.masses[1] + bd_band.masses[4];
  out.metric("maxent_band", maxent_band);
  out.threshold("ratio_vs_maxent_rel_diff", std::abs(rl.limit - maxent_band) / maxent_band, 0.02);

  const auto cells = meridian_cells();
  const auto rp = ratio_limit_posterior(space, prior, set, cells, eps);
  out.threshold("ratio_posterior_mass_check_error", std::abs(rp.mass_check - 1.0), 0.02);
  const auto bd = boundary_density(space, prior, set, cells);
  std::vector<double> ratio_density;
  double vs_maxent = 0.0;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    ratio_density.push_back(rp.node_weights[k] / cells[k].width());
    vs_maxent = std::max(vs_maxent, std::abs(ratio_density[k] - bd.densities[k]));
  }
  out.threshold("ratio_vs_maxent_cell_max_abs_diff", vs_maxent, cfg.tolerance);
  const auto ref = sphere_reference(chart, GreatCircle::meridian_pair);
  std::vector<double> expected;
  for (const auto& c : cells) expected.push_back(ref.mass(c) / c.width());
  out.set_table(cell_columns("phi", true), cell_rows(cells, ratio_density, expected, true));
}

}  // namespace

std::string_view to_string(Scenario s) noexcept {
  for (const auto& info : kCatalog) {
    if (info.id == s) return info.name;
  }
  return "unknown";
}

std::optional<Scenario> parse_scenario(std::string_view name) noexcept {
  for (const auto& info : kCatalog) {
    if (info.name == name) return info.id;
  }
  return std::nullopt;
}

std::span<const ScenarioInfo> scenario_catalog() noexcept { return kCatalog; }

int ExperimentReport::exit_code() const noexcept {
  if (failure) return 3;
  return passed ? 0 : 1;
}

std::optional<double> ExperimentReport::value(std::string_view name) const {
  for (const auto& t : thresholds) {
    if (t.name == name) return t.value;
  }
  for (const auto& m : metrics) {
    if (m.name == name) return m.value;
  }
  return std::nullopt;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  ExperimentReport rep;
  rep.config = config;
  Builder out{rep};
  const auto start = std::chrono::steady_clock::now();
  try {
    switch (config.scenario) {
      case Scenario::sphere_geodesic_equator:
        run_sphere(out, config, Chart::sphere_geodesic, GreatCircle::equator);
        break;
      case Scenario::sphere_geodesic_meridian:
        run_sphere(out, config, Chart::sphere_geodesic, GreatCircle::meridian_pair);
        break;
      case Scenario::sphere_map_equator:
        run_sphere(out, config, Chart::sphere_map, GreatCircle::equator);
        break;
      case Scenario::sphere_map_meridian:
        run_sphere(out, config, Chart::sphere_map, GreatCircle::meridian_pair);
        break;
      case Scenario::gaussian_product: run_gaussian(out, config); break;
      case Scenario::finite_atoms: run_finite_atoms(out, config); break;
      case Scenario::truncation_invariance: run_truncation(out, config); break;
      case Scenario::isometry_invariance: run_isometry(out, config); break;
      case Scenario::ratio_limit_baseline: run_ratio_limit(out, config); break;
      case Scenario::positive_measure_recovery: run_positive(out, config); break;
    }
    rep.passed = !rep.thresholds.empty() &&
                 std::all_of(rep.thresholds.begin(), rep.thresholds.end(),
                             [](const Threshold& t) { return t.passed; });
  } catch (const Error& e) {
    rep.failure = e.kind();
    rep.failure_message = e.what();
    rep.passed = false;
  }
  rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace nullcond::experiment
