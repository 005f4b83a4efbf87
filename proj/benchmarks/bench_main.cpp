#include <benchmark/benchmark.h>

#include <cmath>

#include "nullcond/convergence.hpp"
#include "nullcond/entropy_dual.hpp"
#include "nullcond/pre_posterior.hpp"

using namespace nullcond;

namespace {

MetricMeasureSpace sphere(Chart chart, std::size_t n_phi, std::size_t n_theta) {
  return discretize(GridSpec::sphere(chart, n_phi, n_theta), [](const Point&) { return 1.0; });
}

void BM_Tilt(benchmark::State& state) {
  const auto rule = state.range(1) ? TiltRule::cell_average : TiltRule::node;
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto space = sphere(Chart::sphere_map, n, 2 * n);
  const auto prior = space.probability_weights();
  const auto field = squared_distance_field(space, sets::meridian_pair(Chart::sphere_map), 1.0, rule);
  for (auto _ : state) benchmark::DoNotOptimize(tilt(field, prior, 1e4));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(space.size()));
}
BENCHMARK(BM_Tilt)->Args({100, 0})->Args({200, 0})->Args({100, 1})->Args({200, 1})
    ->Unit(benchmark::kMillisecond);

void BM_LevyProkhorov(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto space = sphere(Chart::sphere_geodesic, n, 2 * n);
  const auto prior = space.probability_weights();
  const auto set = sets::equator(Chart::sphere_geodesic);
  const auto m1 = tilt(space, prior, set, 100.0, 1.0);
  const auto m2 = tilt(space, prior, set, 200.0, 1.0);
  LevyProkhorovOptions opts;
  opts.set_fields.push_back(distance_field(space, set));
  for (auto _ : state) benchmark::DoNotOptimize(levy_prokhorov(space, m1.weights, m2.weights, opts));
}
BENCHMARK(BM_LevyProkhorov)->Arg(50)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_SolveDual(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> nu(n);
  for (std::size_t i = 0; i < n; ++i) nu[i] = 1.0 + std::sin(static_cast<double>(i));
  std::vector<LinearConstraint> cs{{std::vector<double>(n, 1.0), 1.0}};
  for (int k = 1; k <= 3; ++k) {
    std::vector<double> a(n);
    for (std::size_t i = 0; i < n; ++i) a[i] = std::pow(static_cast<double>(i) / n, k);
    cs.push_back({a, 0.8 / (k + 1)});
  }
  const DiscreteMeasure measure(nu);
  for (auto _ : state) benchmark::DoNotOptimize(solve_dual(measure, cs));
}
BENCHMARK(BM_SolveDual)->Arg(100)->Arg(10000)->Unit(benchmark::kMicrosecond);

void BM_BoundaryDensity(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto space = sphere(Chart::sphere_map, n, 2 * n);
  const auto prior = space.probability_weights();
  const auto set = sets::meridian_pair(Chart::sphere_map);
  const auto cells = uniform_cells(-kPi / 2, kPi / 2, 20, 2);
  for (auto _ : state) benchmark::DoNotOptimize(boundary_density(space, prior, set, cells));
}
BENCHMARK(BM_BoundaryDensity)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
