#include <doctest.h>

#include <cmath>
#include <random>

#include "nullcond/closed_form.hpp"
#include "nullcond/error.hpp"
#include "nullcond/pre_posterior.hpp"

using namespace nullcond;

namespace {

MetricMeasureSpace uniform_sphere(Chart chart, std::size_t n_phi, std::size_t n_theta) {
  return discretize(GridSpec::sphere(chart, n_phi, n_theta), [](const Point&) { return 1.0; });
}

/// Composite Simpson rule with n (even) intervals.
template <class F>
double simpson(F&& f, double lo, double hi, int n) {
  const double h = (hi - lo) / n;
  double s = f(lo) + f(hi);
  for (int k = 1; k < n; ++k) s += f(lo + k * h) * (k % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("tilt at a = 0 and on the whole space returns the prior") {
  const auto space = uniform_sphere(Chart::sphere_geodesic, 30, 60);
  const auto prior = space.probability_weights();
  const auto zero = tilt(space, prior, sets::equator(Chart::sphere_geodesic), 0.0, 1.0);
  const auto whole = tilt(space, prior, sets::whole_space(), 1e5, 1.0);
  for (std::size_t i = 0; i < prior.size(); ++i) {
    CHECK(zero.weights[i] == doctest::Approx(prior[i]).epsilon(1e-14));
    CHECK(whole.weights[i] == doctest::Approx(prior[i]).epsilon(1e-14));
  }
  CHECK(whole.normalization == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(expected_sq_distance(whole) == 0.0);
}

TEST_CASE("tilt follows the pointwise formula") {
  const auto space = uniform_sphere(Chart::sphere_map, 40, 80);
  const auto prior = space.probability_weights();
  const auto set = sets::meridian_pair(Chart::sphere_map);
  const double a = 3.0;
  const double R = 0.5;
  const auto tm = tilt(space, prior, set, a, R);
  for (std::size_t i = 0; i < space.size(); i += 37) {
    const double d = std::min(set.set_distance(space.node(i)), R);
    CHECK(tm.weights[i] * tm.normalization ==
          doctest::Approx(std::exp(-a * d * d) * prior[i]).epsilon(1e-12));
  }
}

TEST_CASE("tilt concentrates on the equator") {
  const auto space = uniform_sphere(Chart::sphere_geodesic, 200, 40);
  const auto prior = space.probability_weights();
  const auto tm = tilt(space, prior, sets::equator(Chart::sphere_geodesic), 1e4, 1.0);
  double near = 0.0;
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (std::abs(space.node(i)[0]) <= 0.05) near += tm.weights[i];
  }
  CHECK(near > 0.99);
}

TEST_CASE("tilt errors") {
  const auto box = discretize(GridSpec::box({Axis{0, 1, 10}}), [](const Point&) { return 1.0; });
  const auto prior = box.probability_weights();
  const auto set = sets::hyperplane(0, 0.5);
  auto kind_of = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::domain;
  };
  CHECK(kind_of([&] { tilt(box, prior, set, -1.0, 1.0); }) == ErrorKind::parameter);
  CHECK(kind_of([&] { tilt(box, prior, set, 1.0, 0.0); }) == ErrorKind::parameter);
  std::vector<double> unnormalized(prior.begin(), prior.end());
  unnormalized[0] += 0.5;
  CHECK(kind_of([&] { tilt(box, unnormalized, set, 1.0, 1.0); }) == ErrorKind::parameter);
  CHECK(kind_of([&] { tilt(box, std::vector<double>{1.0}, set, 1.0, 1.0); }) ==
        ErrorKind::alignment);
  // All prior mass far from the set with a huge tilt: C_a underflows.
  const auto far = sets::half_space(0, -10.0);
  CHECK(kind_of([&] { tilt(box, prior, far, 1e8, 100.0); }) == ErrorKind::overflow_guard);
}

TEST_CASE("normalization limit") {
  SUBCASE("hemisphere converges to its measure") {
    const auto space = uniform_sphere(Chart::sphere_geodesic, 100, 40);
    const auto prior = space.probability_weights();
    const std::vector<double> schedule{1e2, 1e3, 1e4, 1e5, 1e6};
    const auto c = normalization_limit(space, prior, sets::northern_hemisphere(Chart::sphere_geodesic),
                                       1.0, schedule);
    for (std::size_t k = 1; k < c.size(); ++k) CHECK(c[k] <= c[k - 1]);
    CHECK(std::abs(c.back() - 0.5) < 0.01);
  }
  SUBCASE("whole space stays at one") {
    const auto space = uniform_sphere(Chart::sphere_map, 50, 50);
    const auto c = normalization_limit(space, space.probability_weights(), sets::whole_space(), 1.0,
                                       std::vector<double>{1, 10, 100});
    for (double v : c) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("schedule must increase") {
    const auto space = uniform_sphere(Chart::sphere_map, 50, 50);
    CHECK_THROWS_AS(normalization_limit(space, space.probability_weights(), sets::whole_space(),
                                        1.0, std::vector<double>{10, 1}),
                    Error);
  }
}

TEST_CASE("sqrt(a) C_a on the equator approaches the Laplace constant") {
  // Oracle: sqrt(a) * int exp(-a phi^2) cos(phi)/2 dphi over the latitude
  // range, by Simpson quadrature independent of the grid.
  const double a = 1e4;
  const double oracle = std::sqrt(a) * simpson([&](double p) { return std::exp(-a * p * p) * std::cos(p) / 2; },
                                               -kPi / 2, kPi / 2, 200000);
  CHECK(oracle == doctest::Approx(std::sqrt(kPi) / 2).epsilon(1e-4));

  const auto fine = uniform_sphere(Chart::sphere_geodesic, 4000, 8);
  const auto tm = tilt(fine, fine.probability_weights(), sets::equator(Chart::sphere_geodesic), a, 1.0);
  CHECK(std::sqrt(a) * tm.normalization == doctest::Approx(oracle).epsilon(1e-4));

  // The cell-average rule keeps the constant on a grid far too coarse for the node rule.
  const auto coarse = uniform_sphere(Chart::sphere_geodesic, 100, 8);
  const auto set = sets::equator(Chart::sphere_geodesic);
  const auto field = squared_distance_field(coarse, set, 1.0, TiltRule::cell_average);
  const auto averaged = tilt(field, coarse.probability_weights(), 1e6);
  CHECK(std::sqrt(1e6) * averaged.normalization == doctest::Approx(std::sqrt(kPi) / 2).epsilon(0.01));
  const auto node = tilt(coarse, coarse.probability_weights(), set, 1e6, 1.0);
  CHECK(std::sqrt(1e6) * node.normalization < 1e-10);
}

TEST_CASE("cell_tilt against direct quadrature") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> lo_d(0.0, 0.8);
  std::uniform_real_distribution<double> len_d(1e-4, 0.2);
  std::uniform_real_distribution<double> log_a(-2.0, 5.0);
  std::uniform_real_distribution<double> r_d(0.05, 0.6);
  for (int k = 0; k < 200; ++k) {
    const double lo = lo_d(rng);
    const DistanceRange r2{lo, lo + len_d(rng)};
    // Every fourth case is untilted, which has its own code path.
    const double a = k % 4 == 0 ? 0.0 : std::pow(10.0, log_a(rng));
    const double R = r_d(rng);
    const auto ct = cell_tilt(r2, a, R);
    // Quadrature relative to exp(-a u1^2) to stay in range.
    const double u1 = std::min(r2.lo, R);
    auto g = [&](double t) {
      const double d = std::min(t, R);
      return std::exp(-a * (d * d - u1 * u1));
    };
    const int n = 200000;
    const double len = r2.hi - r2.lo;
    const double avg = simpson(g, r2.lo, r2.hi, n) / len;
    const double msq = simpson([&](double t) { const double d = std::min(t, R); return d * d * g(t); },
                               r2.lo, r2.hi, n) / (avg * len);
    CHECK(ct.log_factor == doctest::Approx(-a * u1 * u1 + std::log(avg)).epsilon(1e-6));
    CHECK(ct.mean_sq == doctest::Approx(msq).epsilon(1e-5));
  }
  const auto flat = cell_tilt(DistanceRange{0.3, 0.3}, 100.0, 1.0);
  CHECK(flat.log_factor == doctest::Approx(-9.0));
  CHECK(flat.mean_sq == doctest::Approx(0.09));
}

TEST_CASE("expected squared distance") {
  // Untilted equator on a fine latitude grid: pi^2/4 - 2.
  const auto space = uniform_sphere(Chart::sphere_geodesic, 2000, 4);
  const auto prior = space.probability_weights();
  const auto set = sets::equator(Chart::sphere_geodesic);
  const double e0 = expected_sq_distance(tilt(space, prior, set, 0.0, 10.0));
  CHECK(e0 == doctest::Approx(kPi * kPi / 4 - 2).epsilon(1e-5));
  const double e1 = expected_sq_distance(tilt(space, prior, set, 1.0, 10.0));
  const double e10 = expected_sq_distance(tilt(space, prior, set, 10.0, 10.0));
  CHECK(e10 < e1);
  CHECK(e1 < e0);
}

TEST_CASE("a_of_sigma") {
  const auto space = uniform_sphere(Chart::sphere_geodesic, 2000, 16);
  const auto prior = space.probability_weights();
  const auto set = sets::equator(Chart::sphere_geodesic);

  SUBCASE("Laplace width") {
    const auto m = a_of_sigma(space, prior, set, 1.0, 5e-5);
    CHECK(m.active);
    CHECK(m.a == doctest::Approx(1e4).epsilon(0.2));
    CHECK(std::abs(m.achieved - 5e-5) <= 1e-6 * 5e-5);
  }
  SUBCASE("inactive constraint") {
    const double top = expected_sq_distance(tilt(space, prior, set, 0.0, 1.0));
    const auto m = a_of_sigma(space, prior, set, 1.0, top);
    CHECK_FALSE(m.active);
    CHECK(m.a == 0.0);
  }
  SUBCASE("halving sigma increases a") {
    double previous = 0.0;
    for (double s = 0.1; s > 1e-4; s /= 2) {
      const auto m = a_of_sigma(space, prior, set, 1.0, s);
      CHECK(m.a > previous);
      previous = m.a;
    }
  }
  SUBCASE("below the grid floor") {
    const auto coarse = uniform_sphere(Chart::sphere_geodesic, 50, 16);
    try {
      (void)a_of_sigma(coarse, coarse.probability_weights(), set, 1.0, 1e-8);
      FAIL("expected a resolution error");
    } catch (const ResolutionError& e) {
      const double h = kPi / 100;  // half a latitude cell
      CHECK(e.minimum_achievable() == doctest::Approx(h * h).epsilon(1e-6));
    }
  }
}

TEST_CASE("boundary density on the sphere") {
  SUBCASE("map-metric meridian follows cos(phi)/4") {
    const auto space = uniform_sphere(Chart::sphere_map, 200, 400);
    const auto cells = uniform_cells(-kPi / 2, kPi / 2, 20, 2);
    const auto bd = boundary_density(space, space.probability_weights(),
                                     sets::meridian_pair(Chart::sphere_map), cells);
    const auto ref = sphere_reference(Chart::sphere_map, GreatCircle::meridian_pair);
    double total = 0.0;
    for (std::size_t k = 0; k < cells.size(); ++k) {
      CHECK(std::abs(bd.densities[k] - ref.mass(cells[k]) / cells[k].width()) <= 0.02);
      total += bd.masses[k];
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(bd.eta_steps.size() == 3);
  }
  SUBCASE("geodesic equator is uniform") {
    const auto space = uniform_sphere(Chart::sphere_geodesic, 200, 400);
    const auto cells = uniform_cells(-kPi, kPi, 40);
    const auto bd = boundary_density(space, space.probability_weights(),
                                     sets::equator(Chart::sphere_geodesic), cells);
    for (double d : bd.densities) CHECK(std::abs(d - 1 / (2 * kPi)) <= 0.02);
  }
  SUBCASE("positive-measure set reduces to the classical conditional") {
    const auto space = uniform_sphere(Chart::sphere_geodesic, 100, 200);
    const auto prior = space.probability_weights();
    const auto set = sets::northern_hemisphere(Chart::sphere_geodesic);
    const auto cells = uniform_cells(0.0, kPi / 2, 10);
    const auto bd = boundary_density(space, prior, set, cells);
    CHECK(bd.positive_measure);
    const double na = set_mass(space, prior, set);
    for (std::size_t k = 0; k < cells.size(); ++k) {
      double expected = 0.0;
      for (std::size_t i = 0; i < space.size(); ++i) {
        if (set.indicator(space.node(i)) && cells[k].contains(set.project(space.node(i)))) {
          expected += prior[i] / na;
        }
      }
      CHECK(bd.masses[k] == doctest::Approx(expected).epsilon(0.01));
    }
  }
}

TEST_CASE("boundary density outside the prior support") {
  // Prior vanishes on x < 0.5; the set {x = 0.25} lies outside its support.
  const auto box = discretize(GridSpec::box({Axis{0, 1, 100}}),
                              [](const Point& p) { return p[0] < 0.5 ? 0.0 : 1.0; });
  const std::vector<ProbeCell> cells{{0, 0.0, 1.0}};
  try {
    (void)boundary_density(box, box.probability_weights(), sets::hyperplane(0, 0.25), cells);
    FAIL("expected a support violation");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::support_violation);
  }
}

TEST_CASE("uniform_cells") {
  const auto cells = uniform_cells(-1.0, 1.0, 4, 2);
  REQUIRE(cells.size() == 8);
  CHECK(cells[0].branch == 0);
  CHECK(cells[4].branch == 1);
  CHECK(cells[3].contains(SetCoordinate{0, 1.0}));
  CHECK_THROWS_AS(uniform_cells(1.0, 1.0, 4), Error);
}
