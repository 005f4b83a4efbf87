#include <doctest.h>

#include <cmath>
#include <limits>

#include "nullcond/entropy_dual.hpp"
#include "nullcond/error.hpp"

using namespace nullcond;

TEST_CASE("relative entropy values") {
  const DiscreteMeasure half({0.5, 0.5});
  CHECK(relative_entropy(half, half) == 0.0);
  CHECK(relative_entropy(half, DiscreteMeasure({0.25, 0.75})) ==
        doctest::Approx(0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0)).epsilon(1e-14));
  CHECK(relative_entropy(half, DiscreteMeasure({0.25, 0.75})) ==
        doctest::Approx(0.14384).epsilon(1e-4));
  CHECK(std::isinf(relative_entropy(DiscreteMeasure({1, 0}), DiscreteMeasure({0, 1}))));
  // 0 ln 0 = 0: a node where both vanish contributes nothing.
  CHECK(relative_entropy(DiscreteMeasure({1, 0}), DiscreteMeasure({1, 0})) == 0.0);
}

TEST_CASE("relative entropy errors") {
  CHECK_THROWS_AS(DiscreteMeasure({0.5, -0.1}), Error);
  CHECK_THROWS_AS(DiscreteMeasure({0.5, std::numeric_limits<double>::quiet_NaN()}), Error);
  try {
    (void)relative_entropy(DiscreteMeasure({0.5, 0.5}), DiscreteMeasure({1.0}));
    FAIL("expected an alignment error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::alignment);
  }
  try {
    (void)relative_entropy(DiscreteMeasure({0.5, 0.6}), DiscreteMeasure({0.5, 0.5}));
    FAIL("expected a parameter error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::parameter);
  }
}

TEST_CASE("normalization only returns the prior") {
  const DiscreteMeasure nu({0.1, 0.2, 0.3, 0.4});
  const std::vector<LinearConstraint> cs{{{1, 1, 1, 1}, 1.0}};
  const auto sol = solve_dual(nu, cs);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(sol.density[i] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sol.posterior[i] == doctest::Approx(nu.weights[i]).epsilon(1e-12));
  }
  CHECK(std::abs(sol.primal_value) < 1e-12);
  CHECK(verify_duality(sol));
}

TEST_CASE("finite atoms reproduce the classical conditional") {
  const DiscreteMeasure nu({0.1, 0.2, 0.3, 0.4});
  const std::vector<LinearConstraint> cs{{{1, 1, 1, 1}, 1.0}, {{1, 1, 0, 0}, 1.0}};
  const auto sol = solve_dual(nu, cs);
  const double t = 0.1 / (0.1 + 0.2);
  CHECK(std::abs(sol.posterior[0] - t) < 1e-10);
  CHECK(std::abs(sol.posterior[1] - (1 - t)) < 1e-10);
  CHECK(sol.posterior[2] < 1e-10);
  CHECK(sol.posterior[3] < 1e-10);
  CHECK(sol.duality_gap() <= 1e-8);
  CHECK(verify_duality(sol));
}

TEST_CASE("mean constraint on two atoms") {
  const DiscreteMeasure nu({0.5, 0.5});
  const std::vector<LinearConstraint> cs{{{1, 1}, 1.0}, {{0, 1}, 0.8}};
  const auto sol = solve_dual(nu, cs);
  CHECK(sol.posterior[0] == doctest::Approx(0.2).epsilon(1e-10));
  CHECK(sol.posterior[1] == doctest::Approx(0.8).epsilon(1e-10));
}

TEST_CASE("mean constraint on three atoms matches the exponential family") {
  // Oracle: q_i proportional to nu_i exp(s i), with s found by bisection.
  const std::vector<double> p{0.2, 0.5, 0.3};
  const double target = 1.4;
  auto mean_at = [&](double s) {
    double z = 0.0;
    double m = 0.0;
    for (int i = 0; i < 3; ++i) {
      z += p[i] * std::exp(s * i);
      m += i * p[i] * std::exp(s * i);
    }
    return m / z;
  };
  double lo = -20.0;
  double hi = 20.0;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    (mean_at(mid) < target ? lo : hi) = mid;
  }
  const double s = 0.5 * (lo + hi);
  double z = 0.0;
  for (int i = 0; i < 3; ++i) z += p[i] * std::exp(s * i);

  const auto sol = solve_dual(DiscreteMeasure(p), std::vector<LinearConstraint>{
                                                      {{1, 1, 1}, 1.0}, {{0, 1, 2}, target}});
  for (int i = 0; i < 3; ++i) {
    CHECK(sol.posterior[i] == doctest::Approx(p[i] * std::exp(s * i) / z).epsilon(1e-9));
    // Solution form exp(-1 + lambda . a(x)).
    const double f = std::exp(-1.0 + sol.lambda[0] + sol.lambda[1] * i);
    CHECK(std::abs(sol.density[i] - f) <= 1e-10 * std::max(1.0, f));
  }
  CHECK(sol.duality_gap() <= 1e-8);
}

TEST_CASE("evaluate_dual and verify_duality") {
  const DiscreteMeasure nu({0.1, 0.2, 0.3, 0.4});
  const std::vector<LinearConstraint> cs{{{1, 1, 1, 1}, 1.0}, {{0, 1, 2, 3}, 1.5}};
  const auto sol = solve_dual(nu, cs);
  CHECK(verify_duality(sol));
  auto lambda = sol.lambda;
  lambda[0] += 0.1;
  const auto off = evaluate_dual(nu, cs, lambda);
  CHECK_FALSE(verify_duality(off));
  // Weak duality: any multiplier gives a dual value below the primal optimum.
  CHECK(off.dual_value <= sol.primal_value + 1e-12);
}

TEST_CASE("solver failures carry residuals") {
  const DiscreteMeasure nu({0.25, 0.25, 0.5});
  SUBCASE("contradictory constraints") {
    const std::vector<LinearConstraint> cs{{{1, 1, 1}, 1.0}, {{1, 1, 1}, 2.0}};
    try {
      (void)solve_dual(nu, cs);
      FAIL("expected a solver error");
    } catch (const SolverError& e) {
      CHECK(e.kind() == ErrorKind::infeasible);
      CHECK(e.residuals().size() == 2);
    }
  }
  SUBCASE("iteration budget") {
    const std::vector<LinearConstraint> cs{{{1, 1, 1}, 1.0}, {{0, 1, 2}, 1.9}};
    DualOptions opt;
    opt.max_iterations = 1;
    try {
      (void)solve_dual(nu, cs, opt);
      FAIL("expected a solver error");
    } catch (const SolverError& e) {
      CHECK(e.kind() == ErrorKind::non_convergence);
      CHECK(e.residuals().size() == 2);
    }
  }
  SUBCASE("too many constraints") {
    std::vector<LinearConstraint> cs(kMaxConstraints + 1, {{1, 1, 1}, 1.0});
    CHECK_THROWS_AS(solve_dual(nu, cs), Error);
  }
}
