#pragma once

// Relative entropy between discrete measures, and the finite-constraint
// entropy-minimization problem solved through its concave dual:
//
//   (ME)   min  sum_x f(x) ln f(x) nu(x)   s.t.  sum_x a_i(x) f(x) nu(x) = b_i
//   (DME)  max  lambda^T b - sum_x exp(-1 + lambda^T a(x)) nu(x)
//
// with primal recovery f*(x) = exp(-1 + lambda*^T a(x)).

#include <cstddef>
#include <span>
#include <vector>

namespace nullcond {

/// Nonnegative weights aligned to the nodes of a space (or to plain atoms).
struct DiscreteMeasure {
  std::vector<double> weights;
  double total = 0.0;

  DiscreteMeasure() = default;
  /// Throws ErrorKind::parameter on negative or non-finite weights.
  explicit DiscreteMeasure(std::vector<double> w);

  std::size_t size() const noexcept { return weights.size(); }
};

/// Ent(mu | nu) = sum mu ln(mu / nu), with 0 ln 0 = 0 and +infinity when mu
/// charges a node where nu vanishes. `mu` must be a probability vector.
double relative_entropy(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

struct LinearConstraint {
  std::vector<double> a;  // a(x) per node
  double b = 0.0;
};

inline constexpr std::size_t kMaxConstraints = 16;

struct DualOptions {
  int max_iterations = 500;
  /// Convergence when every |sum a_i f nu - b_i| is at most this.
  double residual_tolerance = 1e-12;
  /// Iterations without a 0.1% residual improvement before the problem is
  /// declared infeasible.
  int stagnation_window = 60;
};

struct DualSolution {
  std::vector<double> lambda;
  double primal_value = 0.0;
  double dual_value = 0.0;
  std::vector<double> density;    // f*(x)
  std::vector<double> posterior;  // f*(x) nu(x)
  std::vector<double> residuals;  // sum a_i f nu - b_i
  int iterations = 0;

  double duality_gap() const noexcept;
  double max_residual() const noexcept;
};

/// Primal/dual quantities implied by a given multiplier vector.
DualSolution evaluate_dual(const DiscreteMeasure& nu,
                           std::span<const LinearConstraint> constraints,
                           std::span<const double> lambda);

/// Damped Newton ascent on (DME) starting from lambda = 0.
///
/// Throws SolverError(non_convergence) when the iteration budget runs out and
/// SolverError(infeasible) when the residuals stop improving, both carrying
/// the residuals of the last iterate.
DualSolution solve_dual(const DiscreteMeasure& nu,
                        std::span<const LinearConstraint> constraints,
                        const DualOptions& options = {});

/// True iff the duality gap and every residual are within `tolerance`.
bool verify_duality(const DualSolution& solution, double tolerance = 1e-8);

}  // namespace nullcond
