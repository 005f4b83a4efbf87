#pragma once

// Weak-convergence diagnostics for annealed families: a Levy-Prokhorov
// estimator restricted to a finite test family of sets, the annealing report,
// and the truncation, isometry and delta-convergence checks built on top.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nullcond/metric_measure.hpp"
#include "nullcond/pre_posterior.hpp"

namespace nullcond {

/// {0} followed by 1e-4 * 10^(k/10) for k = 0..40, i.e. 1e-4 ... 1.
std::vector<double> default_eps_grid();

struct LevyProkhorovOptions {
  std::vector<double> eps_grid = default_eps_grid();  // increasing
  /// Distance fields d(x, A) whose sublevel sets {d <= r} and superlevel
  /// sets {d > r} join the balls in the test family.
  std::vector<std::span<const double>> set_fields;
  /// Nodes used as ball centers; all nodes when the support is smaller.
  std::size_t max_centers = 384;
  /// Nodes whose combined mass adds up to at most this are dropped.
  double support_cutoff = 1e-9;
  unsigned threads = 0;  // 0: hardware concurrency
};

struct LevyProkhorovEstimate {
  double value = 0.0;        // smallest grid eps passing every test set
  double lower_bound = 0.0;  // largest grid eps some test set rejects
  bool saturated = false;    // no grid eps passed
  std::string worst_set;     // description of the set that forced `value`
  std::size_t test_sets = 0;
};

/// Upper estimate of the Levy-Prokhorov distance over the test family of
/// node-centered balls plus the level sets of `options.set_fields`.
LevyProkhorovEstimate levy_prokhorov(const MetricMeasureSpace& space,
                                     std::span<const double> mu,
                                     std::span<const double> nu,
                                     const LevyProkhorovOptions& options = {});

/// Geometric schedule a0 * factor^k, k = 0..steps.
std::vector<double> geometric_schedule(double a0, double factor, int steps);

struct AnnealOptions {
  double tolerance = 0.02;
  /// Squared-distance threshold of the enlargement whose complement mass is
  /// tracked.
  double outside_eta = 1e-2;
  TiltRule rule = TiltRule::node;
  LevyProkhorovOptions lp;
};

struct ConvergenceReport {
  std::vector<double> a_schedule;
  std::vector<double> normalizations;     // C_a
  std::vector<double> expected_sq;        // E[d_R^2]
  std::vector<double> mass_outside;       // mu_a(complement of A^eta)
  std::vector<LevyProkhorovEstimate> lp_gaps;  // between consecutive entries
  bool cauchy = false;
  bool all_saturated = false;
  double tolerance = 0.0;
  /// Tilt beyond which the boundary layer is thinner than a grid cell.
  double resolution_limit_a = 0.0;
  TiltedMeasure limit;  // member at the largest a
};

/// Tilts along the schedule and checks the Cauchy criterion on the last three
/// consecutive gaps. Throws ErrorKind::parameter unless the schedule is
/// strictly increasing with at least four entries.
ConvergenceReport anneal(const MetricMeasureSpace& space, std::span<const double> prior,
                         const ConditioningSet& set, double R,
                         std::span<const double> a_schedule,
                         const AnnealOptions& options = {});

struct MarginalDeltaCheck {
  std::vector<double> series;     // E[d_Y(Y, y_hat)^2] per measure
  std::vector<double> tail_mass;  // mu(|Y - y_hat| > radius) per measure
  bool chebyshev_holds = true;    // tail_mass * radius^2 <= series everywhere
  bool monotone = true;           // series non-increasing
  bool below_tolerance = false;   // last entry below tolerance
  bool passed = false;
};

/// Y-marginal concentration at y_hat on a product space. Node-rule measures
/// are evaluated at the node coordinates; cell-average measures use each
/// cell's tilted mean of (Y - y_hat)^2 and must come from a field for the
/// hyperplane {y = y_hat} (ErrorKind::parameter otherwise).
/// Throws ErrorKind::type_mismatch on non-product spaces.
MarginalDeltaCheck marginal_delta_check(const MetricMeasureSpace& space,
                                        std::span<const TiltedMeasure> sequence,
                                        double y_hat, double tolerance = 1e-4,
                                        double radius = 0.1);

/// LP gap between mu_{a,R1} and mu_{a,R2}.
LevyProkhorovEstimate truncation_invariance_test(const MetricMeasureSpace& space,
                                                 std::span<const double> prior,
                                                 const ConditioningSet& set, double R1,
                                                 double R2, double a,
                                                 const LevyProkhorovOptions& lp = {});

/// A point map that sends grid nodes onto grid nodes.
struct GridTransform {
  std::string name;
  std::function<Point(const Point&)> forward;
  std::function<Point(const Point&)> inverse;

  /// Longitude shift by a whole number of cells of `space`.
  static GridTransform theta_rotation(const MetricMeasureSpace& space, int cells);
  /// x[axis] -> center - x[axis] with center the midpoint of the axis.
  static GridTransform reflection(const MetricMeasureSpace& space, std::size_t axis);

  /// Node permutation: node i maps to node result[i]. Throws
  /// ErrorKind::parameter when some node does not land on a node.
  std::vector<std::size_t> permutation(const MetricMeasureSpace& space) const;
};

/// Image set h(A): distance d(h^-1(x), A), indicator and projection likewise.
ConditioningSet transform_set(const ConditioningSet& set, const GridTransform& h);

struct IsometryCheck {
  LevyProkhorovEstimate gap;  // LP(h# mu_a(A), mu_a(h(A)))
  double max_distance_defect = 0.0;
  double max_measure_defect = 0.0;
};

/// Equivariance of the tilted posterior under a grid-compatible isometry.
/// Throws ErrorKind::parameter when the transform is not grid compatible,
/// does not preserve distances on sampled node pairs, or does not preserve
/// the prior.
IsometryCheck isometry_invariance_test(const MetricMeasureSpace& space,
                                       std::span<const double> prior,
                                       const ConditioningSet& set,
                                       const GridTransform& transform, double a,
                                       double R = 1.0,
                                       const LevyProkhorovOptions& lp = {});

}  // namespace nullcond
