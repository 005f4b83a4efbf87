#pragma once

// The exponentially tilted family
//
//   mu_a(x) = exp(-a * min(d(x, A), R)^2) nu(x) / C_a
//
// together with the sigma <-> a correspondence and the boundary-layer
// estimator of the limit posterior on a null set.

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "nullcond/metric_measure.hpp"

namespace nullcond {

/// How the tilt factor exp(-a d_R^2) is assigned to a grid cell.
///
/// `node` evaluates it at the node, which is the literal discretization.
/// `cell_average` averages it over the cell assuming the distance varies
/// linearly between its extremes on the cell; once the layer width 1/sqrt(a)
/// drops below the cell size this keeps the cell masses of the continuous
/// tilted measure instead of collapsing onto the nodes nearest the set.
enum class TiltRule { node, cell_average };

std::string_view to_string(TiltRule rule) noexcept;

/// Squared truncated distance min(d(x, A), R)^2 per node, shared between all
/// members of a tilted family so the distance oracle runs once per node.
struct SquaredDistanceField {
  std::shared_ptr<const std::vector<double>> values;
  double R = 1.0;
  TiltRule rule = TiltRule::node;
  /// Per-cell distance ranges, present for TiltRule::cell_average.
  std::shared_ptr<const std::vector<DistanceRange>> ranges;
  std::string space_label;
  std::string set_label;

  std::size_t size() const noexcept { return values ? values->size() : 0; }
};

/// Throws ErrorKind::parameter unless R > 0.
SquaredDistanceField squared_distance_field(const MetricMeasureSpace& space,
                                            const ConditioningSet& set, double R,
                                            TiltRule rule = TiltRule::node);

/// Cell average of exp(-a min(d, R)^2) for d uniform on [range.lo, range.hi],
/// in log form, and the mean of min(d, R)^2 under that tilted cell law.
struct CellTilt {
  double log_factor = 0.0;
  double mean_sq = 0.0;
};
CellTilt cell_tilt(const DistanceRange& range, double a, double R);

struct TiltedMeasure {
  double a = 0.0;
  double R = 1.0;
  std::vector<double> weights;  // probability vector over nodes
  double normalization = 1.0;   // C_a = sum exp(-a d_R^2) nu
  double log_normalization = 0.0;
  std::string space_ref;
  std::string set_ref;
  SquaredDistanceField field;
};

/// Log-domain tilt of a probability prior. Throws ErrorKind::parameter for
/// a < 0 or a prior that is not a probability vector, ErrorKind::alignment on
/// size mismatch and ErrorKind::overflow_guard when C_a underflows.
TiltedMeasure tilt(const SquaredDistanceField& field, std::span<const double> prior,
                   double a);

TiltedMeasure tilt(const MetricMeasureSpace& space, std::span<const double> prior,
                   const ConditioningSet& set, double a, double R);

/// C_a along an increasing schedule.
std::vector<double> normalization_limit(const MetricMeasureSpace& space,
                                        std::span<const double> prior,
                                        const ConditioningSet& set, double R,
                                        std::span<const double> a_schedule);

/// E_{mu_a}[d_R(x, A)^2]; under the cell-average rule each cell contributes
/// its tilted mean of d_R^2.
double expected_sq_distance(const TiltedMeasure& tm);

struct SigmaMatch {
  double a = 0.0;
  bool active = true;  // false when sigma_sq is already met by the prior
  double achieved = 0.0;
};

inline constexpr double kMaxTilt = 1e8;

/// Tilt whose expected squared distance equals sigma_sq to 1e-6 relative.
/// Throws ResolutionError (carrying the smallest achievable value) when
/// sigma_sq is below what a <= kMaxTilt reaches on this grid.
SigmaMatch a_of_sigma(const MetricMeasureSpace& space, std::span<const double> prior,
                      const ConditioningSet& set, double R, double sigma_sq);

SigmaMatch a_of_sigma(const SquaredDistanceField& field, std::span<const double> prior,
                      double sigma_sq);

/// A piece of the conditioning set: coordinates in [lo, hi) on one branch of
/// the set's parameterization.
struct ProbeCell {
  int branch = 0;
  double lo = 0.0;
  double hi = 0.0;

  bool contains(const SetCoordinate& c) const noexcept {
    return c.branch == branch && c.t >= lo && c.t < hi;
  }
  double width() const noexcept { return hi - lo; }
};

/// Fraction of a grid cell's mass credited to one probe cell.
struct ProbeShare {
  std::size_t cell = 0;
  double fraction = 0.0;
};

/// Per node, the probe cells overlapped by the projection of its grid cell
/// onto the set. The projected extent is the range of the set coordinate over
/// the cell's sample points on the node's branch, and mass is spread
/// uniformly over it; a degenerate extent goes whole to the cell holding the
/// node's projection. Fractions may sum to less than one where the extent
/// leaves the probe cells.
std::vector<std::vector<ProbeShare>> probe_shares(const MetricMeasureSpace& space,
                                                  const ConditioningSet& set,
                                                  std::span<const ProbeCell> cells);

/// `count` equal cells over [lo, hi) on each of `branches` branches.
std::vector<ProbeCell> uniform_cells(double lo, double hi, std::size_t count,
                                     int branches = 1);

struct BoundaryDensity {
  std::vector<ProbeCell> cells;
  std::vector<double> masses;     // posterior mass per cell, sums to 1
  std::vector<double> densities;  // masses / cell width
  std::vector<double> eta_steps;  // distance thresholds used, decreasing
  /// Extrapolated f_C(0) per cell; for a set of positive measure these are
  /// the classical masses nu(C n A) instead.
  std::vector<double> derivative_estimates;
  std::vector<std::string> warnings;
  bool positive_measure = false;
};

/// Default thresholds {4h, 2h, h} with h the grid's cell scale.
std::vector<double> default_eta_steps(const MetricMeasureSpace& space);

/// Posterior mass of each probe cell. Null sets go through the ratio
/// f_C(0) / f_A(0), with f_C(eta) = nu(C^eta) / eta estimated from
/// cell-fraction coverage and extrapolated to eta = 0; sets holding grid mass
/// reduce to nu(C n A) / nu(A). Throws ErrorKind::support_violation when a
/// cell carries no prior mass at the largest eta.
BoundaryDensity boundary_density(const MetricMeasureSpace& space,
                                 std::span<const double> prior,
                                 const ConditioningSet& set,
                                 std::span<const ProbeCell> cells,
                                 std::span<const double> eta_steps = {});

}  // namespace nullcond
