#pragma once

// Analytic reference posteriors and the ratio-limit baseline.

#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "nullcond/metric_measure.hpp"
#include "nullcond/pre_posterior.hpp"

namespace nullcond {

enum class ReferenceKind {
  positive_measure,
  product_lebesgue,
  sphere_uniform_circle,
  sphere_cosine_meridian,
  ratio_limit,
};

std::string_view to_string(ReferenceKind kind) noexcept;

struct ReferencePosterior {
  ReferenceKind kind = ReferenceKind::positive_measure;
  /// Density against arc length (or Lebesgue measure) of the set's
  /// parameterization; for positive-measure sets, the density 1/nu(A)
  /// against the prior on A.
  std::function<double(const SetCoordinate&)> density;
  /// Total mass of the density over the set, by quadrature.
  double mass_check = 0.0;
  /// Per-node posterior masses, when the reference lives on the grid.
  std::vector<double> node_weights;

  /// Integral of the density over a probe cell.
  double mass(const ProbeCell& cell) const;
};

/// Classical conditioning 1_A nu / nu(A). Throws ErrorKind::null_measure when
/// the set carries no grid mass.
ReferencePosterior conditional_positive(const MetricMeasureSpace& space,
                                        std::span<const double> prior,
                                        const ConditioningSet& set);

/// p(x, y_hat) / int p(x, y_hat) dx over the X factor of a product grid.
/// Throws ErrorKind::type_mismatch off product charts, ErrorKind::parameter
/// when y_hat is outside the Y range, and ErrorKind::support_violation when
/// the row integral vanishes.
ReferencePosterior product_posterior(const MetricMeasureSpace& space,
                                     const Density& joint, double y_hat);

enum class GreatCircle { equator, meridian_pair };

/// Uniform 1/(2 pi) per radian for every circle under the geodesic metric
/// and for the equator under the map metric; cos(phi)/4 on each branch of the
/// meridian pair under the map metric.
ReferencePosterior sphere_reference(Chart metric, GreatCircle circle);

struct RatioLimit {
  std::vector<double> eps;
  std::vector<double> series;  // nu(B^eps n A^eps) / nu(A^eps)
  double limit = 0.0;          // linear extrapolation from the last two
};

/// Ratio of enlargement masses with metric neighborhoods {d <= eps}, cells
/// straddling an enlargement counted by covered fraction. `eps_schedule`
/// must be decreasing. Throws ErrorKind::support_violation when A^eps is
/// empty at the largest eps.
RatioLimit ratio_limit_conditional(const MetricMeasureSpace& space,
                                   std::span<const double> prior,
                                   const ConditioningSet& set,
                                   const ConditioningSet& event,
                                   std::span<const double> eps_schedule);

/// Cellwise ratio-limit posterior on A (events = nodes projecting into each
/// probe cell), as a reference of kind ratio_limit whose node_weights hold
/// the per-cell masses.
ReferencePosterior ratio_limit_posterior(const MetricMeasureSpace& space,
                                         std::span<const double> prior,
                                         const ConditioningSet& set,
                                         std::span<const ProbeCell> cells,
                                         std::span<const double> eps_schedule);

}  // namespace nullcond
