#pragma once

// Discrete metric-measure spaces: midpoint-rule tensor grids carrying a base
// measure per node, together with the continuous distance oracle of the
// underlying space. Spheres are represented through the latitude/longitude
// chart (phi, theta) in (-pi/2, pi/2) x (-pi, pi].

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nullcond {

inline constexpr double kPi = std::numbers::pi;

/// Chart coordinates. One-dimensional boxes leave the second slot at 0.
/// On the sphere, [0] is latitude phi and [1] is longitude theta.
using Point = std::array<double, 2>;

enum class Chart { euclidean_box, product, sphere_geodesic, sphere_map };

std::string_view to_string(Chart chart) noexcept;
bool is_sphere(Chart chart) noexcept;

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  std::size_t count = 2;

  double step() const noexcept { return (hi - lo) / static_cast<double>(count); }
  double center(std::size_t i) const noexcept {
    return lo + (static_cast<double>(i) + 0.5) * step();
  }
};

/// Grid layout requested from discretize().
struct GridSpec {
  Chart chart = Chart::euclidean_box;
  std::vector<Axis> axes;

  /// Latitude/longitude grid over the whole sphere; `metric` must be one of
  /// the two sphere charts.
  static GridSpec sphere(Chart metric, std::size_t n_phi, std::size_t n_theta);
  static GridSpec box(std::vector<Axis> axes);
  /// Two-factor product E x F with E along axis 0 and F along axis 1.
  static GridSpec product(Axis x, Axis y);
};

/// Density of the base measure against the chart's reference measure
/// (Lebesgue on boxes, the normalized area element on the sphere).
using Density = std::function<double(const Point&)>;

/// Distance between two chart points, without domain validation.
double chart_distance(Chart chart, const Point& x, const Point& y) noexcept;

class MetricMeasureSpace {
 public:
  Chart chart() const noexcept { return chart_; }
  std::size_t dim() const noexcept { return axes_.size(); }
  const std::vector<Axis>& axes() const noexcept { return axes_; }
  std::vector<std::size_t> resolution() const;

  std::size_t size() const noexcept { return nodes_.size(); }
  std::span<const Point> nodes() const noexcept { return nodes_; }
  const Point& node(std::size_t i) const { return nodes_[i]; }
  std::span<const double> weights() const noexcept { return weights_; }
  double total_mass() const noexcept { return total_mass_; }

  /// Base measure rescaled to a probability vector.
  std::vector<double> probability_weights() const;

  std::size_t node_index(std::size_t i0, std::size_t i1 = 0) const noexcept {
    return dim() == 1 ? i0 : i0 * axes_[1].count + i1;
  }
  /// Node whose cell contains `x`.
  std::size_t locate(const Point& x) const;

  bool contains(const Point& x) const noexcept;
  /// Throws ErrorKind::domain when `x` is outside the chart domain.
  void require_contains(const Point& x) const;

  double distance(const Point& x, const Point& y) const;
  /// Distance between nodes; uses cached embeddings on the sphere.
  double node_distance(std::size_t i, std::size_t j) const noexcept;

  /// Largest grid step, in distance units along the chart axes.
  double cell_scale() const noexcept;

  /// Sample points of the cell around node i: center, corners and edge
  /// midpoints, clamped into the closed chart domain.
  std::vector<Point> cell_samples(std::size_t i) const;

  /// Index of the Y factor for product charts.
  static constexpr std::size_t y_axis = 1;

  std::string label() const;

 private:
  friend MetricMeasureSpace discretize(const GridSpec&, const Density&);

  Chart chart_ = Chart::euclidean_box;
  std::vector<Axis> axes_;
  std::vector<Point> nodes_;
  std::vector<double> weights_;
  std::vector<std::array<double, 3>> embedding_;  // sphere_geodesic only
  double total_mass_ = 0.0;
};

/// Midpoint-rule discretization: weight(node) = density(node) x cell volume
/// x chart Jacobian (cos(phi)/(4 pi) on the sphere).
MetricMeasureSpace discretize(const GridSpec& grid, const Density& density);

double distance(const MetricMeasureSpace& space, const Point& x, const Point& y);

/// min(d, R); throws ErrorKind::parameter unless R > 0.
double truncate(double d, double R);

/// Location of the nearest point of a conditioning set, expressed in the
/// set's own parameterization (branch index plus a scalar coordinate).
struct SetCoordinate {
  int branch = 0;
  double t = 0.0;
};

/// A closed set given through oracles. Oracles do not validate their input;
/// use set_distance() for checked evaluation.
struct ConditioningSet {
  std::string label;
  std::function<double(const Point&)> set_distance;
  std::function<bool(const Point&)> indicator;
  std::function<SetCoordinate(const Point&)> project;
};

double set_distance(const MetricMeasureSpace& space, const ConditioningSet& set,
                    const Point& x);

/// set_distance evaluated at every node.
std::vector<double> distance_field(const MetricMeasureSpace& space,
                                   const ConditioningSet& set);

using NodeMask = std::vector<std::uint8_t>;

/// Nodes whose squared distance to the set is at most `eta`.
NodeMask enlarge(const MetricMeasureSpace& space, const ConditioningSet& set,
                 double eta);

/// Base measure of the nodes carrying indicator 1.
double set_mass(const MetricMeasureSpace& space, std::span<const double> weights,
                const ConditioningSet& set);

/// Range of the set distance over one grid cell.
struct DistanceRange {
  double lo = 0.0;
  double hi = 0.0;

  /// Fraction of the cell within distance eta of the set, assuming the
  /// distance varies linearly across the cell.
  double coverage(double eta) const noexcept {
    if (eta >= hi) return 1.0;
    if (eta < lo) return 0.0;
    return (eta - lo) / (hi - lo);
  }
};

std::vector<DistanceRange> cell_distance_ranges(const MetricMeasureSpace& space,
                                                const ConditioningSet& set);

namespace sets {

/// The great circle {phi = 0}.
ConditioningSet equator(Chart chart);
/// The great circle {theta = theta0} u {theta = theta0 + pi}. Branch 0 is the
/// half through theta0.
ConditioningSet meridian_pair(Chart chart, double theta0 = 0.0);
/// {phi >= 0}.
ConditioningSet northern_hemisphere(Chart chart);
/// {|phi| <= half_width}.
ConditioningSet latitude_band(Chart chart, double half_width);
/// {x[axis] = value} in a box or product chart.
ConditioningSet hyperplane(std::size_t axis, double value);
/// {x[axis] <= threshold} in a box or product chart.
ConditioningSet half_space(std::size_t axis, double threshold);
ConditioningSet whole_space();

}  // namespace sets

}  // namespace nullcond
