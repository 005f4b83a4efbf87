#include "nullcond/metric_measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "nullcond/error.hpp"

namespace nullcond {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::domain: return "domain";
    case ErrorKind::parameter: return "parameter";
    case ErrorKind::degenerate_prior: return "degenerate_prior";
    case ErrorKind::alignment: return "alignment";
    case ErrorKind::non_convergence: return "non_convergence";
    case ErrorKind::infeasible: return "infeasible";
    case ErrorKind::overflow_guard: return "overflow_guard";
    case ErrorKind::resolution: return "resolution";
    case ErrorKind::support_violation: return "support_violation";
    case ErrorKind::null_measure: return "null_measure";
    case ErrorKind::validation: return "validation";
    case ErrorKind::type_mismatch: return "type_mismatch";
  }
  return "unknown";
}

std::string_view to_string(Chart chart) noexcept {
  switch (chart) {
    case Chart::euclidean_box: return "euclidean_box";
    case Chart::product: return "product";
    case Chart::sphere_geodesic: return "sphere_geodesic";
    case Chart::sphere_map: return "sphere_map";
  }
  return "unknown";
}

bool is_sphere(Chart chart) noexcept {
  return chart == Chart::sphere_geodesic || chart == Chart::sphere_map;
}

GridSpec GridSpec::sphere(Chart metric, std::size_t n_phi, std::size_t n_theta) {
  if (!is_sphere(metric)) {
    throw Error(ErrorKind::parameter, "GridSpec::sphere needs a sphere chart");
  }
  return GridSpec{metric, {Axis{-kPi / 2, kPi / 2, n_phi}, Axis{-kPi, kPi, n_theta}}};
}

GridSpec GridSpec::box(std::vector<Axis> axes) {
  return GridSpec{Chart::euclidean_box, std::move(axes)};
}

GridSpec GridSpec::product(Axis x, Axis y) {
  return GridSpec{Chart::product, {x, y}};
}

namespace {

std::array<double, 3> embed(const Point& p) noexcept {
  const double c = std::cos(p[0]);
  return {c * std::cos(p[1]), c * std::sin(p[1]), std::sin(p[0])};
}

double angle_between(const std::array<double, 3>& u,
                     const std::array<double, 3>& v) noexcept {
  // atan2 of |u x v| and u.v keeps full precision for nearby points, where
  // arccos of the dot product loses half the digits.
  const double cx = u[1] * v[2] - u[2] * v[1];
  const double cy = u[2] * v[0] - u[0] * v[2];
  const double cz = u[0] * v[1] - u[1] * v[0];
  const double dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
  return std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), dot);
}

}  // namespace

double chart_distance(Chart chart, const Point& x, const Point& y) noexcept {
  switch (chart) {
    case Chart::euclidean_box:
    case Chart::product:
      return std::hypot(x[0] - y[0], x[1] - y[1]);
    case Chart::sphere_geodesic:
      return angle_between(embed(x), embed(y));
    case Chart::sphere_map:
      // Both differences reduced to their minimal representative.
      return std::hypot(std::remainder(x[0] - y[0], kPi),
                        std::remainder(x[1] - y[1], 2 * kPi));
  }
  return 0.0;
}

std::vector<std::size_t> MetricMeasureSpace::resolution() const {
  std::vector<std::size_t> out;
  for (const auto& axis : axes_) out.push_back(axis.count);
  return out;
}

std::vector<double> MetricMeasureSpace::probability_weights() const {
  std::vector<double> p(weights_.begin(), weights_.end());
  for (auto& w : p) w /= total_mass_;
  return p;
}

std::size_t MetricMeasureSpace::locate(const Point& x) const {
  require_contains(x);
  std::size_t idx[2] = {0, 0};
  for (std::size_t k = 0; k < dim(); ++k) {
    const auto& axis = axes_[k];
    const double pos = std::floor((x[k] - axis.lo) / axis.step());
    idx[k] = static_cast<std::size_t>(
        std::clamp(pos, 0.0, static_cast<double>(axis.count - 1)));
  }
  return node_index(idx[0], idx[1]);
}

bool MetricMeasureSpace::contains(const Point& x) const noexcept {
  if (is_sphere(chart_)) {
    return x[0] > -kPi / 2 && x[0] < kPi / 2 && x[1] > -kPi && x[1] <= kPi;
  }
  for (std::size_t k = 0; k < dim(); ++k) {
    if (!(x[k] >= axes_[k].lo && x[k] <= axes_[k].hi)) return false;
  }
  return dim() == 2 || x[1] == 0.0;
}

void MetricMeasureSpace::require_contains(const Point& x) const {
  if (!contains(x)) {
    std::ostringstream msg;
    msg << "point (" << x[0] << ", " << x[1] << ") outside the "
        << to_string(chart_) << " chart domain";
    throw Error(ErrorKind::domain, msg.str());
  }
}

double MetricMeasureSpace::distance(const Point& x, const Point& y) const {
  require_contains(x);
  require_contains(y);
  return chart_distance(chart_, x, y);
}

double MetricMeasureSpace::node_distance(std::size_t i, std::size_t j) const noexcept {
  if (chart_ == Chart::sphere_geodesic) {
    return angle_between(embedding_[i], embedding_[j]);
  }
  return chart_distance(chart_, nodes_[i], nodes_[j]);
}

double MetricMeasureSpace::cell_scale() const noexcept {
  double h = 0.0;
  for (const auto& axis : axes_) h = std::max(h, axis.step());
  return h;
}

std::vector<Point> MetricMeasureSpace::cell_samples(std::size_t i) const {
  static constexpr double kOffsets[3] = {-0.5, 0.0, 0.5};
  const Point& c = nodes_[i];
  std::vector<Point> out;
  if (dim() == 1) {
    for (double o : kOffsets) out.push_back({c[0] + o * axes_[0].step(), 0.0});
    return out;
  }
  out.reserve(9);
  for (double o0 : kOffsets) {
    for (double o1 : kOffsets) {
      Point p{c[0] + o0 * axes_[0].step(), c[1] + o1 * axes_[1].step()};
      if (is_sphere(chart_)) p[0] = std::clamp(p[0], -kPi / 2, kPi / 2);
      out.push_back(p);
    }
  }
  return out;
}

std::string MetricMeasureSpace::label() const {
  std::ostringstream out;
  out << to_string(chart_);
  for (std::size_t k = 0; k < axes_.size(); ++k) {
    out << (k == 0 ? "[" : "x") << axes_[k].count;
  }
  out << "]";
  return out.str();
}

MetricMeasureSpace discretize(const GridSpec& grid, const Density& density) {
  if (grid.axes.empty() || grid.axes.size() > 2) {
    throw Error(ErrorKind::parameter, "grids must have one or two axes");
  }
  if (grid.chart != Chart::euclidean_box && grid.axes.size() != 2) {
    throw Error(ErrorKind::parameter,
                std::string(to_string(grid.chart)) + " grids need two axes");
  }
  for (const auto& axis : grid.axes) {
    if (axis.count < 2) {
      throw Error(ErrorKind::parameter, "resolution must be at least 2 per axis");
    }
    if (!(axis.hi > axis.lo)) {
      throw Error(ErrorKind::parameter, "axis bounds must satisfy lo < hi");
    }
  }

  MetricMeasureSpace space;
  space.chart_ = grid.chart;
  space.axes_ = grid.axes;
  const bool sphere = is_sphere(grid.chart);
  const std::size_t n0 = grid.axes[0].count;
  const std::size_t n1 = grid.axes.size() == 2 ? grid.axes[1].count : 1;
  double cell = grid.axes[0].step();
  if (grid.axes.size() == 2) cell *= grid.axes[1].step();

  space.nodes_.reserve(n0 * n1);
  space.weights_.reserve(n0 * n1);
  double total = 0.0;
  for (std::size_t i0 = 0; i0 < n0; ++i0) {
    for (std::size_t i1 = 0; i1 < n1; ++i1) {
      Point p{grid.axes[0].center(i0),
              grid.axes.size() == 2 ? grid.axes[1].center(i1) : 0.0};
      const double rho = density(p);
      if (!(rho >= 0.0) || !std::isfinite(rho)) {
        throw Error(ErrorKind::parameter,
                    "density must be finite and nonnegative on the grid");
      }
      // The cos(phi) Jacobian is integrated exactly over the latitude band
      // of the cell; evaluating it at the node alone leaves an O(h^2) bias in
      // the total mass.
      double jacobian = 1.0;
      if (sphere) {
        const Axis& lat = grid.axes[0];
        const double lo = lat.lo + static_cast<double>(i0) * lat.step();
        const double hi = lo + lat.step();
        jacobian = (std::sin(hi) - std::sin(lo)) / (lat.step() * 4 * kPi);
      }
      const double w = rho * cell * jacobian;
      space.nodes_.push_back(p);
      space.weights_.push_back(w);
      total += w;
    }
  }
  if (!(total > 0.0)) {
    throw Error(ErrorKind::degenerate_prior, "base measure has zero total mass");
  }
  space.total_mass_ = total;
  if (grid.chart == Chart::sphere_geodesic) {
    space.embedding_.reserve(space.nodes_.size());
    for (const auto& p : space.nodes_) space.embedding_.push_back(embed(p));
  }
  return space;
}

double distance(const MetricMeasureSpace& space, const Point& x, const Point& y) {
  return space.distance(x, y);
}

double truncate(double d, double R) {
  if (!(R > 0.0)) {
    throw Error(ErrorKind::parameter, "truncation radius R must be positive");
  }
  return std::min(d, R);
}

double set_distance(const MetricMeasureSpace& space, const ConditioningSet& set,
                    const Point& x) {
  space.require_contains(x);
  return set.set_distance(x);
}

std::vector<double> distance_field(const MetricMeasureSpace& space,
                                   const ConditioningSet& set) {
  std::vector<double> field;
  field.reserve(space.size());
  for (const auto& p : space.nodes()) field.push_back(set.set_distance(p));
  return field;
}

NodeMask enlarge(const MetricMeasureSpace& space, const ConditioningSet& set,
                 double eta) {
  if (!(eta > 0.0)) {
    throw Error(ErrorKind::parameter, "enlargement threshold must be positive");
  }
  NodeMask mask(space.size(), 0);
  for (std::size_t i = 0; i < space.size(); ++i) {
    const double d = set.set_distance(space.node(i));
    mask[i] = d * d <= eta ? 1 : 0;
  }
  return mask;
}

double set_mass(const MetricMeasureSpace& space, std::span<const double> weights,
                const ConditioningSet& set) {
  if (weights.size() != space.size()) {
    throw Error(ErrorKind::alignment, "weights do not match the space's nodes");
  }
  double mass = 0.0;
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (set.indicator(space.node(i))) mass += weights[i];
  }
  return mass;
}

std::vector<DistanceRange> cell_distance_ranges(const MetricMeasureSpace& space,
                                                const ConditioningSet& set) {
  std::vector<DistanceRange> out;
  out.reserve(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) {
    DistanceRange r{std::numeric_limits<double>::infinity(), 0.0};
    for (const auto& p : space.cell_samples(i)) {
      const double d = set.set_distance(p);
      r.lo = std::min(r.lo, d);
      r.hi = std::max(r.hi, d);
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace nullcond
