#include <algorithm>
#include <cmath>
#include <string>

#include "nullcond/error.hpp"
#include "nullcond/metric_measure.hpp"

namespace nullcond::sets {

namespace {

void require_sphere(Chart chart, const char* what) {
  if (!is_sphere(chart)) {
    throw Error(ErrorKind::type_mismatch,
                std::string(what) + " is only defined on sphere charts");
  }
}

}  // namespace

ConditioningSet equator(Chart chart) {
  require_sphere(chart, "equator");
  // Both metrics give |phi|: under the map metric the wrapped latitude
  // difference min(|phi|, pi - |phi|) is |phi| on the open chart.
  return ConditioningSet{
      "equator",
      [](const Point& x) { return std::abs(x[0]); },
      [](const Point& x) { return x[0] == 0.0; },
      [](const Point& x) { return SetCoordinate{0, x[1]}; },
  };
}

ConditioningSet meridian_pair(Chart chart, double theta0) {
  require_sphere(chart, "meridian_pair");
  std::string label = "meridian_pair";
  if (theta0 != 0.0) label += "@" + std::to_string(theta0);

  if (chart == Chart::sphere_geodesic) {
    // Great circle through the poles in the plane with normal
    // (-sin theta0, cos theta0, 0); distance is arcsin of |<x, n>|.
    return ConditioningSet{
        label,
        [theta0](const Point& x) {
          const double s = std::cos(x[0]) * std::abs(std::sin(x[1] - theta0));
          return std::asin(std::min(s, 1.0));
        },
        [theta0](const Point& x) { return std::sin(x[1] - theta0) == 0.0; },
        [theta0](const Point& x) {
          const double c = std::cos(x[1] - theta0);
          const double foot = std::atan2(std::sin(x[0]), std::cos(x[0]) * std::abs(c));
          return SetCoordinate{c >= 0.0 ? 0 : 1, foot};
        },
    };
  }
  return ConditioningSet{
      label,
      [theta0](const Point& x) {
        const double dt = std::abs(std::remainder(x[1] - theta0, 2 * kPi));
        return std::min(dt, kPi - dt);
      },
      [theta0](const Point& x) {
        const double dt = std::abs(std::remainder(x[1] - theta0, 2 * kPi));
        return dt == 0.0 || dt == kPi;
      },
      [theta0](const Point& x) {
        const double dt = std::abs(std::remainder(x[1] - theta0, 2 * kPi));
        return SetCoordinate{dt <= kPi / 2 ? 0 : 1, x[0]};
      },
  };
}

ConditioningSet northern_hemisphere(Chart chart) {
  require_sphere(chart, "northern_hemisphere");
  const bool wrap = chart == Chart::sphere_map;
  return ConditioningSet{
      "northern_hemisphere",
      [wrap](const Point& x) {
        if (x[0] >= 0.0) return 0.0;
        // The map metric identifies latitudes modulo pi, so the southern
        // edge is also reachable across the pole seam.
        return wrap ? std::min(-x[0], x[0] + kPi / 2) : -x[0];
      },
      [](const Point& x) { return x[0] >= 0.0; },
      [](const Point& x) { return SetCoordinate{0, std::max(x[0], 0.0)}; },
  };
}

ConditioningSet latitude_band(Chart chart, double half_width) {
  require_sphere(chart, "latitude_band");
  if (!(half_width > 0.0 && half_width < kPi / 2)) {
    throw Error(ErrorKind::parameter, "latitude band half width must be in (0, pi/2)");
  }
  const bool wrap = chart == Chart::sphere_map;
  return ConditioningSet{
      "latitude_band",
      [half_width, wrap](const Point& x) {
        const double a = std::abs(x[0]);
        if (a <= half_width) return 0.0;
        return wrap ? std::min(a - half_width, kPi - a - half_width) : a - half_width;
      },
      [half_width](const Point& x) { return std::abs(x[0]) <= half_width; },
      [half_width](const Point& x) {
        return SetCoordinate{0, std::clamp(x[0], -half_width, half_width)};
      },
  };
}

ConditioningSet hyperplane(std::size_t axis, double value) {
  if (axis > 1) throw Error(ErrorKind::parameter, "hyperplane axis must be 0 or 1");
  const std::size_t other = 1 - axis;
  return ConditioningSet{
      "hyperplane",
      [axis, value](const Point& x) { return std::abs(x[axis] - value); },
      [axis, value](const Point& x) {
        return std::abs(x[axis] - value) <= 1e-12 * (1.0 + std::abs(value));
      },
      [other](const Point& x) { return SetCoordinate{0, x[other]}; },
  };
}

ConditioningSet half_space(std::size_t axis, double threshold) {
  if (axis > 1) throw Error(ErrorKind::parameter, "half-space axis must be 0 or 1");
  const std::size_t other = 1 - axis;
  return ConditioningSet{
      "half_space",
      [axis, threshold](const Point& x) { return std::max(0.0, x[axis] - threshold); },
      [axis, threshold](const Point& x) { return x[axis] <= threshold; },
      [other](const Point& x) { return SetCoordinate{0, x[other]}; },
  };
}

ConditioningSet whole_space() {
  return ConditioningSet{
      "whole_space",
      [](const Point&) { return 0.0; },
      [](const Point&) { return true; },
      [](const Point& x) { return SetCoordinate{0, x[0]}; },
  };
}

}  // namespace nullcond::sets
