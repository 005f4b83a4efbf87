#include "nullcond/closed_form.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nullcond/error.hpp"

namespace nullcond {

std::string_view to_string(ReferenceKind kind) noexcept {
  switch (kind) {
    case ReferenceKind::positive_measure: return "positive_measure";
    case ReferenceKind::product_lebesgue: return "product_lebesgue";
    case ReferenceKind::sphere_uniform_circle: return "sphere_uniform_circle";
    case ReferenceKind::sphere_cosine_meridian: return "sphere_cosine_meridian";
    case ReferenceKind::ratio_limit: return "ratio_limit";
  }
  return "unknown";
}

namespace {

template <class F>
double simpson(F&& f, double lo, double hi, int intervals) {
  const int n = intervals + intervals % 2;
  const double h = (hi - lo) / n;
  double s = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
  return s * h / 3.0;
}

double extrapolate_linear(double e1, double r1, double e2, double r2) {
  // Line through (e1, r1) and (e2, r2) evaluated at 0.
  return (e1 * r2 - e2 * r1) / (e1 - e2);
}

void check_decreasing(std::span<const double> eps) {
  if (eps.empty()) throw Error(ErrorKind::parameter, "empty eps schedule");
  for (std::size_t k = 0; k < eps.size(); ++k) {
    if (!(eps[k] > 0.0) || (k > 0 && !(eps[k] < eps[k - 1]))) {
      throw Error(ErrorKind::parameter, "eps schedule must be positive and decreasing");
    }
  }
}

}  // namespace

double ReferencePosterior::mass(const ProbeCell& cell) const {
  return simpson([&](double t) { return density(SetCoordinate{cell.branch, t}); }, cell.lo,
                 cell.hi, 256);
}

ReferencePosterior conditional_positive(const MetricMeasureSpace& space,
                                        std::span<const double> prior,
                                        const ConditioningSet& set) {
  if (prior.size() != space.size()) {
    throw Error(ErrorKind::alignment, "prior weights do not match the space's nodes");
  }
  const double on_set = set_mass(space, prior, set);
  if (!(on_set > 0.0)) {
    throw Error(ErrorKind::null_measure,
                "'" + set.label + "' has zero prior mass; use the annealed posterior");
  }
  ReferencePosterior ref;
  ref.kind = ReferenceKind::positive_measure;
  ref.density = [on_set](const SetCoordinate&) { return 1.0 / on_set; };
  ref.node_weights.assign(space.size(), 0.0);
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (set.indicator(space.node(i))) {
      ref.node_weights[i] = prior[i] / on_set;
      ref.mass_check += ref.node_weights[i];
    }
  }
  return ref;
}

ReferencePosterior product_posterior(const MetricMeasureSpace& space, const Density& joint,
                                     double y_hat) {
  if (space.chart() != Chart::product) {
    throw Error(ErrorKind::type_mismatch, "product_posterior needs a product space");
  }
  const Axis x_axis = space.axes()[0];
  const Axis y_axis = space.axes()[MetricMeasureSpace::y_axis];
  if (!(y_hat > y_axis.lo && y_hat < y_axis.hi)) {
    throw Error(ErrorKind::parameter, "y_hat must lie inside the Y range");
  }
  double row = 0.0;
  for (std::size_t i = 0; i < x_axis.count; ++i) {
    row += joint(Point{x_axis.center(i), y_hat}) * x_axis.step();
  }
  if (!(row > 0.0)) {
    std::ostringstream msg;
    msg << "joint density vanishes on the row y = " << y_hat
        << "; y_hat is outside the prior support";
    throw Error(ErrorKind::support_violation, msg.str());
  }
  ReferencePosterior ref;
  ref.kind = ReferenceKind::product_lebesgue;
  ref.density = [joint, y_hat, row](const SetCoordinate& c) {
    return joint(Point{c.t, y_hat}) / row;
  };
  ref.mass_check = simpson([&](double x) { return ref.density(SetCoordinate{0, x}); },
                           x_axis.lo, x_axis.hi, 4000);
  return ref;
}

ReferencePosterior sphere_reference(Chart metric, GreatCircle circle) {
  if (!is_sphere(metric)) {
    throw Error(ErrorKind::type_mismatch, "sphere_reference needs a sphere metric");
  }
  ReferencePosterior ref;
  const bool cosine = metric == Chart::sphere_map && circle == GreatCircle::meridian_pair;
  if (cosine) {
    ref.kind = ReferenceKind::sphere_cosine_meridian;
    ref.density = [](const SetCoordinate& c) { return std::cos(c.t) / 4.0; };
  } else {
    ref.kind = ReferenceKind::sphere_uniform_circle;
    ref.density = [](const SetCoordinate&) { return 1.0 / (2 * kPi); };
  }
  if (circle == GreatCircle::equator) {
    ref.mass_check = ref.mass(ProbeCell{0, -kPi, kPi});
  } else {
    ref.mass_check = ref.mass(ProbeCell{0, -kPi / 2, kPi / 2}) +
                     ref.mass(ProbeCell{1, -kPi / 2, kPi / 2});
  }
  return ref;
}

RatioLimit ratio_limit_conditional(const MetricMeasureSpace& space,
                                   std::span<const double> prior,
                                   const ConditioningSet& set, const ConditioningSet& event,
                                   std::span<const double> eps_schedule) {
  check_decreasing(eps_schedule);
  if (prior.size() != space.size()) {
    throw Error(ErrorKind::alignment, "prior weights do not match the space's nodes");
  }
  const auto ra = cell_distance_ranges(space, set);
  const auto rb = cell_distance_ranges(space, event);
  RatioLimit out;
  out.eps.assign(eps_schedule.begin(), eps_schedule.end());
  for (double eps : eps_schedule) {
    double den = 0.0;
    double num = 0.0;
    for (std::size_t i = 0; i < space.size(); ++i) {
      const double ca = ra[i].coverage(eps);
      den += prior[i] * ca;
      num += prior[i] * std::min(ca, rb[i].coverage(eps));
    }
    if (!(den > 0.0)) {
      if (out.series.empty()) {
        throw Error(ErrorKind::support_violation,
                    "'" + set.label + "' has an empty enlargement at the largest eps");
      }
      break;
    }
    out.series.push_back(num / den);
  }
  const std::size_t m = out.series.size();
  out.limit = m < 2 ? out.series.back()
                    : extrapolate_linear(out.eps[m - 2], out.series[m - 2], out.eps[m - 1],
                                         out.series[m - 1]);
  return out;
}

ReferencePosterior ratio_limit_posterior(const MetricMeasureSpace& space,
                                         std::span<const double> prior,
                                         const ConditioningSet& set,
                                         std::span<const ProbeCell> cells,
                                         std::span<const double> eps_schedule) {
  check_decreasing(eps_schedule);
  if (cells.empty()) throw Error(ErrorKind::parameter, "ratio_limit_posterior needs cells");
  const auto ranges = cell_distance_ranges(space, set);
  const auto shares = probe_shares(space, set, cells);

  std::vector<std::vector<double>> ratios;
  std::vector<double> used;
  for (double eps : eps_schedule) {
    std::vector<double> m(cells.size(), 0.0);
    double den = 0.0;
    for (std::size_t i = 0; i < space.size(); ++i) {
      const double w = prior[i] * ranges[i].coverage(eps);
      den += w;
      for (const auto& s : shares[i]) m[s.cell] += w * s.fraction;
    }
    if (!(den > 0.0)) break;
    for (auto& x : m) x /= den;
    ratios.push_back(std::move(m));
    used.push_back(eps);
  }
  if (ratios.empty()) {
    throw Error(ErrorKind::support_violation,
                "'" + set.label + "' has an empty enlargement at the largest eps");
  }

  ReferencePosterior ref;
  ref.kind = ReferenceKind::ratio_limit;
  const std::size_t n = ratios.size();
  ref.node_weights.resize(cells.size());
  for (std::size_t k = 0; k < cells.size(); ++k) {
    ref.node_weights[k] = n < 2 ? ratios[0][k]
                                : extrapolate_linear(used[n - 2], ratios[n - 2][k],
                                                     used[n - 1], ratios[n - 1][k]);
    ref.mass_check += ref.node_weights[k];
  }
  std::vector<ProbeCell> cell_copy(cells.begin(), cells.end());
  ref.density = [cell_copy, masses = ref.node_weights](const SetCoordinate& c) {
    for (std::size_t k = 0; k < cell_copy.size(); ++k) {
      if (cell_copy[k].contains(c)) return masses[k] / cell_copy[k].width();
    }
    return 0.0;
  };
  return ref;
}

}  // namespace nullcond
