#include "nullcond/pre_posterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "nullcond/error.hpp"

namespace nullcond {

namespace {

void check_prior(std::span<const double> prior, std::size_t n) {
  if (prior.size() != n) {
    throw Error(ErrorKind::alignment, "prior weights do not match the space's nodes");
  }
  double total = 0.0;
  for (double w : prior) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw Error(ErrorKind::parameter, "prior weights must be finite and nonnegative");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error(ErrorKind::parameter, "prior must be a probability vector");
  }
}

/// Value at zero of the polynomial through (x[k], y[k]).
double neville_at_zero(std::span<const double> x, std::vector<double> y) {
  const std::size_t n = y.size();
  for (std::size_t level = 1; level < n; ++level) {
    for (std::size_t i = 0; i + level < n; ++i) {
      const double xi = x[i];
      const double xj = x[i + level];
      y[i] = (xj * y[i] - xi * y[i + 1]) / (xj - xi);
    }
  }
  return y[0];
}

/// exp(x^2) erfc(x) without overflow.
double erfcx(double x) {
  if (x < 26.0) return std::exp(x * x) * std::erfc(x);
  const double inv = 1.0 / (x * x);
  return (1.0 - 0.5 * inv + 0.75 * inv * inv - 1.875 * inv * inv * inv) /
         (x * std::sqrt(kPi));
}

/// Integrals of exp(-a (t^2 - u1^2)) and t^2 exp(-a (t^2 - u1^2)) over
/// [u1, u2], i.e. scaled by exp(a u1^2).
std::pair<double, double> scaled_gaussian_moments(double u1, double u2, double a) {
  const double len = u2 - u1;
  if (a * len * (u1 + u2) < 1.0) {
    // The integrand varies by less than a factor e: 8-point Gauss-Legendre.
    static constexpr double kNode[4] = {0.1834346424956498, 0.5255324099163290,
                                        0.7966664774136267, 0.9602898564975363};
    static constexpr double kWeight[4] = {0.3626837833783620, 0.3137066458778873,
                                          0.2223810344533745, 0.1012285362903763};
    double g = 0.0;
    double m = 0.0;
    for (int k = 0; k < 4; ++k) {
      for (double sign : {-1.0, 1.0}) {
        const double t = 0.5 * (u1 + u2) + sign * 0.5 * len * kNode[k];
        const double f = std::exp(-a * (t - u1) * (t + u1));
        g += kWeight[k] * f;
        m += kWeight[k] * t * t * f;
      }
    }
    return {0.5 * len * g, 0.5 * len * m};
  }
  const double s = std::sqrt(a);
  const double x1 = s * u1;
  const double x2 = s * u2;
  const double tail = std::exp(-(x2 - x1) * (x2 + x1));  // exp(-a (u2^2 - u1^2))
  const double g = std::sqrt(kPi) / (2 * s) * (erfcx(x1) - tail * erfcx(x2));
  const double m = (g - (u2 * tail - u1)) / (2 * a);
  return {g, m};
}

}  // namespace

std::string_view to_string(TiltRule rule) noexcept {
  return rule == TiltRule::node ? "node" : "cell_average";
}

CellTilt cell_tilt(const DistanceRange& range, double a, double R) {
  const double lo = range.lo;
  const double hi = std::max(range.hi, range.lo);
  const double len = hi - lo;
  const double u1 = std::min(lo, R);
  if (len <= 1e-14 * (1.0 + hi) || a == 0.0) {
    if (a == 0.0 && len > 0.0) {
      // Untilted: plain average of min(d, R)^2 over the range.
      const double u2 = std::min(hi, R);
      const double flat = std::max(hi - std::max(lo, R), 0.0);
      return {0.0, ((u2 * u2 * u2 - u1 * u1 * u1) / 3.0 + R * R * flat) / len};
    }
    return {-a * u1 * u1, u1 * u1};
  }
  const double u2 = std::min(hi, R);
  // Everything below is relative to exp(-a u1^2).
  auto [g, m] = u2 > u1 ? scaled_gaussian_moments(u1, u2, a) : std::pair{0.0, 0.0};
  const double flat_len = std::max(hi - std::max(lo, R), 0.0);
  const double flat = flat_len * std::exp(-a * (R - u1) * (R + u1));
  const double total = g + flat;
  return {-a * u1 * u1 + std::log(total / len), (m + R * R * flat) / total};
}

SquaredDistanceField squared_distance_field(const MetricMeasureSpace& space,
                                            const ConditioningSet& set, double R,
                                            TiltRule rule) {
  if (!(R > 0.0)) {
    throw Error(ErrorKind::parameter, "truncation radius R must be positive");
  }
  auto values = std::make_shared<std::vector<double>>();
  values->reserve(space.size());
  for (const auto& p : space.nodes()) {
    const double d = std::min(set.set_distance(p), R);
    values->push_back(d * d);
  }
  SquaredDistanceField field{std::move(values), R, rule, nullptr, space.label(), set.label};
  if (rule == TiltRule::cell_average) {
    field.ranges = std::make_shared<const std::vector<DistanceRange>>(
        cell_distance_ranges(space, set));
  }
  return field;
}

namespace {

// Log-domain tilt without the underflow guard on C_a; the weights stay exact
// even when C_a itself is below the double range.
TiltedMeasure tilt_unguarded(const SquaredDistanceField& field, std::span<const double> prior,
                             double a) {
  if (!(a >= 0.0) || !std::isfinite(a)) {
    throw Error(ErrorKind::parameter, "tilt parameter a must be finite and nonnegative");
  }
  if (!field.values) {
    throw Error(ErrorKind::parameter, "tilt: empty distance field");
  }
  const auto& sq = *field.values;
  check_prior(prior, sq.size());

  const bool averaged = field.rule == TiltRule::cell_average;
  if (averaged && (!field.ranges || field.ranges->size() != sq.size())) {
    throw Error(ErrorKind::parameter, "tilt: cell-average rule without distance ranges");
  }

  // Exponents -a d^2 + ln nu; shift by the max before exponentiating.
  std::vector<double> w(sq.size(), 0.0);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < sq.size(); ++i) {
    if (prior[i] == 0.0) continue;
    const double factor = averaged ? cell_tilt((*field.ranges)[i], a, field.R).log_factor
                                   : -a * sq[i];
    w[i] = factor + std::log(prior[i]);
    top = std::max(top, w[i]);
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < sq.size(); ++i) {
    if (prior[i] == 0.0) continue;
    w[i] = std::exp(w[i] - top);
    sum += w[i];
  }
  for (auto& x : w) x /= sum;

  TiltedMeasure tm;
  tm.a = a;
  tm.R = field.R;
  tm.weights = std::move(w);
  tm.log_normalization = top + std::log(sum);
  tm.normalization = std::exp(tm.log_normalization);
  tm.space_ref = field.space_label;
  tm.set_ref = field.set_label;
  tm.field = field;
  return tm;
}

}  // namespace

TiltedMeasure tilt(const SquaredDistanceField& field, std::span<const double> prior,
                   double a) {
  auto tm = tilt_unguarded(field, prior, a);
  if (tm.normalization == 0.0) {
    std::ostringstream msg;
    msg << "C_a underflows at a = " << a << " (ln C_a = " << tm.log_normalization
        << "); use log_normalization";
    throw Error(ErrorKind::overflow_guard, msg.str());
  }
  return tm;
}

TiltedMeasure tilt(const MetricMeasureSpace& space, std::span<const double> prior,
                   const ConditioningSet& set, double a, double R) {
  return tilt(squared_distance_field(space, set, R), prior, a);
}

std::vector<double> normalization_limit(const MetricMeasureSpace& space,
                                        std::span<const double> prior,
                                        const ConditioningSet& set, double R,
                                        std::span<const double> a_schedule) {
  for (std::size_t k = 1; k < a_schedule.size(); ++k) {
    if (!(a_schedule[k] > a_schedule[k - 1])) {
      throw Error(ErrorKind::parameter, "a schedule must be strictly increasing");
    }
  }
  const auto field = squared_distance_field(space, set, R);
  std::vector<double> out;
  out.reserve(a_schedule.size());
  for (double a : a_schedule) out.push_back(tilt(field, prior, a).normalization);
  return out;
}

double expected_sq_distance(const TiltedMeasure& tm) {
  if (!tm.field.values || tm.field.values->size() != tm.weights.size()) {
    throw Error(ErrorKind::alignment, "tilted measure has no matching distance field");
  }
  const auto& sq = *tm.field.values;
  double e = 0.0;
  if (tm.field.rule == TiltRule::cell_average) {
    const auto& ranges = *tm.field.ranges;
    for (std::size_t i = 0; i < sq.size(); ++i) {
      if (tm.weights[i] > 0.0) e += tm.weights[i] * cell_tilt(ranges[i], tm.a, tm.R).mean_sq;
    }
    return e;
  }
  for (std::size_t i = 0; i < sq.size(); ++i) e += tm.weights[i] * sq[i];
  return e;
}

SigmaMatch a_of_sigma(const SquaredDistanceField& field, std::span<const double> prior,
                      double sigma_sq) {
  if (!(sigma_sq > 0.0)) {
    throw Error(ErrorKind::parameter, "sigma_sq must be positive");
  }
  auto value = [&](double a) { return expected_sq_distance(tilt_unguarded(field, prior, a)); };

  const double at_zero = value(0.0);
  if (sigma_sq >= at_zero) return SigmaMatch{0.0, false, at_zero};

  const double at_max = value(kMaxTilt);
  if (at_max > sigma_sq) {
    std::ostringstream msg;
    msg << "sigma_sq = " << sigma_sq << " is below the grid floor; the smallest "
        << "achievable value at a = " << kMaxTilt << " is " << at_max;
    throw ResolutionError(msg.str(), at_max);
  }

  // Bracket geometrically, then bisect in log a.
  double lo = 0.0;
  double hi = 1.0;
  while (hi < kMaxTilt && value(hi) > sigma_sq) {
    lo = hi;
    hi = std::min(hi * 4.0, kMaxTilt);
  }
  double a = hi;
  double e = value(hi);
  for (int it = 0; it < 200 && std::abs(e - sigma_sq) > 1e-6 * sigma_sq; ++it) {
    a = lo == 0.0 ? 0.5 * hi : std::sqrt(lo * hi);
    e = value(a);
    (e > sigma_sq ? lo : hi) = a;
  }
  if (std::abs(e - sigma_sq) > 1e-6 * sigma_sq) {
    throw Error(ErrorKind::non_convergence, "a_of_sigma: bisection did not reach 1e-6");
  }
  return SigmaMatch{a, true, e};
}

SigmaMatch a_of_sigma(const MetricMeasureSpace& space, std::span<const double> prior,
                      const ConditioningSet& set, double R, double sigma_sq) {
  return a_of_sigma(squared_distance_field(space, set, R), prior, sigma_sq);
}

std::vector<ProbeCell> uniform_cells(double lo, double hi, std::size_t count,
                                     int branches) {
  if (count == 0 || !(hi > lo) || branches < 1) {
    throw Error(ErrorKind::parameter, "uniform_cells: need count >= 1 and lo < hi");
  }
  std::vector<ProbeCell> out;
  const double step = (hi - lo) / static_cast<double>(count);
  for (int b = 0; b < branches; ++b) {
    for (std::size_t k = 0; k < count; ++k) {
      const double l = lo + static_cast<double>(k) * step;
      // Close the last cell exactly at hi so rounding never drops the edge.
      const double h = k + 1 == count ? std::nextafter(hi, hi + 1.0) : l + step;
      out.push_back(ProbeCell{b, l, h});
    }
  }
  return out;
}

std::vector<double> default_eta_steps(const MetricMeasureSpace& space) {
  const double h = space.cell_scale();
  return {4 * h, 2 * h, h};
}

std::vector<std::vector<ProbeShare>> probe_shares(const MetricMeasureSpace& space,
                                                  const ConditioningSet& set,
                                                  std::span<const ProbeCell> cells) {
  std::vector<std::vector<ProbeShare>> out(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto at = set.project(space.node(i));
    double lo = at.t;
    double hi = at.t;
    for (const auto& p : space.cell_samples(i)) {
      const auto c = set.project(p);
      if (c.branch != at.branch) continue;
      lo = std::min(lo, c.t);
      hi = std::max(hi, c.t);
    }
    const double width = hi - lo;
    for (std::size_t k = 0; k < cells.size(); ++k) {
      const auto& cell = cells[k];
      if (cell.branch != at.branch) continue;
      if (!(width > 1e-14 * (1.0 + std::abs(hi)))) {
        if (cell.contains(at)) {
          out[i].push_back({k, 1.0});
          break;
        }
        continue;
      }
      const double overlap = std::min(hi, cell.hi) - std::max(lo, cell.lo);
      if (overlap > 0.0) out[i].push_back({k, overlap / width});
    }
  }
  return out;
}

BoundaryDensity boundary_density(const MetricMeasureSpace& space,
                                 std::span<const double> prior,
                                 const ConditioningSet& set,
                                 std::span<const ProbeCell> cells,
                                 std::span<const double> eta_steps) {
  check_prior(prior, space.size());
  if (cells.empty()) throw Error(ErrorKind::parameter, "boundary_density needs probe cells");

  std::vector<double> etas(eta_steps.begin(), eta_steps.end());
  if (etas.empty()) etas = default_eta_steps(space);
  for (std::size_t k = 0; k < etas.size(); ++k) {
    if (!(etas[k] > 0.0) || (k > 0 && !(etas[k] < etas[k - 1]))) {
      throw Error(ErrorKind::parameter, "eta steps must be positive and decreasing");
    }
  }

  BoundaryDensity out;
  out.cells.assign(cells.begin(), cells.end());
  out.eta_steps = etas;
  const std::size_t nc = cells.size();

  const auto shares = probe_shares(space, set, cells);

  auto finish = [&](std::vector<double> raw) {
    double total = 0.0;
    for (double& v : raw) total += v;
    if (!(total > 0.0)) {
      throw Error(ErrorKind::support_violation, "probe cells carry no posterior mass");
    }
    out.masses.resize(nc);
    out.densities.resize(nc);
    for (std::size_t k = 0; k < nc; ++k) {
      out.masses[k] = raw[k] / total;
      out.densities[k] = out.masses[k] / cells[k].width();
    }
    return out;
  };

  const double on_set = set_mass(space, prior, set);
  if (on_set > 0.0) {
    out.positive_measure = true;
    std::vector<double> raw(nc, 0.0);
    for (std::size_t i = 0; i < space.size(); ++i) {
      if (!set.indicator(space.node(i))) continue;
      for (const auto& s : shares[i]) raw[s.cell] += prior[i] * s.fraction;
    }
    out.derivative_estimates = raw;
    return finish(std::move(raw));
  }

  const auto ranges = cell_distance_ranges(space, set);
  // mass[j][k] = nu(C_k^eta_j) with partial coverage of straddling cells.
  std::vector<std::vector<double>> mass(etas.size(), std::vector<double>(nc, 0.0));
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (shares[i].empty() || prior[i] == 0.0) continue;
    for (std::size_t j = 0; j < etas.size(); ++j) {
      const double covered = prior[i] * ranges[i].coverage(etas[j]);
      for (const auto& s : shares[i]) mass[j][s.cell] += covered * s.fraction;
    }
  }

  for (std::size_t k = 0; k < nc; ++k) {
    if (!(mass[0][k] > 0.0)) {
      std::ostringstream msg;
      msg << "probe cell [" << cells[k].lo << ", " << cells[k].hi << ") on branch "
          << cells[k].branch << " has no prior mass within eta = " << etas[0]
          << "; the set is not inside the prior support";
      throw Error(ErrorKind::support_violation, msg.str());
    }
    for (std::size_t j = 1; j < etas.size(); ++j) {
      if (mass[j][k] > mass[j - 1][k] * (1.0 + 1e-12)) {
        std::ostringstream msg;
        msg << "cell " << k << ": nu(C^eta) not monotone in eta; estimate is noisy";
        out.warnings.push_back(msg.str());
        break;
      }
    }
  }

  // Up to three smallest steps at which every cell is charged.
  std::vector<std::size_t> viable;
  for (std::size_t j = 0; j < etas.size(); ++j) {
    const bool ok = std::all_of(mass[j].begin(), mass[j].end(),
                                [](double m) { return m > 0.0; });
    if (ok) viable.push_back(j);
  }
  if (viable.size() > 3) viable.erase(viable.begin(), viable.end() - 3);

  std::vector<double> xs;
  for (auto j : viable) xs.push_back(etas[j]);
  std::vector<double> raw(nc, 0.0);
  for (std::size_t k = 0; k < nc; ++k) {
    std::vector<double> ys;
    for (auto j : viable) ys.push_back(mass[j][k] / etas[j]);
    double f = neville_at_zero(xs, std::move(ys));
    if (f < 0.0) {
      out.warnings.push_back("cell " + std::to_string(k) +
                             ": negative extrapolated density clamped to 0");
      f = 0.0;
    }
    raw[k] = f;
  }
  out.derivative_estimates = raw;
  return finish(std::move(raw));
}

}  // namespace nullcond
