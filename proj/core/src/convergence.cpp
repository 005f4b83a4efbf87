#include "nullcond/convergence.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

#include "nullcond/error.hpp"

namespace nullcond {

std::vector<double> default_eps_grid() {
  std::vector<double> grid{0.0};
  for (int k = 0; k <= 40; ++k) grid.push_back(1e-4 * std::pow(10.0, k / 10.0));
  return grid;
}

namespace {

constexpr double kSlack = 1e-12;

/// One member of the test family, in sorted form: nodes ordered by a scalar
/// value v, with the candidate sets being {v <= r} (lower) or {v > r}
/// (upper) for every attained r. The eps-enlargement of {v <= r} is taken as
/// {v <= r + eps}, that of {v > r} as {v > r - eps}.
struct SortedProfile {
  std::vector<double> v;
  std::vector<double> cum_mu;  // prefix sums in sorted order, size n + 1
  std::vector<double> cum_nu;
};

SortedProfile make_profile(std::span<const double> values, std::span<const std::size_t> support,
                           std::span<const double> mu, std::span<const double> nu) {
  const std::size_t n = support.size();
  // Sorting (value, position) pairs in place is much faster than an
  // indirect index sort on large supports; ties keep support order.
  std::vector<std::pair<double, std::size_t>> order(n);
  for (std::size_t k = 0; k < n; ++k) order[k] = {values[k], k};
  std::sort(order.begin(), order.end());
  SortedProfile p;
  p.v.resize(n);
  p.cum_mu.assign(n + 1, 0.0);
  p.cum_nu.assign(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t node = support[order[k].second];
    p.v[k] = order[k].first;
    p.cum_mu[k + 1] = p.cum_mu[k] + mu[node];
    p.cum_nu[k + 1] = p.cum_nu[k] + nu[node];
  }
  return p;
}

/// Both defining inequalities for every sublevel set {v <= r}.
bool lower_sets_pass(const SortedProfile& p, double eps) {
  const std::size_t n = p.v.size();
  std::size_t j = 0;  // count of nodes with v <= r + eps
  for (std::size_t k = 0; k < n; ++k) {
    if (k + 1 < n && p.v[k + 1] == p.v[k]) continue;  // not the end of a tie group
    const double reach = p.v[k] + eps;
    if (j < k + 1) j = k + 1;
    while (j < n && p.v[j] <= reach) ++j;
    const double mu_c = p.cum_mu[k + 1];
    const double nu_c = p.cum_nu[k + 1];
    if (nu_c > p.cum_mu[j] + eps + kSlack) return false;
    if (mu_c > p.cum_nu[j] + eps + kSlack) return false;
  }
  return true;
}

/// Both defining inequalities for every superlevel set {v > r}, including
/// the whole support.
bool upper_sets_pass(const SortedProfile& p, double eps) {
  const std::size_t n = p.v.size();
  const double mu_total = p.cum_mu[n];
  const double nu_total = p.cum_nu[n];
  if (std::abs(mu_total - nu_total) > eps + kSlack) return false;
  std::size_t j = 0;  // first node with v > r - eps
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (p.v[k + 1] == p.v[k]) continue;
    const double floor = p.v[k] - eps;
    while (j < n && !(p.v[j] > floor)) ++j;
    const double mu_c = mu_total - p.cum_mu[k + 1];
    const double nu_c = nu_total - p.cum_nu[k + 1];
    const double mu_e = mu_total - p.cum_mu[j];
    const double nu_e = nu_total - p.cum_nu[j];
    if (nu_c > mu_e + eps + kSlack) return false;
    if (mu_c > nu_e + eps + kSlack) return false;
  }
  return true;
}

struct TestSet {
  enum class Kind { ball, set_field } kind;
  std::size_t index;  // center node or field index
};

struct BlockResult {
  std::size_t grid_index = 0;
  std::size_t test = 0;  // test that forced grid_index
  bool any = false;
};

std::string describe(const MetricMeasureSpace& space, const TestSet& t) {
  std::ostringstream out;
  if (t.kind == TestSet::Kind::ball) {
    const auto& c = space.node(t.index);
    out << "balls centered at (" << c[0] << ", " << c[1] << ")";
  } else {
    out << "level sets of conditioning distance #" << t.index;
  }
  return out.str();
}

}  // namespace

LevyProkhorovEstimate levy_prokhorov(const MetricMeasureSpace& space,
                                     std::span<const double> mu,
                                     std::span<const double> nu,
                                     const LevyProkhorovOptions& options) {
  const std::size_t n = space.size();
  if (mu.size() != n || nu.size() != n) {
    throw Error(ErrorKind::alignment, "levy_prokhorov: measures not aligned with the space");
  }
  const auto& grid = options.eps_grid;
  if (grid.empty()) throw Error(ErrorKind::parameter, "levy_prokhorov: empty eps grid");
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!(grid[k] >= 0.0) || (k > 0 && !(grid[k] > grid[k - 1]))) {
      throw Error(ErrorKind::parameter, "eps grid must be nonnegative and increasing");
    }
  }
  for (const auto& f : options.set_fields) {
    if (f.size() != n) throw Error(ErrorKind::alignment, "set field not aligned with the space");
  }

  // Support: drop the lightest nodes up to the cutoff.
  std::vector<std::size_t> by_mass(n);
  std::iota(by_mass.begin(), by_mass.end(), std::size_t{0});
  std::stable_sort(by_mass.begin(), by_mass.end(), [&](std::size_t a, std::size_t b) {
    return mu[a] + nu[a] < mu[b] + nu[b];
  });
  std::size_t dropped = 0;
  for (double cum = 0.0; dropped < n; ++dropped) {
    const std::size_t i = by_mass[dropped];
    if (cum + mu[i] + nu[i] > options.support_cutoff) break;
    cum += mu[i] + nu[i];
  }
  std::vector<std::size_t> support(by_mass.begin() + static_cast<std::ptrdiff_t>(dropped),
                                   by_mass.end());
  std::sort(support.begin(), support.end());

  // Centers: heaviest nodes and nodes with the largest disagreement.
  std::vector<std::size_t> centers;
  if (support.size() <= options.max_centers) {
    centers = support;
  } else {
    std::vector<std::size_t> heavy = support;
    std::vector<std::size_t> diff = support;
    std::stable_sort(heavy.begin(), heavy.end(), [&](std::size_t a, std::size_t b) {
      return mu[a] + nu[a] > mu[b] + nu[b];
    });
    std::stable_sort(diff.begin(), diff.end(), [&](std::size_t a, std::size_t b) {
      return std::abs(mu[a] - nu[a]) > std::abs(mu[b] - nu[b]);
    });
    std::vector<std::uint8_t> taken(n, 0);
    auto take_from = [&](const std::vector<std::size_t>& list, std::size_t quota) {
      for (std::size_t i = 0, got = 0; i < list.size() && got < quota; ++i) {
        if (!taken[list[i]]) {
          taken[list[i]] = 1;
          centers.push_back(list[i]);
          ++got;
        }
      }
    };
    take_from(heavy, options.max_centers / 2);
    take_from(diff, options.max_centers - centers.size());
    std::sort(centers.begin(), centers.end());
  }

  std::vector<TestSet> tests;
  for (std::size_t f = 0; f < options.set_fields.size(); ++f) {
    tests.push_back({TestSet::Kind::set_field, f});
  }
  for (auto c : centers) tests.push_back({TestSet::Kind::ball, c});

  auto passes = [&](const TestSet& t, const SortedProfile& p, double eps) {
    if (t.kind == TestSet::Kind::ball) return lower_sets_pass(p, eps);
    return lower_sets_pass(p, eps) && upper_sets_pass(p, eps);
  };

  auto build = [&](const TestSet& t) {
    std::vector<double> values(support.size());
    if (t.kind == TestSet::Kind::ball) {
      for (std::size_t k = 0; k < support.size(); ++k) {
        values[k] = space.node_distance(t.index, support[k]);
      }
    } else {
      const auto& field = options.set_fields[t.index];
      for (std::size_t k = 0; k < support.size(); ++k) values[k] = field[support[k]];
    }
    return make_profile(values, support, mu, nu);
  };

  // Fixed-size blocks keep the reduction independent of the thread count.
  constexpr std::size_t kBlock = 16;
  const std::size_t blocks = (tests.size() + kBlock - 1) / kBlock;
  std::vector<BlockResult> results(blocks);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t b; (b = next.fetch_add(1)) < blocks;) {
      BlockResult r;
      for (std::size_t t = b * kBlock; t < std::min(tests.size(), (b + 1) * kBlock); ++t) {
        const auto profile = build(tests[t]);
        if (passes(tests[t], profile, grid[r.grid_index])) continue;
        std::size_t lo = r.grid_index + 1;
        std::size_t hi = grid.size();  // grid.size() means "none passes"
        while (lo < hi) {
          const std::size_t mid = (lo + hi) / 2;
          if (passes(tests[t], profile, grid[mid])) hi = mid;
          else lo = mid + 1;
        }
        r.grid_index = lo;
        r.test = t;
        r.any = true;
        if (lo == grid.size()) break;
      }
      results[b] = r;
    }
  };

  unsigned threads = options.threads ? options.threads : std::thread::hardware_concurrency();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(blocks)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  LevyProkhorovEstimate est;
  est.test_sets = tests.size();
  std::size_t best = 0;
  const BlockResult* worst = nullptr;
  for (const auto& r : results) {
    if (r.any && (worst == nullptr || r.grid_index > best)) {
      best = r.grid_index;
      worst = &r;
    }
  }
  if (best == grid.size()) {
    est.saturated = true;
    est.value = grid.back();
    est.lower_bound = grid.back();
  } else {
    est.value = grid[best];
    est.lower_bound = best == 0 ? 0.0 : grid[best - 1];
  }
  if (worst != nullptr) est.worst_set = describe(space, tests[worst->test]);
  return est;
}

std::vector<double> geometric_schedule(double a0, double factor, int steps) {
  if (!(a0 > 0.0) || !(factor > 1.0) || steps < 0) {
    throw Error(ErrorKind::parameter, "schedule needs a0 > 0, factor > 1, steps >= 0");
  }
  std::vector<double> out;
  for (int k = 0; k <= steps; ++k) out.push_back(a0 * std::pow(factor, k));
  return out;
}

ConvergenceReport anneal(const MetricMeasureSpace& space, std::span<const double> prior,
                         const ConditioningSet& set, double R,
                         std::span<const double> a_schedule, const AnnealOptions& options) {
  if (a_schedule.size() < 4) {
    throw Error(ErrorKind::parameter, "anneal needs at least four schedule entries");
  }
  for (std::size_t k = 1; k < a_schedule.size(); ++k) {
    if (!(a_schedule[k] > a_schedule[k - 1])) {
      throw Error(ErrorKind::parameter, "a schedule must be strictly increasing");
    }
  }

  const auto field = squared_distance_field(space, set, R, options.rule);
  std::vector<double> dist(field.values->size());
  for (std::size_t i = 0; i < dist.size(); ++i) dist[i] = std::sqrt((*field.values)[i]);
  auto lp = options.lp;
  lp.set_fields.push_back(dist);

  ConvergenceReport rep;
  rep.a_schedule.assign(a_schedule.begin(), a_schedule.end());
  rep.tolerance = options.tolerance;
  const double h = space.cell_scale();
  rep.resolution_limit_a = 1.0 / (h * h);

  TiltedMeasure previous;
  for (std::size_t k = 0; k < a_schedule.size(); ++k) {
    auto tm = tilt(field, prior, a_schedule[k]);
    rep.normalizations.push_back(tm.normalization);
    rep.expected_sq.push_back(expected_sq_distance(tm));
    double outside = 0.0;
    for (std::size_t i = 0; i < tm.weights.size(); ++i) {
      if ((*field.values)[i] > options.outside_eta) outside += tm.weights[i];
    }
    rep.mass_outside.push_back(outside);
    if (k > 0) rep.lp_gaps.push_back(levy_prokhorov(space, previous.weights, tm.weights, lp));
    previous = std::move(tm);
  }
  rep.limit = std::move(previous);

  rep.all_saturated = std::all_of(rep.lp_gaps.begin(), rep.lp_gaps.end(),
                                  [](const auto& g) { return g.saturated; });
  const std::size_t m = rep.lp_gaps.size();
  rep.cauchy = m >= 3 && std::all_of(rep.lp_gaps.end() - 3, rep.lp_gaps.end(), [&](const auto& g) {
                 return !g.saturated && g.value <= options.tolerance;
               });
  return rep;
}

MarginalDeltaCheck marginal_delta_check(const MetricMeasureSpace& space,
                                        std::span<const TiltedMeasure> sequence,
                                        double y_hat, double tolerance, double radius) {
  if (space.chart() != Chart::product) {
    throw Error(ErrorKind::type_mismatch, "marginal_delta_check needs a product space");
  }
  if (!(radius > 0.0)) throw Error(ErrorKind::parameter, "radius must be positive");
  MarginalDeltaCheck out;
  for (const auto& tm : sequence) {
    if (tm.weights.size() != space.size()) {
      throw Error(ErrorKind::alignment, "tilted measure not aligned with the space");
    }
    // Under the cell-average rule a cell's Y-law is the tilted law of its
    // distance to the set, which is |Y - y_hat| when the set is {y = y_hat}.
    const bool averaged = tm.field.rule == TiltRule::cell_average;
    if (averaged && (!tm.field.values || !tm.field.ranges ||
                     tm.field.values->size() != space.size())) {
      throw Error(ErrorKind::alignment, "cell-average measure without its distance field");
    }
    double e = 0.0;
    double tail = 0.0;
    for (std::size_t i = 0; i < space.size(); ++i) {
      const double dy = std::abs(space.node(i)[MetricMeasureSpace::y_axis] - y_hat);
      double sq = dy * dy;
      if (averaged) {
        const double d_r = std::min(dy, tm.R);
        if (std::abs((*tm.field.values)[i] - d_r * d_r) > 1e-12 * (1.0 + d_r * d_r)) {
          throw Error(ErrorKind::parameter,
                      "cell-average measures must be tilted toward the hyperplane y = y_hat");
        }
        const auto& range = (*tm.field.ranges)[i];
        if (range.hi <= tm.R) sq = cell_tilt(range, tm.a, tm.R).mean_sq;
      }
      e += tm.weights[i] * sq;
      if (dy > radius) tail += tm.weights[i];
    }
    if (!out.series.empty() && e > out.series.back()) out.monotone = false;
    if (tail * radius * radius > e * (1.0 + 1e-12)) out.chebyshev_holds = false;
    out.series.push_back(e);
    out.tail_mass.push_back(tail);
  }
  out.below_tolerance = !out.series.empty() && out.series.back() < tolerance;
  out.passed = out.below_tolerance && out.monotone && out.chebyshev_holds;
  return out;
}

LevyProkhorovEstimate truncation_invariance_test(const MetricMeasureSpace& space,
                                                 std::span<const double> prior,
                                                 const ConditioningSet& set, double R1,
                                                 double R2, double a,
                                                 const LevyProkhorovOptions& lp) {
  const auto m1 = tilt(space, prior, set, a, R1);
  const auto m2 = tilt(space, prior, set, a, R2);
  auto options = lp;
  const auto dist = distance_field(space, set);
  options.set_fields.push_back(dist);
  return levy_prokhorov(space, m1.weights, m2.weights, options);
}

namespace {

double wrap_longitude(double theta) {
  // Into (-pi, pi].
  double t = std::remainder(theta, 2 * kPi);
  if (t <= -kPi) t += 2 * kPi;
  return t;
}

}  // namespace

GridTransform GridTransform::theta_rotation(const MetricMeasureSpace& space, int cells) {
  if (!is_sphere(space.chart())) {
    throw Error(ErrorKind::parameter, "theta rotation needs a sphere chart");
  }
  const double shift = cells * space.axes()[1].step();
  return GridTransform{
      "theta_rotation(" + std::to_string(cells) + " cells)",
      [shift](const Point& p) { return Point{p[0], wrap_longitude(p[1] + shift)}; },
      [shift](const Point& p) { return Point{p[0], wrap_longitude(p[1] - shift)}; },
  };
}

GridTransform GridTransform::reflection(const MetricMeasureSpace& space, std::size_t axis) {
  if (axis >= space.dim()) throw Error(ErrorKind::parameter, "reflection axis out of range");
  const double center = 0.5 * (space.axes()[axis].lo + space.axes()[axis].hi);
  const bool longitude = is_sphere(space.chart()) && axis == 1;
  auto map = [axis, center, longitude](const Point& p) {
    Point q = p;
    q[axis] = 2 * center - p[axis];
    if (longitude) q[axis] = wrap_longitude(q[axis]);
    return q;
  };
  return GridTransform{"reflection(axis " + std::to_string(axis) + ")", map, map};
}

std::vector<std::size_t> GridTransform::permutation(const MetricMeasureSpace& space) const {
  std::vector<std::size_t> perm(space.size());
  std::vector<std::uint8_t> hit(space.size(), 0);
  for (std::size_t i = 0; i < space.size(); ++i) {
    const Point p = forward(space.node(i));
    if (!space.contains(p)) {
      throw Error(ErrorKind::parameter, name + " maps a node outside the chart");
    }
    const std::size_t j = space.locate(p);
    const Point& q = space.node(j);
    for (std::size_t k = 0; k < space.dim(); ++k) {
      const double tol = 1e-9 * space.axes()[k].step();
      if (std::abs(q[k] - p[k]) > tol) {
        throw Error(ErrorKind::parameter, name + " is not grid compatible");
      }
    }
    if (hit[j]) throw Error(ErrorKind::parameter, name + " is not injective on the grid");
    hit[j] = 1;
    perm[i] = j;
  }
  return perm;
}

ConditioningSet transform_set(const ConditioningSet& set, const GridTransform& h) {
  return ConditioningSet{
      h.name + "[" + set.label + "]",
      [d = set.set_distance, inv = h.inverse](const Point& x) { return d(inv(x)); },
      [ind = set.indicator, inv = h.inverse](const Point& x) { return ind(inv(x)); },
      [proj = set.project, inv = h.inverse](const Point& x) { return proj(inv(x)); },
  };
}

IsometryCheck isometry_invariance_test(const MetricMeasureSpace& space,
                                       std::span<const double> prior,
                                       const ConditioningSet& set,
                                       const GridTransform& transform, double a, double R,
                                       const LevyProkhorovOptions& lp) {
  const auto perm = transform.permutation(space);
  const std::size_t n = space.size();
  IsometryCheck out;

  // Deterministic pair sample for the isometry property.
  for (std::size_t k = 0; k < 4096; ++k) {
    const std::size_t i = (k * 7919) % n;
    const std::size_t j = (k * 104729 + 17) % n;
    const double defect =
        std::abs(space.node_distance(i, j) - space.node_distance(perm[i], perm[j]));
    out.max_distance_defect = std::max(out.max_distance_defect, defect);
  }
  if (out.max_distance_defect > 1e-9) {
    throw Error(ErrorKind::parameter, transform.name + " does not preserve distances");
  }
  const double scale = *std::max_element(prior.begin(), prior.end());
  for (std::size_t i = 0; i < n; ++i) {
    out.max_measure_defect = std::max(out.max_measure_defect, std::abs(prior[perm[i]] - prior[i]));
  }
  if (out.max_measure_defect > 1e-12 * scale) {
    throw Error(ErrorKind::parameter, transform.name + " does not preserve the prior");
  }

  const auto image = transform_set(set, transform);
  const auto before = tilt(space, prior, set, a, R);
  const auto after = tilt(space, prior, image, a, R);
  std::vector<double> pushed(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) pushed[perm[i]] = before.weights[i];

  auto options = lp;
  const auto dist = distance_field(space, image);
  options.set_fields.push_back(dist);
  out.gap = levy_prokhorov(space, pushed, after.weights, options);
  return out;
}

}  // namespace nullcond
