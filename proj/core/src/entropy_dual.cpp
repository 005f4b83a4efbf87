#include "nullcond/entropy_dual.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "nullcond/error.hpp"

namespace nullcond {

DiscreteMeasure::DiscreteMeasure(std::vector<double> w) : weights(std::move(w)) {
  for (double x : weights) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
      throw Error(ErrorKind::parameter, "measure weights must be finite and nonnegative");
    }
    total += x;
  }
}

double relative_entropy(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  if (mu.size() != nu.size()) {
    throw Error(ErrorKind::alignment, "relative_entropy: measures have different supports");
  }
  if (std::abs(mu.total - 1.0) > 1e-9) {
    throw Error(ErrorKind::parameter, "relative_entropy: mu must be a probability vector");
  }
  double ent = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double m = mu.weights[i];
    if (m == 0.0) continue;
    const double n = nu.weights[i];
    if (n == 0.0) return std::numeric_limits<double>::infinity();
    ent += m * std::log(m / n);
  }
  // Rounding can leave -1e-17 for mu == nu.
  return std::max(ent, 0.0);
}

double DualSolution::duality_gap() const noexcept {
  return std::abs(primal_value - dual_value);
}

double DualSolution::max_residual() const noexcept {
  double r = 0.0;
  for (double x : residuals) r = std::max(r, std::abs(x));
  return r;
}

namespace {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

void check_problem(const DiscreteMeasure& nu, std::span<const LinearConstraint> cs) {
  if (cs.empty()) {
    throw Error(ErrorKind::parameter, "solve_dual needs at least one constraint");
  }
  if (cs.size() > kMaxConstraints) {
    throw Error(ErrorKind::parameter, "solve_dual supports at most 16 constraints");
  }
  if (!(nu.total > 0.0)) {
    throw Error(ErrorKind::degenerate_prior, "reference measure has zero mass");
  }
  for (const auto& c : cs) {
    if (c.a.size() != nu.size()) {
      throw Error(ErrorKind::alignment, "constraint function not aligned with the measure");
    }
  }
}

/// exp(-1 + lambda^T a(x)) in log form, per node.
std::vector<double> log_density(const DiscreteMeasure& nu,
                                std::span<const LinearConstraint> cs, const Vec& lambda) {
  std::vector<double> out(nu.size(), -1.0);
  for (std::size_t i = 0; i < cs.size(); ++i) {
    const double l = lambda[static_cast<Eigen::Index>(i)];
    if (l == 0.0) continue;
    const auto& a = cs[i].a;
    for (std::size_t x = 0; x < out.size(); ++x) out[x] += l * a[x];
  }
  return out;
}

struct Evaluation {
  double dual = 0.0;
  Vec gradient;  // b - E[a], the ascent direction of the dual
  Mat hessian;   // sum a a^T f nu (negated dual Hessian)
};

Evaluation evaluate(const DiscreteMeasure& nu, std::span<const LinearConstraint> cs,
                    const Vec& lambda, bool with_hessian) {
  const auto n = static_cast<Eigen::Index>(cs.size());
  Evaluation ev;
  ev.gradient = Vec::Zero(n);
  if (with_hessian) ev.hessian = Mat::Zero(n, n);
  const auto logf = log_density(nu, cs, lambda);

  double mass = 0.0;
  Vec moment = Vec::Zero(n);
  Vec ax(n);
  for (std::size_t x = 0; x < nu.size(); ++x) {
    if (nu.weights[x] == 0.0) continue;
    if (logf[x] > 700.0) {
      ev.dual = -std::numeric_limits<double>::infinity();
      return ev;
    }
    const double fw = std::exp(logf[x]) * nu.weights[x];
    if (fw == 0.0) continue;
    mass += fw;
    for (Eigen::Index i = 0; i < n; ++i) ax[i] = cs[static_cast<std::size_t>(i)].a[x];
    moment += fw * ax;
    if (with_hessian) ev.hessian.selfadjointView<Eigen::Lower>().rankUpdate(ax, fw);
  }
  if (with_hessian) ev.hessian = ev.hessian.selfadjointView<Eigen::Lower>();
  double lb = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    lb += lambda[i] * cs[static_cast<std::size_t>(i)].b;
    ev.gradient[i] = cs[static_cast<std::size_t>(i)].b - moment[i];
  }
  ev.dual = lb - mass;
  return ev;
}

Vec newton_direction(const Evaluation& ev) {
  const auto n = ev.gradient.size();
  const double scale = std::max(ev.hessian.diagonal().maxCoeff(), 1e-300);
  double ridge = 0.0;
  for (int attempt = 0; attempt < 8; ++attempt) {
    Mat h = ev.hessian;
    if (ridge > 0.0) h += ridge * Mat::Identity(n, n);
    Eigen::LDLT<Mat> ldlt(h);
    if (ldlt.info() == Eigen::Success) {
      Vec step = ldlt.solve(ev.gradient);
      if (step.allFinite() && step.dot(ev.gradient) > 0.0) return step;
    }
    ridge = ridge == 0.0 ? 1e-12 * scale : ridge * 100.0;
  }
  // Near-singular Hessian: plain gradient ascent.
  return ev.gradient;
}

std::vector<double> residuals_of(const Evaluation& ev) {
  std::vector<double> r(static_cast<std::size_t>(ev.gradient.size()));
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = -ev.gradient[static_cast<Eigen::Index>(i)];
  return r;
}

double max_abs(const Vec& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

}  // namespace

DualSolution evaluate_dual(const DiscreteMeasure& nu,
                           std::span<const LinearConstraint> constraints,
                           std::span<const double> lambda) {
  check_problem(nu, constraints);
  if (lambda.size() != constraints.size()) {
    throw Error(ErrorKind::alignment, "multiplier count does not match constraints");
  }
  Vec l(static_cast<Eigen::Index>(lambda.size()));
  for (std::size_t i = 0; i < lambda.size(); ++i) l[static_cast<Eigen::Index>(i)] = lambda[i];

  DualSolution sol;
  sol.lambda.assign(lambda.begin(), lambda.end());
  const auto logf = log_density(nu, constraints, l);
  sol.density.resize(nu.size());
  sol.posterior.resize(nu.size());
  double primal = 0.0;
  for (std::size_t x = 0; x < nu.size(); ++x) {
    const double f = std::exp(logf[x]);
    sol.density[x] = f;
    sol.posterior[x] = f * nu.weights[x];
    // f ln f with ln f taken from the exponent, exact even when f underflows.
    if (sol.posterior[x] > 0.0) primal += sol.posterior[x] * logf[x];
  }
  sol.primal_value = primal;
  const auto ev = evaluate(nu, constraints, l, false);
  sol.dual_value = ev.dual;
  sol.residuals = residuals_of(ev);
  return sol;
}

DualSolution solve_dual(const DiscreteMeasure& nu,
                        std::span<const LinearConstraint> constraints,
                        const DualOptions& options) {
  check_problem(nu, constraints);
  const auto n = static_cast<Eigen::Index>(constraints.size());
  Vec lambda = Vec::Zero(n);

  double best_residual = std::numeric_limits<double>::infinity();
  int since_improvement = 0;
  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    const auto ev = evaluate(nu, constraints, lambda, true);
    const double res = max_abs(ev.gradient);
    if (res <= options.residual_tolerance) break;

    if (res < 0.999 * best_residual) {
      best_residual = res;
      since_improvement = 0;
    } else if (++since_improvement >= options.stagnation_window) {
      std::ostringstream msg;
      msg << "solve_dual: residuals stagnated at " << res
          << "; constraints look infeasible";
      throw SolverError(ErrorKind::infeasible, msg.str(), residuals_of(ev));
    }

    const Vec dir = newton_direction(ev);
    const double slope = dir.dot(ev.gradient);
    double t = 1.0;
    bool accepted = false;
    for (int k = 0; k < 60; ++k, t *= 0.5) {
      const Vec trial = lambda + t * dir;
      const auto tv = evaluate(nu, constraints, trial, false);
      const double d = tv.dual;
      // Near the optimum the dual moves by about res^2, below its rounding;
      // a step that keeps the dual flat and shrinks the residual is accepted.
      const bool flat = std::abs(d - ev.dual) <= 1e-13 * (1.0 + std::abs(ev.dual)) &&
                        max_abs(tv.gradient) < res;
      if (std::isfinite(d) && (d >= ev.dual + 1e-4 * t * slope || flat)) {
        lambda = trial;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // No ascent possible at double precision; the caller sees the
      // residuals through the stagnation or iteration limits.
      ++since_improvement;
    }
  }

  std::vector<double> l(lambda.data(), lambda.data() + n);
  auto sol = evaluate_dual(nu, constraints, l);
  sol.iterations = iter;
  if (iter == options.max_iterations && sol.max_residual() > options.residual_tolerance) {
    std::ostringstream msg;
    msg << "solve_dual: no convergence after " << iter
        << " iterations (max residual " << sol.max_residual() << ")";
    throw SolverError(ErrorKind::non_convergence, msg.str(), sol.residuals);
  }
  return sol;
}

bool verify_duality(const DualSolution& solution, double tolerance) {
  return solution.duality_gap() <= tolerance && solution.max_residual() <= tolerance;
}

}  // namespace nullcond
