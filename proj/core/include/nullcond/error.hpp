#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nullcond {

enum class ErrorKind {
  domain,            // coordinates outside the chart domain
  parameter,         // invalid scalar parameter (R <= 0, bad schedule, ...)
  degenerate_prior,  // prior with zero total mass
  alignment,         // measures defined on different node sets
  non_convergence,   // iterative solver ran out of iterations
  infeasible,        // constraint set admits no feasible density
  overflow_guard,    // normalization underflowed even in log domain
  resolution,        // request below what the grid can resolve
  support_violation, // conditioning set not inside the prior support
  null_measure,      // classical conditioning requested on a null set
  validation,        // configuration failed validation
  type_mismatch,     // operation needs a different kind of space
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Base exception for every failure raised by the library. The kind lets
/// callers (the CLI in particular) map failures onto exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised by the dual solver; carries the constraint residuals of the last
/// iterate so callers can see how far from feasibility it stopped.
class SolverError : public Error {
 public:
  SolverError(ErrorKind kind, const std::string& what,
              std::vector<double> residuals)
      : Error(kind, what), residuals_(std::move(residuals)) {}

  const std::vector<double>& residuals() const noexcept { return residuals_; }

 private:
  std::vector<double> residuals_;
};

class ResolutionError : public Error {
 public:
  ResolutionError(const std::string& what, double minimum_achievable)
      : Error(ErrorKind::resolution, what),
        minimum_achievable_(minimum_achievable) {}

  /// Smallest value of the requested quantity the grid can represent.
  double minimum_achievable() const noexcept { return minimum_achievable_; }

 private:
  double minimum_achievable_;
};

}  // namespace nullcond
