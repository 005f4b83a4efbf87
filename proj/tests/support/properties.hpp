#pragma once

// Randomized property suites shared by the unit tests and the acceptance
// binary. Each suite is deterministic for a given seed.

#include <cstdint>
#include <string>
#include <vector>

namespace nullcond::testing {

struct PropertyResult {
  std::string name;
  bool passed = false;
  std::size_t cases = 0;
  /// Largest observed violation measure (suite specific, 0 when clean).
  double worst = 0.0;
  std::string detail;
};

/// Ent(mu | nu) >= 0 on random probability pairs, and Ent(mu | mu) == 0.
PropertyResult relative_entropy_positivity(std::uint64_t seed, std::size_t pairs = 1000);

/// Tilted weights form a probability vector, follow exp(-a d_R^2) nu
/// pointwise, and reduce to the prior at a = 0.
PropertyResult tilt_normalization(std::uint64_t seed);

/// expected_sq_distance strictly decreases along five tilts on twenty
/// (space, set) pairs.
PropertyResult expected_sq_monotonicity();

/// a_of_sigma followed by expected_sq_distance returns sigma^2 to 1e-6
/// relative.
PropertyResult a_of_sigma_round_trip(std::uint64_t seed);

/// solve_dual against exhaustive primal minimization on every problem of
/// the enumerated family with at most three atoms.
PropertyResult dual_vs_grid_search();

/// levy_prokhorov symmetry and triangle inequality on random triples of
/// tilted measures.
PropertyResult levy_prokhorov_metric(std::uint64_t seed, std::size_t triples = 12);

std::vector<PropertyResult> run_all_properties(std::uint64_t seed);

}  // namespace nullcond::testing
