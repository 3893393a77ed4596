#pragma once

#include <cstddef>
#include <span>

namespace circphase {

struct UTestResult {
  /// U for the first sample: pairs (a, b) with a > b, ties counted 1/2. 0 <= U <= n1 * n2.
  double u_statistic = 0.0;
  double p_value_two_sided = 1.0;  // (0, 1]
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  bool exact = false;
};

/// Pooled sizes at or below this use the exact permutation distribution.
inline constexpr std::size_t kExactUTestLimit = 20;

/// Two-sided Mann-Whitney U test. Uses the exact permutation distribution of the midrank sum when
/// n1 + n2 <= kExactUTestLimit, otherwise the tie-corrected normal approximation.
/// Throws EmptyStratum if either sample is empty.
UTestResult mann_whitney_u(std::span<const double> a, std::span<const double> b);

/// Normal approximation with tie correction and continuity correction, at any size.
UTestResult mann_whitney_u_normal(std::span<const double> a, std::span<const double> b);

/// Exact permutation p-value by dynamic programming over midrank sums.
UTestResult mann_whitney_u_exact(std::span<const double> a, std::span<const double> b);

}  // namespace circphase
