#include "circphase/utest.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <vector>

#include "circphase/error.hpp"

namespace circphase {

namespace {

struct Ranked {
  std::vector<std::int64_t> doubled_ranks;  // 2 x midrank, always an integer; first n1 entries belong to a
  double tie_term = 0.0;                    // sum over tie groups of t^3 - t
};

Ranked rank_pooled(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptyStratum, "Mann-Whitney U needs two non-empty samples");
  const std::size_t n = a.size() + b.size();
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  for (double v : pooled) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "Mann-Whitney U input is not finite");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return pooled[i] < pooled[j]; });
  Ranked out;
  out.doubled_ranks.assign(n, 0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && pooled[order[j]] == pooled[order[i]]) ++j;
    // Ranks i+1 .. j share the midrank (i + 1 + j) / 2.
    const auto doubled = static_cast<std::int64_t>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) out.doubled_ranks[order[k]] = doubled;
    const auto t = static_cast<double>(j - i);
    out.tie_term += t * t * t - t;
    i = j;
  }
  return out;
}

double u_from_doubled_rank_sum(std::int64_t doubled_sum, std::size_t n1) {
  const auto m = static_cast<double>(n1);
  return static_cast<double>(doubled_sum) / 2.0 - m * (m + 1.0) / 2.0;
}

}  // namespace

UTestResult mann_whitney_u_normal(std::span<const double> a, std::span<const double> b) {
  const Ranked ranked = rank_pooled(a, b);
  const std::int64_t doubled_sum =
      std::accumulate(ranked.doubled_ranks.begin(), ranked.doubled_ranks.begin() + static_cast<std::ptrdiff_t>(a.size()),
                      std::int64_t{0});
  UTestResult r;
  r.n1 = a.size();
  r.n2 = b.size();
  r.u_statistic = u_from_doubled_rank_sum(doubled_sum, r.n1);
  const auto n1 = static_cast<double>(r.n1);
  const auto n2 = static_cast<double>(r.n2);
  const double n = n1 + n2;
  const double mu = n1 * n2 / 2.0;
  const double var = n1 * n2 / 12.0 * ((n + 1.0) - ranked.tie_term / (n * (n - 1.0)));
  if (!(var > 0.0)) {
    r.p_value_two_sided = 1.0;
    return r;
  }
  const double z = std::max(std::abs(r.u_statistic - mu) - 0.5, 0.0) / std::sqrt(var);
  r.p_value_two_sided = std::clamp(std::erfc(z / std::sqrt(2.0)), DBL_MIN, 1.0);
  return r;
}

UTestResult mann_whitney_u_exact(std::span<const double> a, std::span<const double> b) {
  const Ranked ranked = rank_pooled(a, b);
  const std::size_t n1 = a.size();
  const std::size_t n = ranked.doubled_ranks.size();
  const std::int64_t observed =
      std::accumulate(ranked.doubled_ranks.begin(), ranked.doubled_ranks.begin() + static_cast<std::ptrdiff_t>(n1),
                      std::int64_t{0});
  const std::int64_t max_sum = static_cast<std::int64_t>(2 * n * n);

  // ways[j][s]: number of j-subsets of the pooled ranks whose doubled rank sum is s.
  std::vector<std::vector<double>> ways(n1 + 1, std::vector<double>(static_cast<std::size_t>(max_sum) + 1, 0.0));
  ways[0][0] = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::int64_t r = ranked.doubled_ranks[i];
    for (std::size_t j = std::min(n1, i + 1); j >= 1; --j) {
      auto& dst = ways[j];
      const auto& src = ways[j - 1];
      for (std::int64_t s = max_sum; s >= r; --s) dst[static_cast<std::size_t>(s)] += src[static_cast<std::size_t>(s - r)];
    }
  }

  // Two-sided: subsets at least as far from the null mean as observed. Doubled sums keep this in integers.
  const std::int64_t centre = static_cast<std::int64_t>(n1 * (n + 1));  // E[doubled rank sum]
  const std::int64_t observed_dev = std::llabs(observed - centre);
  double extreme = 0.0, total = 0.0;
  for (std::int64_t s = 0; s <= max_sum; ++s) {
    const double w = ways[n1][static_cast<std::size_t>(s)];
    if (w == 0.0) continue;
    total += w;
    if (std::llabs(s - centre) >= observed_dev) extreme += w;
  }
  UTestResult result;
  result.n1 = n1;
  result.n2 = b.size();
  result.u_statistic = u_from_doubled_rank_sum(observed, n1);
  result.p_value_two_sided = std::min(1.0, extreme / total);
  result.exact = true;
  return result;
}

UTestResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  if (!a.empty() && !b.empty() && a.size() + b.size() <= kExactUTestLimit) return mann_whitney_u_exact(a, b);
  return mann_whitney_u_normal(a, b);
}

}  // namespace circphase
