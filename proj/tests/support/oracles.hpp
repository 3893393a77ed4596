#pragma once

// Straightforward reference implementations used to check the library. They favour obviousness over speed and
// share no code with it.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

namespace oracle {

inline constexpr double kTau = 2.0 * std::numbers::pi;

/// Smallest angle between two directions, from fmod on the absolute difference.
inline double angular_distance(double a, double b) {
  const double d = std::fmod(std::fabs(a - b), kTau);
  return std::min(d, kTau - d);
}

inline double circular_moment(const std::vector<double>& pred, const std::vector<double>& ref, double q) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < pred.size(); ++i) s += std::pow(static_cast<long double>(angular_distance(pred[i], ref[i])), q);
  return static_cast<double>(s / static_cast<long double>(pred.size()));
}

/// Least-squares slope of y on x, in long double.
inline double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= x.size();
  my /= y.size();
  long double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return static_cast<double>(sxy / sxx);
}

/// Solves the 3x3 normal equations of y ~ 1 + cos(w t) + sin(w t) by Gaussian elimination with partial
/// pivoting in long double. Returns {mesor, beta_cos, beta_sin}.
inline std::array<double, 3> cosinor_normal_equations(const std::vector<double>& t_minutes,
                                                      const std::vector<double>& y) {
  const long double w = 2.0L * std::numbers::pi_v<long double> / 1440.0L;
  long double a[3][4] = {};
  for (std::size_t i = 0; i < y.size(); ++i) {
    const long double tm = std::fmod(static_cast<long double>(t_minutes[i]), 1440.0L);
    const long double row[3] = {1.0L, std::cos(w * tm), std::sin(w * tm)};
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) a[r][c] += row[r] * row[c];
      a[r][3] += row[r] * y[i];
    }
  }
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r) {
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
    }
    for (int c = 0; c < 4; ++c) std::swap(a[col][c], a[piv][c]);
    for (int r = 0; r < 3; ++r) {
      if (r == col) continue;
      const long double f = a[r][col] / a[col][col];
      for (int c = col; c < 4; ++c) a[r][c] -= f * a[col][c];
    }
  }
  return {static_cast<double>(a[0][3] / a[0][0]), static_cast<double>(a[1][3] / a[1][1]),
          static_cast<double>(a[2][3] / a[2][2])};
}

struct BruteSplit {
  bool found = false;
  std::size_t feature = 0;
  double gap_lo = 0.0;  // largest value going left
  double gap_hi = 0.0;  // smallest value going right
  double sse = 0.0;     // children SSE summed over outputs
  double second_sse = std::numeric_limits<double>::infinity();  // best SSE among other (feature, gap) pairs
};

/// Two-pass SSE of the given rows, summed over columns of y.
inline double sse_of(const std::vector<std::vector<double>>& y, const std::vector<std::size_t>& rows) {
  if (rows.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t c = 0; c < y[rows[0]].size(); ++c) {
    double m = 0.0;
    for (auto r : rows) m += y[r][c];
    m /= static_cast<double>(rows.size());
    for (auto r : rows) total += (y[r][c] - m) * (y[r][c] - m);
  }
  return total;
}

/// Exhaustive search over every feature and every gap between consecutive distinct values.
inline BruteSplit brute_best_split(const std::vector<std::vector<double>>& x, const std::vector<std::vector<double>>& y,
                                   const std::vector<std::size_t>& rows, std::size_t min_leaf = 1) {
  BruteSplit best;
  best.sse = std::numeric_limits<double>::infinity();
  const double parent = sse_of(y, rows);
  for (std::size_t f = 0; f < x[0].size(); ++f) {
    std::vector<double> vals;
    for (auto r : rows) vals.push_back(x[r][f]);
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    for (std::size_t g = 0; g + 1 < vals.size(); ++g) {
      std::vector<std::size_t> left, right;
      for (auto r : rows) (x[r][f] <= vals[g] ? left : right).push_back(r);
      if (left.size() < min_leaf || right.size() < min_leaf) continue;
      const double s = sse_of(y, left) + sse_of(y, right);
      if (s < best.sse) {
        best.second_sse = best.sse;
        best.found = true;
        best.feature = f;
        best.gap_lo = vals[g];
        best.gap_hi = vals[g + 1];
        best.sse = s;
      } else if (s < best.second_sse) {
        best.second_sse = s;
      }
    }
  }
  // A split that does not reduce the SSE is not a split.
  if (best.found && !(best.sse < parent - 1e-12 * (1.0 + parent))) best.found = false;
  return best;
}

/// Two-sided exact permutation p of the Mann-Whitney U by enumerating every assignment of the pooled values
/// to a first sample of size n1. U counts pairs (a > b) plus half the ties.
inline double exact_u_p_value(const std::vector<double>& a, const std::vector<double>& b, double* u_out = nullptr) {
  std::vector<double> pooled(a);
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::size_t n = pooled.size(), n1 = a.size();
  auto u_of = [&](std::uint32_t mask) {
    double u = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(mask >> i & 1u)) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (mask >> j & 1u) continue;
        if (pooled[i] > pooled[j]) u += 1.0;
        if (pooled[i] == pooled[j]) u += 0.5;
      }
    }
    return u;
  };
  const double mu = static_cast<double>(n1 * (n - n1)) / 2.0;
  const double observed = u_of((1u << n1) - 1u);
  if (u_out) *u_out = observed;
  std::size_t extreme = 0, total = 0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != n1) continue;
    ++total;
    if (std::fabs(u_of(mask) - mu) >= std::fabs(observed - mu) - 1e-9) ++extreme;
  }
  return static_cast<double>(extreme) / static_cast<double>(total);
}

}  // namespace oracle
