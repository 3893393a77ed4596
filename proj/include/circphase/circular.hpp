#pragma once

#include <cstddef>
#include <map>
#include <numbers>
#include <span>

namespace circphase {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Phase encoded on the unit circle. Model outputs need not be unit-norm.
struct EncodedTarget {
  double y_sin = 0.0;
  double y_cos = 1.0;
};

struct MetricsReport {
  std::size_t n = 0;
  std::map<int, double> xi;  // order q -> mean |wrapped error|^q (radians^q)
  double cmae_hours = 0.0;
  double within_1h = 0.0;
  double within_2h = 0.0;
};

/// Reduces any finite angle into [0, 2pi).
double wrap_two_pi(double theta);

EncodedTarget encode_phase(double theta);

/// atan2(y_sin, y_cos) mod 2pi. Throws ZeroVector for (0, 0).
double decode_phase(double y_sin, double y_cos);

/// As decode_phase, but maps (0, 0) to 0 and sets `was_zero`.
double decode_phase_or_zero(double y_sin, double y_cos, bool& was_zero);

inline double phase_to_hours(double theta) { return theta * 24.0 / kTwoPi; }
inline double hours_to_phase(double hours) { return hours * kTwoPi / 24.0; }

/// |mod(pred - ref + pi, 2pi) - pi|, in [0, pi].
double wrapped_abs_error(double pred, double ref);

/// Same error measured on the 24 h clock: both phases are converted to hours before wrapping, so
/// 23.5 h against 0.5 h is exactly 1 h.
double wrapped_abs_error_hours(double pred, double ref);

/// (1/N) sum |mod(pred_i - ref_i + pi, 2pi) - pi|^q.
double circular_moment(std::span<const double> pred, std::span<const double> ref, double q);

/// xi_1 and xi_2, CMAE in hours, and inclusive within-1h / within-2h fractions.
MetricsReport metrics_report(std::span<const double> pred, std::span<const double> ref);

}  // namespace circphase
