#include "circphase/circular.hpp"

#include <cmath>
#include <numbers>

#include "circphase/error.hpp"

namespace circphase {

namespace {

void check_pair(std::span<const double> pred, std::span<const double> ref) {
  if (pred.size() != ref.size()) throw Error(ErrorCode::LengthMismatch, "prediction and reference lengths differ");
  if (pred.empty()) throw Error(ErrorCode::EmptyInput, "no samples");
}

}  // namespace

double wrap_two_pi(double theta) {
  if (!std::isfinite(theta)) throw Error(ErrorCode::NonFinite, "non-finite angle");
  double r = std::fmod(theta, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;  // -tiny + 2pi rounds up to 2pi
  return r;
}

EncodedTarget encode_phase(double theta) {
  if (!std::isfinite(theta)) throw Error(ErrorCode::NonFinite, "non-finite phase");
  const double t = wrap_two_pi(theta);
  return {std::sin(t), std::cos(t)};
}

double decode_phase(double y_sin, double y_cos) {
  if (!std::isfinite(y_sin) || !std::isfinite(y_cos)) throw Error(ErrorCode::NonFinite, "non-finite encoding");
  if (y_sin == 0.0 && y_cos == 0.0) throw Error(ErrorCode::ZeroVector, "cannot decode (0, 0)");
  return wrap_two_pi(std::atan2(y_sin, y_cos));
}

double decode_phase_or_zero(double y_sin, double y_cos, bool& was_zero) {
  was_zero = (y_sin == 0.0 && y_cos == 0.0);
  if (was_zero) return 0.0;
  return decode_phase(y_sin, y_cos);
}

double wrapped_abs_error(double pred, double ref) {
  if (!std::isfinite(pred) || !std::isfinite(ref)) throw Error(ErrorCode::NonFinite, "non-finite phase");
  // remainder() is exact, so the only rounding is in the difference itself.
  return std::abs(std::remainder(pred - ref, kTwoPi));
}

double circular_moment(std::span<const double> pred, std::span<const double> ref, double q) {
  check_pair(pred, ref);
  if (!(q > 0.0)) throw Error(ErrorCode::InvalidParams, "moment order must be positive");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += std::pow(wrapped_abs_error(pred[i], ref[i]), q);
  return sum / static_cast<double>(pred.size());
}

namespace {
constexpr double kWithinSlackHours = 1e-9;
}  // namespace

double wrapped_abs_error_hours(double pred, double ref) {
  if (!std::isfinite(pred) || !std::isfinite(ref)) throw Error(ErrorCode::NonFinite, "phase must be finite");
  return std::abs(std::remainder(phase_to_hours(pred) - phase_to_hours(ref), 24.0));
}

MetricsReport metrics_report(std::span<const double> pred, std::span<const double> ref) {
  check_pair(pred, ref);
  MetricsReport r;
  r.n = pred.size();
  double s1 = 0.0;
  double s2 = 0.0;
  double hours = 0.0;
  std::size_t in1 = 0;
  std::size_t in2 = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = wrapped_abs_error(pred[i], ref[i]);
    s1 += e;
    s2 += e * e;
    const double h = wrapped_abs_error_hours(pred[i], ref[i]);
    hours += h;
    // Inclusive bounds with an allowance for the last-bit rounding of the hour conversion.
    if (h <= 1.0 + kWithinSlackHours) ++in1;
    if (h <= 2.0 + kWithinSlackHours) ++in2;
  }
  const double n = static_cast<double>(r.n);
  r.xi[1] = s1 / n;
  r.xi[2] = s2 / n;
  r.cmae_hours = hours / n;
  r.within_1h = static_cast<double>(in1) / n;
  r.within_2h = static_cast<double>(in2) / n;
  return r;
}

}  // namespace circphase
