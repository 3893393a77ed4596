#include "circphase/cosinor.hpp"

#include <algorithm>
#include <cmath>

#include "circphase/error.hpp"
#include "circphase/timeutil.hpp"

namespace circphase {

namespace {

double day_angle(std::int64_t minute) {
  return kOmegaPerMinute * static_cast<double>(minute_of_day(minute));
}

}  // namespace

double CosinorFit::value_at(std::int64_t minute) const {
  return mesor + amplitude * std::cos(day_angle(minute) + acrophase);
}

double cosinor_phase_at(double acrophase, std::int64_t minute) {
  return wrap_two_pi(day_angle(minute) + acrophase);
}

CosinorFit fit_cosinor(std::span<const std::int64_t> minutes, std::span<const double> values,
                       const CosinorOptions& options) {
  if (minutes.size() != values.size()) throw Error(ErrorCode::LengthMismatch, "minutes and values differ in length");
  const std::size_t n = minutes.size();
  if (n < std::max<std::size_t>(options.min_samples, 3)) {
    throw Error(ErrorCode::InsufficientSpan, "need at least 3 samples, got " + std::to_string(n));
  }
  const auto [lo, hi] = std::minmax_element(minutes.begin(), minutes.end());
  if (*hi - *lo < options.min_span_minutes) {
    throw Error(ErrorCode::InsufficientSpan, "samples span " + std::to_string(*hi - *lo) + " min, need " +
                                                 std::to_string(options.min_span_minutes));
  }

  // Centre the response so the normal equations stay well scaled.
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);

  double sc = 0, ss = 0, scc = 0, sss = 0, scs = 0, sy = 0, syc = 0, sys = 0;
  std::vector<double> cs(n), sn(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = day_angle(minutes[i]);
    const double c = std::cos(a);
    const double s = std::sin(a);
    const double y = values[i] - mean;
    cs[i] = c;
    sn[i] = s;
    sc += c;
    ss += s;
    scc += c * c;
    sss += s * s;
    scs += c * s;
    sy += y;
    syc += y * c;
    sys += y * s;
  }
  const double nn = static_cast<double>(n);

  // Symmetric 3x3 system [[n, sc, ss], [sc, scc, scs], [ss, scs, sss]] x = [sy, syc, sys], solved by adjugate.
  const double c00 = scc * sss - scs * scs;
  const double c01 = -(sc * sss - scs * ss);
  const double c02 = sc * scs - scc * ss;
  const double c11 = nn * sss - ss * ss;
  const double c12 = -(nn * scs - sc * ss);
  const double c22 = nn * scc - sc * sc;
  const double det = nn * c00 + sc * c01 + ss * c02;
  const double scale = nn * scc * sss;
  if (!(std::abs(det) > 1e-12 * scale) || !std::isfinite(det)) {
    throw Error(ErrorCode::SingularSystem, "cosinor design matrix is singular");
  }
  const double m0 = (c00 * sy + c01 * syc + c02 * sys) / det;
  const double b1 = (c01 * sy + c11 * syc + c12 * sys) / det;
  const double b2 = (c02 * sy + c12 * syc + c22 * sys) / det;

  CosinorFit fit;
  fit.mesor = mean + m0;
  fit.amplitude = std::hypot(b1, b2);
  fit.n_samples = n;
  if (fit.amplitude <= options.amplitude_epsilon) {
    fit.degenerate_amplitude = true;
    fit.acrophase = 0.0;
  } else {
    fit.acrophase = wrap_two_pi(std::atan2(-b2, b1));
  }
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = values[i] - mean - (m0 + b1 * cs[i] + b2 * sn[i]);
    sse += r * r;
  }
  fit.rmse = std::sqrt(sse / nn);
  return fit;
}

CosinorFit fit_cosinor(const SampleSeries& series, const CosinorOptions& options) {
  std::vector<std::int64_t> minutes;
  std::vector<double> values;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (!series.valid[i]) continue;
    minutes.push_back(series.minute_at(i));
    values.push_back(series.values[i]);
  }
  return fit_cosinor(minutes, values, options);
}

PhaseSeries phase_trajectory(const CosinorFit& fit, std::span<const std::int64_t> minutes) {
  if (fit.degenerate_amplitude) throw Error(ErrorCode::DegenerateFit, "fit has zero amplitude");
  PhaseSeries out;
  out.minutes.assign(minutes.begin(), minutes.end());
  out.theta.reserve(minutes.size());
  for (std::int64_t m : minutes) out.theta.push_back(cosinor_phase_at(fit.acrophase, m));
  return out;
}

const SegmentFit* SegmentFits::find(std::int64_t minute) const {
  for (const SegmentFit& s : segments) {
    if (s.interval.contains(minute)) return &s;
  }
  return nullptr;
}

std::optional<double> SegmentFits::phase_at(std::int64_t minute) const {
  const SegmentFit* s = find(minute);
  if (s == nullptr) return std::nullopt;
  return cosinor_phase_at(s->fit.acrophase, minute);
}

SegmentFits fit_per_segment(const SampleSeries& cbt, std::span<const MinuteInterval> coverage,
                            const CosinorOptions& options) {
  SegmentFits out;
  for (const MinuteInterval& iv : coverage) {
    std::vector<std::int64_t> minutes;
    std::vector<double> values;
    for (std::size_t i = 0; i < cbt.size(); ++i) {
      const std::int64_t m = cbt.minute_at(i);
      if (cbt.valid[i] && iv.contains(m)) {
        minutes.push_back(m);
        values.push_back(cbt.values[i]);
      }
    }
    const std::string where = "segment " + format_utc_minute(iv.first) + ".." + format_utc_minute(iv.last);
    try {
      CosinorFit fit = fit_cosinor(minutes, values, options);
      if (fit.degenerate_amplitude) {
        out.warnings.push_back(where + ": degenerate amplitude, skipped");
        continue;
      }
      out.segments.push_back({iv, fit});
    } catch (const Error& e) {
      out.warnings.push_back(where + ": " + e.what() + ", skipped");
    }
  }
  return out;
}

}  // namespace circphase
