#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "circphase/circular.hpp"
#include "circphase/data_model.hpp"

namespace circphase {

/// Angular frequency of the 24 h rhythm, radians per minute.
inline constexpr double kOmegaPerMinute = kTwoPi / 1440.0;

/// Single-component cosinor T(t) = M + A cos(omega t + phi), t in absolute minutes since epoch.
struct CosinorFit {
  double mesor = 0.0;
  double amplitude = 0.0;  // >= 0
  double acrophase = 0.0;  // [0, 2pi)
  double omega = kOmegaPerMinute;
  double rmse = 0.0;
  std::size_t n_samples = 0;
  bool degenerate_amplitude = false;  // A ~ 0: acrophase is undefined and set to 0

  double value_at(std::int64_t minute) const;
};

struct CosinorOptions {
  std::int64_t min_span_minutes = 720;
  std::size_t min_samples = 3;
  /// Amplitudes at or below this (in signal units) are treated as degenerate.
  double amplitude_epsilon = 1e-9;
};

struct PhaseSeries {
  std::vector<std::int64_t> minutes;
  std::vector<double> theta;
};

/// (omega * t + phi) mod 2pi, with t reduced modulo one day first so that periodicity is exact.
double cosinor_phase_at(double acrophase, std::int64_t minute);

/// Closed-form OLS on M + b1 cos(omega t) + b2 sin(omega t); A = |b|, phi = atan2(-b2, b1) mod 2pi.
CosinorFit fit_cosinor(std::span<const std::int64_t> minutes, std::span<const double> values,
                       const CosinorOptions& options = {});

/// Fits the valid samples of a series.
CosinorFit fit_cosinor(const SampleSeries& series, const CosinorOptions& options = {});

/// Reference phase at each timestamp. Throws DegenerateFit when the fit has no defined acrophase.
PhaseSeries phase_trajectory(const CosinorFit& fit, std::span<const std::int64_t> minutes);

struct SegmentFit {
  MinuteInterval interval;
  CosinorFit fit;
};

struct SegmentFits {
  std::vector<SegmentFit> segments;
  std::vector<std::string> warnings;

  /// Fit of the interval containing `minute`, if any.
  const SegmentFit* find(std::int64_t minute) const;
  std::optional<double> phase_at(std::int64_t minute) const;
};

/// Independent fit per coverage interval. Intervals that are too short or degenerate are skipped with a warning.
SegmentFits fit_per_segment(const SampleSeries& cbt, std::span<const MinuteInterval> coverage,
                            const CosinorOptions& options = {});

}  // namespace circphase
