#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "circphase/data_model.hpp"

namespace circphase {

struct PreprocessConfig {
  double iqr_multiplier = 3.0;
  std::int64_t max_interp_gap_minutes = 5;
  double light_log_offset = 1.0;
  double zscore_epsilon = 1e-9;

  void validate() const;
};

struct NormStats {
  double mean = 0.0;
  double sd = 0.0;
  std::size_t n = 0;
  bool degenerate = false;  // sd < epsilon; the normalized series is all zeros
};

struct ZScored {
  SampleSeries series;
  NormStats stats;
};

struct PreprocessedRecording {
  ParticipantRecording recording;
  std::map<ChannelId, NormStats> stats;
};

/// Quantile of sorted data by linear interpolation between order statistics (h = (n - 1) p).
double quantile_linear(std::span<const double> sorted, double p);

/// Marks samples outside [Q1 - k IQR, Q3 + k IQR] invalid. Requires at least 4 valid samples.
SampleSeries remove_outliers_iqr(const SampleSeries& s, double k);

/// Linearly fills interior invalid runs of at most max_gap slots; boundary runs stay invalid.
SampleSeries interpolate_short_gaps(const SampleSeries& s, std::int64_t max_gap);

/// max(sqrt(ax^2 + ay^2 + az^2) - 1, 0), valid where all three inputs are valid.
SampleSeries compute_acc_net(const SampleSeries& ax, const SampleSeries& ay, const SampleSeries& az);

/// v -> log10(v + offset).
SampleSeries log_transform_light(const SampleSeries& s, double offset);

/// (v - mean) / sd over valid samples, sd with the n - 1 convention.
ZScored zscore_participant(const SampleSeries& s, double epsilon = 1e-9);

/// Per channel: outliers -> interpolation -> (light: log10) -> z-score. acc_net is derived from the cleaned
/// axes before z-scoring. CBT is cleaned and interpolated but stays in physical units; its coverage is
/// recomputed from the interpolated series.
PreprocessedRecording preprocess_recording(const ParticipantRecording& r, const PreprocessConfig& cfg);

}  // namespace circphase
