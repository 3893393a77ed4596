#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "circphase/circular.hpp"
#include "circphase/cosinor.hpp"
#include "circphase/data_model.hpp"

namespace circphase {

struct WindowConfig {
  std::int64_t window_minutes = 480;
  std::int64_t stride_minutes = 10;
  double min_coverage = 0.8;

  void validate() const;
};

inline constexpr std::array<std::int64_t, 6> kDefaultWindows = {30, 60, 120, 240, 480, 1440};

enum class Modality { M1, M2, M3, M4, M5, M6, M7 };

inline constexpr std::array<Modality, 7> kAllModalities = {Modality::M1, Modality::M2, Modality::M3, Modality::M4,
                                                           Modality::M5, Modality::M6, Modality::M7};

struct ModalityConfig {
  Modality id = Modality::M1;
  std::vector<ChannelId> channels;  // feature order
};

std::string_view to_string(Modality m);
std::string_view modality_description(Modality m);
std::optional<Modality> parse_modality(std::string_view name);
/// Cumulative channel groups: M1 light; M2 motion counts + acc_net; M3 skin temperature; M4 heart rate;
/// M5 = M1 + M2; M6 = M5 + skin temperature; M7 = M6 + heart rate.
ModalityConfig modality_config(Modality m);

inline constexpr std::size_t kStatsPerChannel = 6;
inline constexpr std::array<std::string_view, kStatsPerChannel> kStatNames = {"mean", "sd",   "min",
                                                                              "max",  "last", "slope_per_min"};

/// [mean, sample sd, min, max, last, least-squares slope per minute] over the given points.
/// minutes_rel must be ascending; "last" is the value at the largest offset.
std::array<double, kStatsPerChannel> window_stats(std::span<const double> values,
                                                  std::span<const std::int64_t> minutes_rel);

/// `<channel>_<stat>` for each channel in order, six stats per channel.
std::vector<std::string> feature_names(const ModalityConfig& modality);

struct FeatureRow {
  std::int64_t end_minute = 0;
  std::vector<double> features;
  EncodedTarget target;
  std::string participant_id;
  double ref_theta = 0.0;
};

struct FeatureDataset {
  std::vector<std::string> feature_names;
  std::vector<FeatureRow> rows;
  std::vector<std::string> warnings;  // e.g. NoCoverage

  std::size_t n_features() const { return feature_names.size(); }
};

/// End times that qualify as rows: multiples of the stride inside a fitted CBT segment whose closed window
/// [t - W, t] has at least min_coverage valid minutes (and two valid points) in every channel.
std::vector<std::int64_t> select_row_times(const ParticipantRecording& rec, const SegmentFits& phase,
                                           const ModalityConfig& modality, const WindowConfig& win);

/// Causal window features. Only samples with timestamps <= t feed the row ending at t.
FeatureDataset build_dataset(const ParticipantRecording& rec, const SegmentFits& phase,
                             const ModalityConfig& modality, const WindowConfig& win);

struct SequenceRow {
  std::int64_t end_minute = 0;
  std::vector<double> values;  // W x channels, row-major, oldest minute first; masked slots hold 0
  std::vector<bool> mask;      // same layout, true where the sample is valid
  EncodedTarget target;
  double ref_theta = 0.0;
};

struct SequenceDataset {
  std::vector<ChannelId> channels;
  std::int64_t window_minutes = 0;
  std::string participant_id;
  std::vector<SequenceRow> rows;
};

/// Minute-level windows (the W most recent minutes t - W + 1 .. t) for the same rows as build_dataset.
SequenceDataset sequence_view(const ParticipantRecording& rec, const SegmentFits& phase,
                              const ModalityConfig& modality, const WindowConfig& win);

}  // namespace circphase
