#include "circphase/features.hpp"

#include <algorithm>
#include <cmath>

#include "circphase/error.hpp"
#include "circphase/timeutil.hpp"

namespace circphase {

void WindowConfig::validate() const {
  if (window_minutes < 2) throw Error(ErrorCode::InvalidParams, "window must be at least 2 minutes");
  if (stride_minutes < 1) throw Error(ErrorCode::InvalidParams, "stride must be positive");
  if (!(min_coverage > 0.0 && min_coverage <= 1.0)) {
    throw Error(ErrorCode::InvalidParams, "min_coverage must lie in (0, 1]");
  }
}

std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::M1: return "M1";
    case Modality::M2: return "M2";
    case Modality::M3: return "M3";
    case Modality::M4: return "M4";
    case Modality::M5: return "M5";
    case Modality::M6: return "M6";
    case Modality::M7: return "M7";
  }
  return "?";
}

std::string_view modality_description(Modality m) {
  switch (m) {
    case Modality::M1: return "Light";
    case Modality::M2: return "Activity";
    case Modality::M3: return "Skin Temperature";
    case Modality::M4: return "Cardiovascular";
    case Modality::M5: return "Light + Activity";
    case Modality::M6: return "Light + Activity + Temp";
    case Modality::M7: return "All modalities";
  }
  return "?";
}

std::optional<Modality> parse_modality(std::string_view name) {
  for (Modality m : kAllModalities) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

ModalityConfig modality_config(Modality m) {
  using C = ChannelId;
  switch (m) {
    case Modality::M1: return {m, {C::LightLux}};
    case Modality::M2: return {m, {C::MotionCounts, C::AccNet}};
    case Modality::M3: return {m, {C::SkinTemp}};
    case Modality::M4: return {m, {C::HeartRate}};
    case Modality::M5: return {m, {C::LightLux, C::MotionCounts, C::AccNet}};
    case Modality::M6: return {m, {C::LightLux, C::MotionCounts, C::AccNet, C::SkinTemp}};
    case Modality::M7: return {m, {C::LightLux, C::MotionCounts, C::AccNet, C::SkinTemp, C::HeartRate}};
  }
  return {m, {}};
}

std::array<double, kStatsPerChannel> window_stats(std::span<const double> values,
                                                  std::span<const std::int64_t> minutes_rel) {
  if (values.size() != minutes_rel.size()) throw Error(ErrorCode::LengthMismatch, "values and offsets differ");
  const std::size_t n = values.size();
  if (n < 2) throw Error(ErrorCode::TooFewPoints, "window needs at least 2 valid points");

  double mean = 0.0;
  double xbar = 0.0;
  double lo = values[0];
  double hi = values[0];
  for (std::size_t i = 0; i < n; ++i) {
    mean += values[i];
    xbar += static_cast<double>(minutes_rel[i]);
    lo = std::min(lo, values[i]);
    hi = std::max(hi, values[i]);
  }
  mean /= static_cast<double>(n);
  xbar /= static_cast<double>(n);
  double ss = 0.0;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dy = values[i] - mean;
    const double dx = static_cast<double>(minutes_rel[i]) - xbar;
    ss += dy * dy;
    sxy += dx * dy;
    sxx += dx * dx;
  }
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
  return {mean, sd, lo, hi, values[n - 1], slope};
}

std::vector<std::string> feature_names(const ModalityConfig& modality) {
  std::vector<std::string> names;
  for (ChannelId c : modality.channels) {
    for (std::string_view stat : kStatNames) names.push_back(std::string(to_string(c)) + "_" + std::string(stat));
  }
  return names;
}

namespace {

struct WindowView {
  std::size_t first = 0;  // index of t - W (clamped to the grid)
  std::size_t last = 0;   // index of t
};

std::optional<WindowView> window_indices(const SampleSeries& s, std::int64_t end_minute, std::int64_t window) {
  const std::int64_t last = end_minute - s.start_minute;
  if (last < 0 || last >= static_cast<std::int64_t>(s.size())) return std::nullopt;
  const std::int64_t first = std::max<std::int64_t>(0, last - window);
  return WindowView{static_cast<std::size_t>(first), static_cast<std::size_t>(last)};
}

bool window_ok(const SampleSeries& s, std::int64_t end_minute, const WindowConfig& win) {
  const auto view = window_indices(s, end_minute, win.window_minutes);
  if (!view) return false;
  std::size_t count = 0;
  for (std::size_t i = view->first; i <= view->last; ++i) count += s.valid[i] ? 1 : 0;
  const double slots = static_cast<double>(win.window_minutes + 1);
  return count >= 2 && static_cast<double>(count) >= win.min_coverage * slots;
}

void check_channels(const ParticipantRecording& rec, const ModalityConfig& modality) {
  for (ChannelId c : modality.channels) {
    if (!rec.has_channel(c)) {
      throw Error(ErrorCode::GridMismatch,
                  rec.participant_id + " lacks channel " + std::string(to_string(c)) + " required by " +
                      std::string(to_string(modality.id)));
    }
    if (rec.channel(c).step_minutes != 1) throw Error(ErrorCode::GridMismatch, "feature channels must be on a 1-minute grid");
  }
}

}  // namespace

std::vector<std::int64_t> select_row_times(const ParticipantRecording& rec, const SegmentFits& phase,
                                           const ModalityConfig& modality, const WindowConfig& win) {
  win.validate();
  check_channels(rec, modality);
  std::vector<std::int64_t> times;
  for (const SegmentFit& seg : phase.segments) {
    std::int64_t t = seg.interval.first + floor_mod(-seg.interval.first, win.stride_minutes);
    for (; t <= seg.interval.last; t += win.stride_minutes) {
      bool ok = true;
      for (ChannelId c : modality.channels) {
        if (!window_ok(rec.channel(c), t, win)) {
          ok = false;
          break;
        }
      }
      if (ok) times.push_back(t);
    }
  }
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  return times;
}

FeatureDataset build_dataset(const ParticipantRecording& rec, const SegmentFits& phase,
                             const ModalityConfig& modality, const WindowConfig& win) {
  FeatureDataset ds;
  ds.feature_names = feature_names(modality);
  const std::vector<std::int64_t> times = select_row_times(rec, phase, modality, win);
  if (times.empty()) {
    ds.warnings.push_back("NoCoverage: participant " + rec.participant_id + " has no rows for " +
                          std::string(to_string(modality.id)) + " W=" + std::to_string(win.window_minutes));
    return ds;
  }

  std::vector<double> vals;
  std::vector<std::int64_t> rel;
  ds.rows.reserve(times.size());
  for (std::int64_t t : times) {
    FeatureRow row;
    row.end_minute = t;
    row.participant_id = rec.participant_id;
    row.ref_theta = *phase.phase_at(t);
    row.target = encode_phase(row.ref_theta);
    row.features.reserve(ds.feature_names.size());
    for (ChannelId c : modality.channels) {
      const SampleSeries& s = rec.channel(c);
      const WindowView view = *window_indices(s, t, win.window_minutes);
      vals.clear();
      rel.clear();
      for (std::size_t i = view.first; i <= view.last; ++i) {
        if (!s.valid[i]) continue;
        vals.push_back(s.values[i]);
        rel.push_back(s.minute_at(i) - t);
      }
      const auto stats = window_stats(vals, rel);
      row.features.insert(row.features.end(), stats.begin(), stats.end());
    }
    ds.rows.push_back(std::move(row));
  }
  return ds;
}

SequenceDataset sequence_view(const ParticipantRecording& rec, const SegmentFits& phase,
                              const ModalityConfig& modality, const WindowConfig& win) {
  SequenceDataset out;
  out.channels = modality.channels;
  out.window_minutes = win.window_minutes;
  out.participant_id = rec.participant_id;
  const std::size_t n_ch = modality.channels.size();
  const auto w = static_cast<std::size_t>(win.window_minutes);
  for (std::int64_t t : select_row_times(rec, phase, modality, win)) {
    SequenceRow row;
    row.end_minute = t;
    row.ref_theta = *phase.phase_at(t);
    row.target = encode_phase(row.ref_theta);
    row.values.assign(w * n_ch, 0.0);
    row.mask.assign(w * n_ch, false);
    for (std::size_t c = 0; c < n_ch; ++c) {
      const SampleSeries& s = rec.channel(modality.channels[c]);
      for (std::size_t k = 0; k < w; ++k) {
        const std::int64_t m = t - static_cast<std::int64_t>(w - 1 - k);
        const std::int64_t idx = m - s.start_minute;
        if (idx < 0 || idx >= static_cast<std::int64_t>(s.size())) continue;
        const auto i = static_cast<std::size_t>(idx);
        if (!s.valid[i]) continue;
        row.values[k * n_ch + c] = s.values[i];
        row.mask[k * n_ch + c] = true;
      }
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace circphase
