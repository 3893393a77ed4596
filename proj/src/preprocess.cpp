#include "circphase/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "circphase/error.hpp"

namespace circphase {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> valid_values(const SampleSeries& s) {
  std::vector<double> v;
  v.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.valid[i]) v.push_back(s.values[i]);
  }
  return v;
}

void invalidate(SampleSeries& s, std::size_t i) {
  s.valid[i] = false;
  s.values[i] = kNaN;
}

}  // namespace

void PreprocessConfig::validate() const {
  if (!(iqr_multiplier > 0.0) || max_interp_gap_minutes <= 0 || !(light_log_offset > 0.0) ||
      !(zscore_epsilon > 0.0)) {
    throw Error(ErrorCode::InvalidParams, "preprocess parameters must all be positive");
  }
}

double quantile_linear(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw Error(ErrorCode::EmptyInput, "quantile of empty data");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

SampleSeries remove_outliers_iqr(const SampleSeries& s, double k) {
  std::vector<double> v = valid_values(s);
  if (v.size() < 4) {
    throw Error(ErrorCode::TooFewSamples, std::string(to_string(s.channel)) + " has fewer than 4 valid samples");
  }
  std::sort(v.begin(), v.end());
  const double q1 = quantile_linear(v, 0.25);
  const double q3 = quantile_linear(v, 0.75);
  const double iqr = q3 - q1;
  const double lo = q1 - k * iqr;
  const double hi = q3 + k * iqr;
  SampleSeries out = s;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out.valid[i] && (out.values[i] < lo || out.values[i] > hi)) invalidate(out, i);
  }
  return out;
}

SampleSeries interpolate_short_gaps(const SampleSeries& s, std::int64_t max_gap) {
  SampleSeries out = s;
  const std::size_t n = out.size();
  std::size_t i = 0;
  while (i < n && !out.valid[i]) ++i;  // leading run stays invalid
  while (i < n) {
    // i is valid; find the next invalid run.
    std::size_t j = i + 1;
    while (j < n && out.valid[j]) ++j;
    if (j >= n) break;
    std::size_t k = j;
    while (k < n && !out.valid[k]) ++k;
    if (k >= n) break;  // trailing run
    const std::size_t left = j - 1;
    const auto gap = static_cast<std::int64_t>(k - j);
    if (gap <= max_gap) {
      const double v0 = out.values[left];
      const double v1 = out.values[k];
      const double span = static_cast<double>(k - left);
      for (std::size_t m = j; m < k; ++m) {
        out.values[m] = v0 + (v1 - v0) * static_cast<double>(m - left) / span;
        out.valid[m] = true;
      }
    }
    i = k;
  }
  return out;
}

SampleSeries compute_acc_net(const SampleSeries& ax, const SampleSeries& ay, const SampleSeries& az) {
  if (!ax.same_grid(ay) || !ax.same_grid(az)) throw Error(ErrorCode::GridMismatch, "acceleration axes differ in grid");
  SampleSeries out = ax;
  out.channel = ChannelId::AccNet;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (ax.valid[i] && ay.valid[i] && az.valid[i]) {
      const double x = ax.values[i], y = ay.values[i], z = az.values[i];
      out.values[i] = std::max(std::sqrt(x * x + y * y + z * z) - 1.0, 0.0);
      out.valid[i] = true;
    } else {
      invalidate(out, i);
    }
  }
  return out;
}

SampleSeries log_transform_light(const SampleSeries& s, double offset) {
  SampleSeries out = s;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!out.valid[i]) continue;
    if (out.values[i] < 0.0) throw Error(ErrorCode::NegativeLux, "negative light value");
    out.values[i] = std::log10(out.values[i] + offset);
  }
  return out;
}

ZScored zscore_participant(const SampleSeries& s, double epsilon) {
  const std::vector<double> v = valid_values(s);
  if (v.size() < 2) {
    throw Error(ErrorCode::TooFewSamples, std::string(to_string(s.channel)) + " needs 2 valid samples to z-score");
  }
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));

  ZScored out{s, {mean, sd, v.size(), sd < epsilon}};
  for (std::size_t i = 0; i < out.series.size(); ++i) {
    if (!out.series.valid[i]) continue;
    out.series.values[i] = out.stats.degenerate ? 0.0 : (out.series.values[i] - mean) / sd;
  }
  return out;
}

PreprocessedRecording preprocess_recording(const ParticipantRecording& r, const PreprocessConfig& cfg) {
  cfg.validate();
  auto clean = [&](const SampleSeries& s) {
    return interpolate_short_gaps(remove_outliers_iqr(s, cfg.iqr_multiplier), cfg.max_interp_gap_minutes);
  };

  std::map<ChannelId, SampleSeries> cleaned;
  for (const auto& [id, s] : r.channels) {
    if (id == ChannelId::AccNet) continue;  // re-derived below
    SampleSeries c = clean(s);
    if (id == ChannelId::LightLux) c = log_transform_light(c, cfg.light_log_offset);
    cleaned.emplace(id, std::move(c));
  }
  if (cleaned.count(ChannelId::AccX) && cleaned.count(ChannelId::AccY) && cleaned.count(ChannelId::AccZ)) {
    cleaned.emplace(ChannelId::AccNet, compute_acc_net(cleaned.at(ChannelId::AccX), cleaned.at(ChannelId::AccY),
                                                       cleaned.at(ChannelId::AccZ)));
  }

  PreprocessedRecording out;
  out.recording.participant_id = r.participant_id;
  for (auto& [id, s] : cleaned) {
    ZScored z = zscore_participant(s, cfg.zscore_epsilon);
    out.stats.emplace(id, z.stats);
    out.recording.channels.emplace(id, std::move(z.series));
  }
  out.recording.cbt = clean(r.cbt);
  out.recording.cbt_coverage = valid_runs(out.recording.cbt, 0);
  return out;
}

}  // namespace circphase
