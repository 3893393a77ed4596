#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace circphase {

enum class ChannelId {
  LightLux,
  MotionCounts,
  AccX,
  AccY,
  AccZ,
  AccNet,
  HeartRate,
  SkinTemp,
  Cbt,
};

inline constexpr std::array<ChannelId, 9> kAllChannels = {
    ChannelId::LightLux, ChannelId::MotionCounts, ChannelId::AccX,     ChannelId::AccY, ChannelId::AccZ,
    ChannelId::AccNet,   ChannelId::HeartRate,    ChannelId::SkinTemp, ChannelId::Cbt};

/// Channels read from disk. acc_net is always derived.
inline constexpr std::array<ChannelId, 8> kIngestedChannels = {
    ChannelId::LightLux, ChannelId::MotionCounts, ChannelId::AccX,     ChannelId::AccY,
    ChannelId::AccZ,     ChannelId::HeartRate,    ChannelId::SkinTemp, ChannelId::Cbt};

std::string_view to_string(ChannelId id);
std::optional<ChannelId> parse_channel_id(std::string_view name);

struct RawPoint {
  std::int64_t seconds = 0;  // since epoch, UTC
  double value = 0.0;
};

/// Irregular samples for one channel, sorted by time with unique timestamps.
struct RawSeries {
  ChannelId channel = ChannelId::LightLux;
  std::vector<RawPoint> points;
};

struct ParsedChannel {
  RawSeries series;
  std::size_t skipped_rows = 0;
};

/// One channel on a uniform minute grid. Invalid slots hold NaN and are ignored by all statistics.
struct SampleSeries {
  ChannelId channel = ChannelId::LightLux;
  std::int64_t start_minute = 0;
  std::int64_t step_minutes = 1;
  std::vector<double> values;
  std::vector<bool> valid;

  std::size_t size() const { return values.size(); }
  std::int64_t minute_at(std::size_t i) const { return start_minute + static_cast<std::int64_t>(i) * step_minutes; }
  std::int64_t end_minute() const { return minute_at(size()); }  // one past the last slot
  std::size_t valid_count() const;
  bool same_grid(const SampleSeries& other) const {
    return start_minute == other.start_minute && step_minutes == other.step_minutes && size() == other.size();
  }
};

/// Closed interval of minutes [first, last].
struct MinuteInterval {
  std::int64_t first = 0;
  std::int64_t last = 0;

  bool contains(std::int64_t minute) const { return minute >= first && minute <= last; }
  std::int64_t length_minutes() const { return last - first + 1; }
  bool operator==(const MinuteInterval&) const = default;
};

struct ParticipantRecording {
  std::string participant_id;
  std::map<ChannelId, SampleSeries> channels;
  SampleSeries cbt;
  std::vector<MinuteInterval> cbt_coverage;

  const SampleSeries& channel(ChannelId id) const;
  bool has_channel(ChannelId id) const { return channels.count(id) != 0; }
};

/// Reads `timestamp_utc,value` CSV text. Unparseable or non-finite rows are skipped and counted;
/// duplicate timestamps are averaged.
ParsedChannel parse_channel_csv(std::istream& in, ChannelId channel);

/// Mean-bins raw points into [minute, minute + 1) slots of a grid starting at origin_minute.
SampleSeries align_to_minute_grid(const RawSeries& raw, std::int64_t origin_minute, std::int64_t length_minutes);

/// Valid slots of a series as raw points at whole-minute timestamps.
RawSeries to_raw(const SampleSeries& series);

/// Maximal runs of valid samples where consecutive valid minutes are at most max_gap_minutes + 1 apart,
/// i.e. runs that interpolation of gaps up to max_gap_minutes would make contiguous.
std::vector<MinuteInterval> valid_runs(const SampleSeries& series, std::int64_t max_gap_minutes);

ParticipantRecording assemble_recording(std::string participant_id, std::vector<SampleSeries> series,
                                        SampleSeries cbt, std::int64_t max_gap_minutes = 5);

/// Writes valid samples as `timestamp_utc,value` with 17 significant digits.
void write_channel_csv(std::ostream& out, const SampleSeries& series);

/// Loads `<dir>/<channel>.csv` files for one participant onto a shared grid whose origin is the floor of
/// the earliest timestamp across all channels. cbt.csv is required.
ParticipantRecording load_participant(const std::filesystem::path& dir, const std::string& participant_id,
                                      std::int64_t max_gap_minutes = 5);

/// Participant ids (subdirectory names, sorted) under a data directory.
std::vector<std::string> list_participants(const std::filesystem::path& data_dir);

void save_participant(const std::filesystem::path& dir, const ParticipantRecording& rec);

}  // namespace circphase
