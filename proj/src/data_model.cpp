#include "circphase/data_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <set>

#include "circphase/error.hpp"
#include "circphase/timeutil.hpp"

namespace circphase {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::optional<double> parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace

std::string_view to_string(ChannelId id) {
  switch (id) {
    case ChannelId::LightLux: return "light_lux";
    case ChannelId::MotionCounts: return "motion_counts";
    case ChannelId::AccX: return "acc_x";
    case ChannelId::AccY: return "acc_y";
    case ChannelId::AccZ: return "acc_z";
    case ChannelId::AccNet: return "acc_net";
    case ChannelId::HeartRate: return "heart_rate";
    case ChannelId::SkinTemp: return "skin_temp";
    case ChannelId::Cbt: return "cbt";
  }
  return "unknown";
}

std::optional<ChannelId> parse_channel_id(std::string_view name) {
  for (ChannelId id : kAllChannels) {
    if (to_string(id) == name) return id;
  }
  return std::nullopt;
}

std::size_t SampleSeries::valid_count() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), true));
}

const SampleSeries& ParticipantRecording::channel(ChannelId id) const {
  const auto it = channels.find(id);
  if (it == channels.end()) {
    throw Error(ErrorCode::GridMismatch,
                "participant " + participant_id + " has no channel " + std::string(to_string(id)));
  }
  return it->second;
}

ParsedChannel parse_channel_csv(std::istream& in, ChannelId channel) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::EmptyFile, "no header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "timestamp_utc,value") {
    throw Error(ErrorCode::HeaderMismatch, "expected 'timestamp_utc,value', got '" + line + "'");
  }

  ParsedChannel result;
  result.series.channel = channel;
  std::vector<RawPoint> points;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      ++result.skipped_rows;
      continue;
    }
    const auto ts = parse_utc_seconds(std::string_view(line).substr(0, comma));
    const auto value = parse_double(std::string_view(line).substr(comma + 1));
    if (!ts || !value || !std::isfinite(*value)) {
      ++result.skipped_rows;
      continue;
    }
    points.push_back({*ts, *value});
  }
  if (points.empty()) throw Error(ErrorCode::EmptyFile, "no valid rows");

  std::stable_sort(points.begin(), points.end(),
                   [](const RawPoint& a, const RawPoint& b) { return a.seconds < b.seconds; });

  // Average duplicate timestamps.
  auto& out = result.series.points;
  out.reserve(points.size());
  for (std::size_t i = 0; i < points.size();) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < points.size() && points[j].seconds == points[i].seconds) sum += points[j++].value;
    out.push_back({points[i].seconds, sum / static_cast<double>(j - i)});
    i = j;
  }
  return result;
}

SampleSeries align_to_minute_grid(const RawSeries& raw, std::int64_t origin_minute, std::int64_t length_minutes) {
  if (length_minutes <= 0) throw Error(ErrorCode::InvalidParams, "grid length must be positive");
  const auto n = static_cast<std::size_t>(length_minutes);
  std::vector<double> sums(n, 0.0);
  std::vector<std::uint32_t> counts(n, 0);
  for (const RawPoint& p : raw.points) {
    const std::int64_t idx = floor_div(p.seconds, 60) - origin_minute;
    if (idx < 0 || idx >= length_minutes) {
      throw Error(ErrorCode::GridOverflow, std::string(to_string(raw.channel)) + " point at " +
                                               format_utc_seconds(p.seconds) + " lies outside the grid");
    }
    sums[static_cast<std::size_t>(idx)] += p.value;
    ++counts[static_cast<std::size_t>(idx)];
  }

  SampleSeries s;
  s.channel = raw.channel;
  s.start_minute = origin_minute;
  s.step_minutes = 1;
  s.values.assign(n, kNaN);
  s.valid.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    if (counts[i] == 0) continue;
    s.values[i] = sums[i] / static_cast<double>(counts[i]);
    s.valid[i] = true;
  }
  return s;
}

RawSeries to_raw(const SampleSeries& series) {
  RawSeries raw;
  raw.channel = series.channel;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series.valid[i]) raw.points.push_back({series.minute_at(i) * 60, series.values[i]});
  }
  return raw;
}

std::vector<MinuteInterval> valid_runs(const SampleSeries& series, std::int64_t max_gap_minutes) {
  std::vector<MinuteInterval> runs;
  std::optional<std::int64_t> run_start;
  std::int64_t prev = 0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (!series.valid[i]) continue;
    const std::int64_t m = series.minute_at(i);
    if (!run_start) {
      run_start = m;
    } else if (m - prev - 1 > max_gap_minutes) {
      runs.push_back({*run_start, prev});
      run_start = m;
    }
    prev = m;
  }
  if (run_start) runs.push_back({*run_start, prev});
  return runs;
}

ParticipantRecording assemble_recording(std::string participant_id, std::vector<SampleSeries> series,
                                        SampleSeries cbt, std::int64_t max_gap_minutes) {
  ParticipantRecording rec;
  rec.participant_id = std::move(participant_id);
  for (SampleSeries& s : series) {
    if (s.values.size() != s.valid.size()) throw Error(ErrorCode::GridMismatch, "values/valid length differ");
    if (!s.same_grid(cbt)) {
      throw Error(ErrorCode::GridMismatch, std::string(to_string(s.channel)) + " grid differs from cbt grid");
    }
    if (s.channel == ChannelId::Cbt) throw Error(ErrorCode::DuplicateChannel, "cbt passed as a wearable channel");
    const ChannelId id = s.channel;
    if (!rec.channels.emplace(id, std::move(s)).second) {
      throw Error(ErrorCode::DuplicateChannel, std::string(to_string(id)));
    }
  }
  if (cbt.values.size() != cbt.valid.size()) throw Error(ErrorCode::GridMismatch, "cbt values/valid length differ");
  rec.cbt_coverage = valid_runs(cbt, max_gap_minutes);
  rec.cbt = std::move(cbt);
  return rec;
}

void write_channel_csv(std::ostream& out, const SampleSeries& series) {
  out << "timestamp_utc,value\n";
  char buf[64];
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (!series.valid[i]) continue;
    std::snprintf(buf, sizeof(buf), "%.17g", series.values[i]);
    out << format_utc_minute(series.minute_at(i)) << ',' << buf << '\n';
  }
}

ParticipantRecording load_participant(const fs::path& dir, const std::string& participant_id,
                                      std::int64_t max_gap_minutes) {
  std::vector<RawSeries> raws;
  for (ChannelId id : kIngestedChannels) {
    const fs::path file = dir / (std::string(to_string(id)) + ".csv");
    if (!fs::exists(file)) continue;
    std::ifstream in(file);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + file.string());
    try {
      raws.push_back(parse_channel_csv(in, id).series);
    } catch (const Error& e) {
      throw Error(e.code(), file.string() + ": " + e.what());
    }
  }
  const bool has_cbt = std::any_of(raws.begin(), raws.end(), [](const RawSeries& r) { return r.channel == ChannelId::Cbt; });
  if (!has_cbt) throw Error(ErrorCode::Io, "missing cbt.csv in " + dir.string());

  std::int64_t first = std::numeric_limits<std::int64_t>::max();
  std::int64_t last = std::numeric_limits<std::int64_t>::min();
  for (const RawSeries& r : raws) {
    first = std::min(first, floor_div(r.points.front().seconds, 60));
    last = std::max(last, floor_div(r.points.back().seconds, 60));
  }
  const std::int64_t length = last - first + 1;

  std::vector<SampleSeries> aligned;
  SampleSeries cbt;
  for (const RawSeries& r : raws) {
    SampleSeries s = align_to_minute_grid(r, first, length);
    if (r.channel == ChannelId::Cbt) {
      cbt = std::move(s);
    } else {
      aligned.push_back(std::move(s));
    }
  }
  return assemble_recording(participant_id, std::move(aligned), std::move(cbt), max_gap_minutes);
}

std::vector<std::string> list_participants(const fs::path& data_dir) {
  if (!fs::is_directory(data_dir)) throw Error(ErrorCode::Io, "data directory not found: " + data_dir.string());
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(data_dir)) {
    if (entry.is_directory()) ids.push_back(entry.path().filename().string());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

void save_participant(const fs::path& dir, const ParticipantRecording& rec) {
  fs::create_directories(dir);
  auto write = [&](const SampleSeries& s) {
    const fs::path file = dir / (std::string(to_string(s.channel)) + ".csv");
    std::ofstream out(file);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + file.string());
    write_channel_csv(out, s);
  };
  for (const auto& [id, s] : rec.channels) {
    if (id != ChannelId::AccNet) write(s);
  }
  write(rec.cbt);
}

}  // namespace circphase
