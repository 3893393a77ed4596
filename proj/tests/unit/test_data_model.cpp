#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <sstream>

#include "../support/helpers.hpp"
#include "circphase/data_model.hpp"
#include "circphase/error.hpp"
#include "circphase/timeutil.hpp"

using namespace circphase;

using testing_support::code_of;

TEST_CASE("UTC timestamps") {
  CHECK(parse_utc_seconds("1970-01-01T00:00:00Z") == 0);
  CHECK(parse_utc_seconds("2021-10-04T00:00:00Z") == 27221760LL * 60);
  CHECK(parse_utc_seconds("2020-02-29T23:59:59Z") == 1583020799);
  CHECK_FALSE(parse_utc_seconds("2021-02-29T00:00:00Z").has_value());
  CHECK_FALSE(parse_utc_seconds("2021-10-04 00:00:00").has_value());
  CHECK_FALSE(parse_utc_seconds("2021-10-04T24:00:00Z").has_value());
  CHECK(format_utc_seconds(1583020799) == "2020-02-29T23:59:59Z");
  CHECK(format_utc_minute(27221760) == "2021-10-04T00:00:00Z");
  CHECK(floor_div(-1, 60) == -1);
  CHECK(floor_mod(-1, 1440) == 1439);
}

TEST_CASE("channel names round trip") {
  for (ChannelId id : kAllChannels) CHECK(parse_channel_id(to_string(id)) == id);
  CHECK_FALSE(parse_channel_id("lux").has_value());
}

TEST_CASE("CSV parsing skips bad rows and averages duplicates") {
  std::istringstream in(
      "timestamp_utc,value\r\n"
      "2021-10-04T00:01:00Z,3\r\n"
      "2021-10-04T00:00:00Z,1\n"
      "garbage,2\n"
      "2021-10-04T00:02:00Z,nan\n"
      "2021-10-04T00:01:00Z,5\n");
  const ParsedChannel p = parse_channel_csv(in, ChannelId::HeartRate);
  CHECK(p.skipped_rows == 2);
  REQUIRE(p.series.points.size() == 2);
  CHECK(p.series.points[0].value == 1.0);
  CHECK(p.series.points[1].value == 4.0);
  CHECK(p.series.points[1].seconds - p.series.points[0].seconds == 60);
}

TEST_CASE("CSV errors") {
  CHECK(code_of([] {
          std::istringstream in("");
          parse_channel_csv(in, ChannelId::Cbt);
        }) == ErrorCode::EmptyFile);
  CHECK(code_of([] {
          std::istringstream in("time,value\n2021-10-04T00:00:00Z,1\n");
          parse_channel_csv(in, ChannelId::Cbt);
        }) == ErrorCode::HeaderMismatch);
  CHECK(code_of([] {
          std::istringstream in("timestamp_utc,value\nx,1\n");
          parse_channel_csv(in, ChannelId::Cbt);
        }) == ErrorCode::EmptyFile);
}

TEST_CASE("minute binning matches a brute-force average") {
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<std::int64_t> sec(0, 600 * 60 - 1);
  std::normal_distribution<double> val(0, 1);
  const std::int64_t origin = 27221760;
  RawSeries raw;
  for (int i = 0; i < 2000; ++i) raw.points.push_back({origin * 60 + sec(gen), val(gen)});
  std::sort(raw.points.begin(), raw.points.end(), [](auto& a, auto& b) { return a.seconds < b.seconds; });
  const SampleSeries s = align_to_minute_grid(raw, origin, 600);
  std::map<std::int64_t, std::pair<double, int>> acc;
  for (const auto& p : raw.points) {
    auto& [sum, n] = acc[p.seconds / 60 - origin];
    sum += p.value;
    ++n;
  }
  for (std::int64_t m = 0; m < 600; ++m) {
    const auto it = acc.find(m);
    CHECK(s.valid[m] == (it != acc.end()));
    if (it != acc.end()) CHECK(s.values[m] == doctest::Approx(it->second.first / it->second.second).epsilon(1e-14));
  }
  RawSeries late;
  late.points.push_back({(origin + 600) * 60, 1.0});
  CHECK(code_of([&] { align_to_minute_grid(late, origin, 600); }) == ErrorCode::GridOverflow);
}

TEST_CASE("series written to CSV reads back identically") {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  SampleSeries s;
  s.channel = ChannelId::SkinTemp;
  s.start_minute = 27221760;
  for (int i = 0; i < 300; ++i) {
    const bool ok = (i % 7) != 3;
    s.values.push_back(ok ? u(gen) : NAN);
    s.valid.push_back(ok);
  }
  std::stringstream io;
  write_channel_csv(io, s);
  const ParsedChannel p = parse_channel_csv(io, ChannelId::SkinTemp);
  const SampleSeries back = align_to_minute_grid(p.series, s.start_minute, static_cast<std::int64_t>(s.size()));
  CHECK(back.valid == s.valid);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.valid[i]) CHECK(back.values[i] == s.values[i]);
  }
}

TEST_CASE("valid runs merge short gaps") {
  SampleSeries s;
  s.start_minute = 100;
  s.valid = {true, true, false, false, true, false, false, false, false, false, false, true};
  s.values.assign(s.valid.size(), 0.0);
  const auto strict = valid_runs(s, 0);
  REQUIRE(strict.size() == 3);
  CHECK(strict[0] == MinuteInterval{100, 101});
  const auto merged = valid_runs(s, 2);
  REQUIRE(merged.size() == 2);
  CHECK(merged[0] == MinuteInterval{100, 104});
  CHECK(merged[1] == MinuteInterval{111, 111});
  CHECK(valid_runs(s, 6).size() == 1);
}

TEST_CASE("recording assembly checks grids and duplicates") {
  auto series = [](ChannelId id, std::size_t n) {
    SampleSeries s;
    s.channel = id;
    s.start_minute = 0;
    s.values.assign(n, 1.0);
    s.valid.assign(n, true);
    return s;
  };
  const ParticipantRecording rec = assemble_recording("P", {series(ChannelId::LightLux, 10)}, series(ChannelId::Cbt, 10));
  CHECK(rec.has_channel(ChannelId::LightLux));
  CHECK(rec.cbt_coverage.size() == 1);
  CHECK(code_of([&] { rec.channel(ChannelId::HeartRate); }) == ErrorCode::GridMismatch);
  CHECK(code_of([&] {
          assemble_recording("P", {series(ChannelId::LightLux, 9)}, series(ChannelId::Cbt, 10));
        }) == ErrorCode::GridMismatch);
  CHECK(code_of([&] {
          assemble_recording("P", {series(ChannelId::LightLux, 10), series(ChannelId::LightLux, 10)},
                             series(ChannelId::Cbt, 10));
        }) == ErrorCode::DuplicateChannel);
}

TEST_CASE("participant directory round trip") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "circphase_dm_test" / "P07";
  fs::remove_all(dir.parent_path());
  SampleSeries light, cbt;
  light.channel = ChannelId::LightLux;
  cbt.channel = ChannelId::Cbt;
  light.start_minute = cbt.start_minute = 27221760;
  for (int i = 0; i < 2000; ++i) {
    light.values.push_back(i % 3 == 0 ? NAN : i * 1.5);
    light.valid.push_back(i % 3 != 0);
    cbt.values.push_back(i % 5 == 0 ? 37 + 0.001 * i : NAN);
    cbt.valid.push_back(i % 5 == 0);
  }
  const ParticipantRecording rec = assemble_recording("P07", {light}, cbt);
  save_participant(dir, rec);
  const ParticipantRecording back = load_participant(dir, "P07");
  CHECK(list_participants(dir.parent_path()) == std::vector<std::string>{"P07"});
  CHECK(back.cbt.start_minute == cbt.start_minute);
  CHECK(back.channel(ChannelId::LightLux).start_minute == light.start_minute);
  const auto& l2 = back.channel(ChannelId::LightLux);
  for (std::size_t i = 0; i < l2.size(); ++i) {
    CHECK(l2.valid[i] == light.valid[i + (l2.start_minute - light.start_minute)]);
  }
  CHECK(back.cbt_coverage == rec.cbt_coverage);
  fs::remove(dir / "cbt.csv");
  CHECK(code_of([&] { load_participant(dir, "P07"); }) == ErrorCode::Io);
  fs::remove_all(dir.parent_path());
}
