#include <doctest.h>

#include <cmath>
#include <random>

#include "../support/helpers.hpp"
#include "circphase/preprocess.hpp"
#include "circphase/synth.hpp"

using namespace circphase;
using testing_support::code_of;

namespace {

SampleSeries make(std::vector<double> v, ChannelId id = ChannelId::HeartRate) {
  SampleSeries s;
  s.channel = id;
  s.start_minute = 1000;
  for (double x : v) {
    s.valid.push_back(!std::isnan(x));
    s.values.push_back(x);
  }
  return s;
}

std::pair<double, double> mean_sd(const SampleSeries& s) {
  double m = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.valid[i]) {
      m += s.values[i];
      ++n;
    }
  }
  m /= static_cast<double>(n);
  double ss = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.valid[i]) ss += (s.values[i] - m) * (s.values[i] - m);
  }
  return {m, std::sqrt(ss / static_cast<double>(n - 1))};
}

}  // namespace

TEST_CASE("linear quantiles") {
  const std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9, 1000};
  CHECK(quantile_linear(v, 0.25) == doctest::Approx(3.25));
  CHECK(quantile_linear(v, 0.75) == doctest::Approx(7.75));
  CHECK(quantile_linear(v, 0.0) == 1);
  CHECK(quantile_linear(v, 1.0) == 1000);
}

TEST_CASE("IQR outlier removal") {
  SampleSeries s = make({1, 2, 3, 4, 5, 6, 7, 8, 9, 1000});
  const SampleSeries out = remove_outliers_iqr(s, 1.5);
  // Q1 = 3.25, Q3 = 7.75, band [-3.5, 14.5]
  for (std::size_t i = 0; i < 9; ++i) CHECK(out.valid[i]);
  CHECK_FALSE(out.valid[9]);

  const SampleSeries flat = remove_outliers_iqr(make(std::vector<double>(8, 2.5)), 1.5);
  CHECK(flat.valid_count() == 8);

  std::vector<double> ramp;
  for (int i = 1; i <= 100; ++i) ramp.push_back(i);
  CHECK(remove_outliers_iqr(make(ramp), 3.0).valid_count() == 100);
  CHECK(code_of([] { remove_outliers_iqr(make({1, 2, 3}), 1.5); }) == ErrorCode::TooFewSamples);
}

TEST_CASE("short gaps are interpolated, long and boundary gaps are not") {
  const SampleSeries a = interpolate_short_gaps(make({10, NAN, NAN, 16}), 5);
  CHECK(a.valid_count() == 4);
  CHECK(a.values[1] == doctest::Approx(12));
  CHECK(a.values[2] == doctest::Approx(14));

  const SampleSeries b = interpolate_short_gaps(make({1, NAN, NAN, NAN, NAN, NAN, NAN, 8}), 5);
  CHECK(b.valid_count() == 2);

  const SampleSeries c = interpolate_short_gaps(make({NAN, NAN, NAN, 4, 5, NAN}), 5);
  CHECK_FALSE(c.valid[0]);
  CHECK_FALSE(c.valid[2]);
  CHECK_FALSE(c.valid[5]);

  const SampleSeries none = interpolate_short_gaps(make({NAN, NAN}), 5);
  CHECK(none.valid_count() == 0);
}

TEST_CASE("net acceleration") {
  const SampleSeries x = make({1, 3, 0, NAN}), y = make({0, 4, 0, 0}), z = make({0, 0, 0, 0});
  const SampleSeries n = compute_acc_net(x, y, z);
  CHECK(n.channel == ChannelId::AccNet);
  CHECK(n.values[0] == 0.0);
  CHECK(n.values[1] == doctest::Approx(4.0));
  CHECK(n.values[2] == 0.0);
  CHECK_FALSE(n.valid[3]);
  CHECK(code_of([&] { compute_acc_net(x, make({1, 2}), z); }) == ErrorCode::GridMismatch);
}

TEST_CASE("light log transform") {
  const SampleSeries l = log_transform_light(make({0, 999, 9999, NAN}, ChannelId::LightLux), 1.0);
  CHECK(l.values[0] == 0.0);
  CHECK(l.values[1] == doctest::Approx(3.0));
  CHECK(l.values[2] == doctest::Approx(4.0));
  CHECK_FALSE(l.valid[3]);
  CHECK(code_of([] { log_transform_light(make({-1.0}, ChannelId::LightLux), 1.0); }) == ErrorCode::NegativeLux);
}

TEST_CASE("z-score") {
  const ZScored two = zscore_participant(make({1, 3}));
  CHECK(two.series.values[0] == doctest::Approx(-0.70710678118));
  CHECK(two.series.values[1] == doctest::Approx(0.70710678118));
  CHECK(two.stats.sd == doctest::Approx(std::sqrt(2.0)));

  const ZScored flat = zscore_participant(make({4, 4, 4}));
  CHECK(flat.stats.degenerate);
  CHECK(flat.series.values == std::vector<double>{0, 0, 0});

  std::mt19937_64 gen(2);
  std::normal_distribution<double> n(5, 3);
  std::vector<double> v(1000);
  for (double& x : v) x = n(gen);
  const auto [m, sd] = mean_sd(zscore_participant(make(v)).series);
  CHECK(std::fabs(m) < 1e-12);
  CHECK(std::fabs(sd - 1.0) < 1e-12);
  CHECK(code_of([] { zscore_participant(make({1})); }) == ErrorCode::TooFewSamples);
}

TEST_CASE("recording preprocessing normalizes every wearable channel") {
  SynthParams p;
  p.n_participants = 2;
  p.days = 5;
  for (const auto& sp : generate_cohort(p)) {
    const PreprocessedRecording r = preprocess_recording(sp.recording, PreprocessConfig{});
    CHECK(r.recording.has_channel(ChannelId::AccNet));
    for (const auto& [id, s] : r.recording.channels) {
      const auto [m, sd] = mean_sd(s);
      CHECK(std::fabs(m) < 1e-9);
      CHECK(std::fabs(sd - 1.0) < 1e-9);
    }
    CHECK(r.recording.cbt.valid_count() >= sp.recording.cbt.valid_count());
  }
}

TEST_CASE("noiseless CBT survives cleaning unchanged on its own samples") {
  SynthParams p = SynthParams::noiseless();
  p.n_participants = 1;
  p.days = 5;
  const SynthParticipant sp = generate_participant(p, 0);
  const PreprocessedRecording r = preprocess_recording(sp.recording, PreprocessConfig{});
  const SampleSeries& before = sp.recording.cbt;
  const SampleSeries& after = r.recording.cbt;
  for (std::size_t i = 0; i < before.size(); ++i) {
    if (before.valid[i]) CHECK(after.values[i] == before.values[i]);
  }
  REQUIRE(r.recording.cbt_coverage.size() == 1);
}

TEST_CASE("a ten-minute light gap stays invalid") {
  SynthParams p;
  p.n_participants = 1;
  p.days = 4;
  SynthParticipant sp = generate_participant(p, 0);
  SampleSeries& light = sp.recording.channels.at(ChannelId::LightLux);
  for (std::size_t i = 3000; i < 3010; ++i) {
    light.valid[i] = false;
    light.values[i] = NAN;
  }
  const PreprocessedRecording r = preprocess_recording(sp.recording, PreprocessConfig{});
  for (std::size_t i = 3000; i < 3010; ++i) CHECK_FALSE(r.recording.channel(ChannelId::LightLux).valid[i]);
}
