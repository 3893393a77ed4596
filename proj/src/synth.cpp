#include "circphase/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "circphase/circular.hpp"
#include "circphase/cosinor.hpp"
#include "circphase/error.hpp"
#include "circphase/rng.hpp"
#include "circphase/timeutil.hpp"

namespace circphase {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::int64_t kCbtDays = 3;
constexpr std::int64_t kCbtStepMinutes = 5;
constexpr std::int64_t kSkinStepMinutes = 5;

constexpr double kDaylightPeakLux = 10000.0;
constexpr double kArtificialLux = 100.0;
constexpr double kDaylightStart = 8.0 * 60.0;
constexpr double kDaylightEnd = 20.0 * 60.0;

constexpr double kMotionScale = 250.0;
constexpr double kSkinMesor = 33.0;
constexpr double kSkinAmplitude = 0.5;
constexpr double kSkinMaskingSd = 1.2;
constexpr double kSkinDayOffsetSd = 0.8;
constexpr double kSkinMaskingTau = 180.0;  // minutes
constexpr double kHeartRateBase = 60.0;

SampleSeries empty_series(ChannelId id, std::int64_t start, std::size_t n) {
  SampleSeries s;
  s.channel = id;
  s.start_minute = start;
  s.step_minutes = 1;
  s.values.assign(n, kNaN);
  s.valid.assign(n, false);
  return s;
}

void set(SampleSeries& s, std::size_t i, double v) {
  s.values[i] = v;
  s.valid[i] = true;
}

/// Zero-mean AR(1) with the given stationary sd and time constant, one step per minute.
class Ar1 {
 public:
  Ar1(double sd, double tau) : rho_(std::exp(-1.0 / tau)), innov_(sd * std::sqrt(1.0 - rho_ * rho_)) {}
  double step(Rng& rng, double sd_scale_for_start) {
    if (!started_) {
      x_ = sd_scale_for_start * rng.normal();
      started_ = true;
    } else {
      x_ = rho_ * x_ + innov_ * rng.normal();
    }
    return x_;
  }

 private:
  double rho_;
  double innov_;
  double x_ = 0.0;
  bool started_ = false;
};

}  // namespace

std::map<ChannelId, double> SynthParams::default_noise() {
  return {
      {ChannelId::LightLux, 0.5},  {ChannelId::MotionCounts, 0.6}, {ChannelId::AccX, 0.02},
      {ChannelId::AccY, 0.02},     {ChannelId::AccZ, 0.02},        {ChannelId::HeartRate, 5.0},
      {ChannelId::SkinTemp, 0.2},  {ChannelId::Cbt, 0.05},
  };
}

SynthParams SynthParams::noiseless() {
  SynthParams p;
  for (auto& [id, sd] : p.noise_sd) sd = 0.0;
  p.masking_strength = 0.0;
  p.schedule_jitter_minutes = 0.0;
  return p;
}

void SynthParams::validate() const {
  if (n_participants == 0) throw Error(ErrorCode::InvalidParams, "n_participants must be positive");
  if (days < 4) throw Error(ErrorCode::InvalidParams, "days must be at least 4");
  if (!(acrophase_lo <= acrophase_hi) || !std::isfinite(acrophase_lo) || !std::isfinite(acrophase_hi)) {
    throw Error(ErrorCode::InvalidParams, "acrophase range is empty");
  }
  if (!(cbt_amplitude >= 0.0)) throw Error(ErrorCode::InvalidParams, "cbt_amplitude must be non-negative");
  for (const auto& [id, sd] : noise_sd) {
    if (!(sd >= 0.0)) throw Error(ErrorCode::InvalidParams, "noise sd for " + std::string(to_string(id)) + " is negative");
  }
  if (!(masking_strength >= 0.0)) throw Error(ErrorCode::InvalidParams, "masking_strength must be non-negative");
  if (!(schedule_jitter_minutes >= 0.0)) throw Error(ErrorCode::InvalidParams, "schedule jitter must be non-negative");
  if (!(sleep_onset_hour >= 0.0 && sleep_onset_hour < 24.0 && wake_hour >= 0.0 && wake_hour < 24.0)) {
    throw Error(ErrorCode::InvalidParams, "sleep/wake hours must lie in [0, 24)");
  }
  if (floor_mod(start_minute, kMinutesPerDay) != 0) {
    throw Error(ErrorCode::InvalidParams, "start_minute must be a UTC midnight");
  }
}

double SynthParams::noise(ChannelId id) const {
  const auto it = noise_sd.find(id);
  return it == noise_sd.end() ? 0.0 : it->second;
}

double SynthTruth::phase_at(std::int64_t minute) const { return cosinor_phase_at(acrophase, minute); }

std::string synth_participant_id(std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "P%02zu", index + 1);
  return buf;
}

SynthParticipant generate_participant(const SynthParams& params, std::size_t index) {
  params.validate();
  if (index >= params.n_participants) throw Error(ErrorCode::InvalidParams, "participant index out of range");

  const std::uint64_t pseed = derive_seed(params.seed, static_cast<std::uint64_t>(index));
  Rng base(derive_seed(pseed, "acrophase"));
  const double phi = wrap_two_pi(params.acrophase_lo + (params.acrophase_hi - params.acrophase_lo) * base.uniform());

  SynthTruth truth{synth_participant_id(index), phi};

  const auto n = static_cast<std::size_t>(params.days) * static_cast<std::size_t>(kMinutesPerDay);
  const std::int64_t start = params.start_minute;

  // Sleep schedule locked to the planted phase: a larger acrophase means an earlier clock.
  const double mid = 0.5 * (params.acrophase_lo + params.acrophase_hi);
  const double dphi = std::remainder(phi - mid, kTwoPi);
  const double shift = -dphi / kOmegaPerMinute;
  Rng sched(derive_seed(pseed, "schedule"));
  std::vector<bool> asleep(n, false);
  {
    auto jitter = [&] { return params.schedule_jitter_minutes * sched.normal(); };
    const double wake_clock = params.wake_hour * 60.0 + shift;
    double onset_clock = params.sleep_onset_hour * 60.0 + shift;
    if (onset_clock < wake_clock) onset_clock += 1440.0;
    // Night before day 0 ends at the first wake.
    double wake = wake_clock + jitter();
    for (std::int64_t m = 0; m < static_cast<std::int64_t>(n) && m < std::llround(wake); ++m) {
      asleep[static_cast<std::size_t>(m)] = true;
    }
    for (int d = 0; d < params.days; ++d) {
      const double day0 = static_cast<double>(d) * 1440.0;
      const double onset = day0 + onset_clock + jitter();
      const double next_wake = day0 + 1440.0 + wake_clock + jitter();
      const auto a = std::max<std::int64_t>(0, std::llround(onset));
      const auto b = std::min<std::int64_t>(static_cast<std::int64_t>(n), std::llround(next_wake));
      for (std::int64_t m = a; m < b; ++m) asleep[static_cast<std::size_t>(m)] = true;
    }
  }

  SampleSeries light = empty_series(ChannelId::LightLux, start, n);
  SampleSeries motion = empty_series(ChannelId::MotionCounts, start, n);
  SampleSeries ax = empty_series(ChannelId::AccX, start, n);
  SampleSeries ay = empty_series(ChannelId::AccY, start, n);
  SampleSeries az = empty_series(ChannelId::AccZ, start, n);
  SampleSeries hr = empty_series(ChannelId::HeartRate, start, n);
  SampleSeries skin = empty_series(ChannelId::SkinTemp, start, n);
  SampleSeries cbt = empty_series(ChannelId::Cbt, start, n);

  Rng r_light(derive_seed(pseed, "light_lux"));
  Rng r_motion(derive_seed(pseed, "motion_counts"));
  Rng r_acc(derive_seed(pseed, "acc"));
  Rng r_hr(derive_seed(pseed, "heart_rate"));
  Rng r_skin(derive_seed(pseed, "skin_temp"));
  Rng r_cbt(derive_seed(pseed, "cbt"));

  const double sd_light = params.noise(ChannelId::LightLux);
  const double sd_motion = params.noise(ChannelId::MotionCounts);
  const double sd_acc = params.noise(ChannelId::AccX);
  const double sd_hr = params.noise(ChannelId::HeartRate);
  const double sd_skin = params.noise(ChannelId::SkinTemp);
  const double sd_cbt = params.noise(ChannelId::Cbt);
  const double mask = params.masking_strength;
  const bool noisy = sd_light > 0.0;

  std::vector<double> cloud(static_cast<std::size_t>(params.days), 1.0);
  for (double& c : cloud) c = noisy ? r_light.uniform(0.3, 1.0) : 1.0;
  std::vector<double> skin_offset(static_cast<std::size_t>(params.days), 0.0);
  for (double& o : skin_offset) o = mask * kSkinDayOffsetSd * r_skin.normal();
  Ar1 skin_ar(kSkinMaskingSd, kSkinMaskingTau);
  Ar1 hr_ar(4.0, 60.0);

  const std::int64_t cbt_first = static_cast<std::int64_t>(n) - kCbtDays * kMinutesPerDay;

  for (std::size_t i = 0; i < n; ++i) {
    const std::int64_t t = start + static_cast<std::int64_t>(i);
    const double clock = static_cast<double>(minute_of_day(t));
    const std::size_t day = i / static_cast<std::size_t>(kMinutesPerDay);
    const double theta = truth.phase_at(t);
    const bool awake = !asleep[i];
    // Rest-activity rhythm peaks three hours before the CBT maximum.
    const double activity = awake ? 1.0 + 0.5 * std::cos(theta + std::numbers::pi / 4.0) : 0.0;

    // Light: daylight half-sine gated by wake, artificial plateau otherwise.
    double lux = 0.0;
    if (awake) {
      double daylight = 0.0;
      if (clock >= kDaylightStart && clock < kDaylightEnd) {
        daylight = kDaylightPeakLux * cloud[day] *
                   std::sin(std::numbers::pi * (clock - kDaylightStart) / (kDaylightEnd - kDaylightStart));
      }
      lux = std::max(daylight, kArtificialLux);
      if (sd_light > 0.0) lux *= std::exp(sd_light * r_light.normal() - 0.5 * sd_light * sd_light);
    }
    set(light, i, std::max(lux, 0.0));

    // Motion counts.
    double counts = 0.0;
    if (awake) {
      counts = kMotionScale * activity;
      if (sd_motion > 0.0) counts *= std::exp(sd_motion * r_motion.normal() - 0.5 * sd_motion * sd_motion);
    } else if (sd_motion > 0.0 && r_motion.uniform() < 0.05) {
      counts = 20.0 * r_motion.uniform();
    }
    set(motion, i, std::max(counts, 0.0));

    // Tri-axial acceleration in g: gravity plus an activity-scaled dynamic component.
    {
      const double dyn = awake ? 0.2 * activity : 0.01;
      double magnitude = 1.0 + dyn;
      double tilt = awake ? 0.0 : std::numbers::pi / 2.0;
      double azimuth = 0.0;
      if (sd_acc > 0.0) {
        magnitude = 1.0 + std::max(dyn * (1.0 + 0.5 * r_acc.normal()), 0.0);
        tilt += 0.4 * r_acc.uniform();
        azimuth = kTwoPi * r_acc.uniform();
      }
      const double x = magnitude * std::sin(tilt) * std::cos(azimuth);
      const double y = magnitude * std::sin(tilt) * std::sin(azimuth);
      const double z = magnitude * std::cos(tilt);
      set(ax, i, x + (sd_acc > 0.0 ? sd_acc * r_acc.normal() : 0.0));
      set(ay, i, y + (sd_acc > 0.0 ? sd_acc * r_acc.normal() : 0.0));
      set(az, i, z + (sd_acc > 0.0 ? sd_acc * r_acc.normal() : 0.0));
    }

    // Heart rate: circadian cosine in phase with CBT plus activity coupling.
    {
      double v = kHeartRateBase + 4.0 * std::cos(theta) + (awake ? 10.0 * activity : 0.0);
      if (mask > 0.0) v += mask * hr_ar.step(r_hr, 4.0);
      if (sd_hr > 0.0) v += sd_hr * r_hr.normal();
      set(hr, i, v);
    }

    // Distal skin temperature: anti-phased to CBT, dominated by masking noise.
    {
      double masking = 0.0;
      if (mask > 0.0) masking = mask * skin_ar.step(r_skin, kSkinMaskingSd) + skin_offset[day];
      if (static_cast<std::int64_t>(i) % kSkinStepMinutes == 0) {
        double v = kSkinMesor - kSkinAmplitude * std::cos(theta) + masking;
        if (sd_skin > 0.0) v += sd_skin * r_skin.normal();
        set(skin, i, v);
      }
    }

    // Core body temperature, final three days only, 5-minute sampling.
    if (static_cast<std::int64_t>(i) >= cbt_first && static_cast<std::int64_t>(i) % kCbtStepMinutes == 0) {
      double v = params.cbt_mesor + params.cbt_amplitude * std::cos(theta);
      v += mask * (awake ? 0.1 * (activity - 1.0) : -0.1);
      if (sd_cbt > 0.0) v += sd_cbt * r_cbt.normal();
      set(cbt, i, v);
    }
  }

  std::vector<SampleSeries> channels;
  channels.push_back(std::move(light));
  channels.push_back(std::move(motion));
  channels.push_back(std::move(ax));
  channels.push_back(std::move(ay));
  channels.push_back(std::move(az));
  channels.push_back(std::move(hr));
  channels.push_back(std::move(skin));
  SynthParticipant out{assemble_recording(truth.participant_id, std::move(channels), std::move(cbt), kCbtStepMinutes),
                       truth};
  return out;
}

std::vector<SynthParticipant> generate_cohort(const SynthParams& params) {
  params.validate();
  std::vector<SynthParticipant> cohort;
  cohort.reserve(params.n_participants);
  for (std::size_t i = 0; i < params.n_participants; ++i) cohort.push_back(generate_participant(params, i));
  return cohort;
}

}  // namespace circphase
