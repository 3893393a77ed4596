#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "circphase/data_model.hpp"

namespace circphase {

/// Parameters of the synthetic free-living cohort. All clock hours are UTC.
struct SynthParams {
  std::size_t n_participants = 14;
  int days = 20;
  /// Planted acrophases are drawn uniformly from [lo, hi] radians. The defaults put the CBT peak between
  /// 15:00 and 19:00.
  double acrophase_lo = kDefaultAcrophaseLo;
  double acrophase_hi = kDefaultAcrophaseHi;
  double cbt_mesor = 37.0;
  double cbt_amplitude = 0.4;
  /// Light and motion use multiplicative log-normal noise (sd on the log scale); other channels are additive.
  std::map<ChannelId, double> noise_sd = default_noise();
  double masking_strength = 1.0;
  /// Sleep schedule for a participant at the middle of the acrophase range; shifted with the planted phase.
  double sleep_onset_hour = 23.0;
  double wake_hour = 7.0;
  double schedule_jitter_minutes = 30.0;
  std::int64_t start_minute = kDefaultStartMinute;  // 2021-10-04T00:00:00Z
  std::uint64_t seed = 1;

  static constexpr double kDefaultAcrophaseLo = 1.3089969389957472;  // 2pi * 5/24
  static constexpr double kDefaultAcrophaseHi = 2.356194490192345;  // 2pi * 9/24
  static constexpr std::int64_t kDefaultStartMinute = 27221760;

  static std::map<ChannelId, double> default_noise();
  /// Zero noise, zero masking, zero schedule jitter.
  static SynthParams noiseless();

  void validate() const;
  double noise(ChannelId id) const;
};

struct SynthTruth {
  std::string participant_id;
  double acrophase = 0.0;  // [0, 2pi)

  /// (omega t + acrophase) mod 2pi.
  double phase_at(std::int64_t minute) const;
};

struct SynthParticipant {
  ParticipantRecording recording;
  SynthTruth truth;
};

std::string synth_participant_id(std::size_t index);

/// Deterministic in (params.seed, index). CBT is valid only over the final three days at 5-minute spacing.
SynthParticipant generate_participant(const SynthParams& params, std::size_t index);

std::vector<SynthParticipant> generate_cohort(const SynthParams& params);

}  // namespace circphase
