#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace circphase {

/// SplitMix64 finalizer (Steele, Lea & Flood). Used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// FNV-1a 64-bit hash of a byte string.
std::uint64_t fnv1a64(std::string_view bytes);

/// Derives a child seed from a parent seed and a label: splitmix64(parent ^ splitmix64(fnv1a64(label))).
std::uint64_t derive_seed(std::uint64_t parent, std::string_view label);
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index);

/// Deterministic random stream: std::mt19937_64 engine with explicitly defined transforms, so streams do not
/// depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n);
  /// Standard normal via Box-Muller (both variates used).
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace circphase
