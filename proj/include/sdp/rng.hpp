#pragma once

#include <cstdint>

namespace sdp {

/// Deterministic xoshiro256++ generator (Blackman & Vigna, 2019), seeded
/// through splitmix64.  Identical seeds give identical streams on every
/// build of this project; no libc / libstdc++ distribution code is used.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform in [0, 1).
  double uniform();

  /// Standard normal via Box-Muller (polar form rejected in favor of the
  /// trigonometric form for a branch-free, reproducible stream).
  double normal();

  /// Standard Cauchy via x = tan(pi * (u - 1/2)).
  double cauchy();

  /// Derive an independent stream for a (seed, stream-id) pair.
  static SeededRng derived(std::uint64_t seed, std::uint64_t stream_id);

 private:
  std::uint64_t s_[4];
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace sdp
