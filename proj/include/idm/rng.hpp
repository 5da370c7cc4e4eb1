#pragma once

// Portable seeded randomness. Every draw sequence is addressed by a seed and
// a tuple of stream tags, e.g. (seed, kResponses, student, item), so a
// sequence never depends on how many draws other streams consumed. All
// arithmetic is integer or IEEE double, so output is identical across
// platforms and standard libraries.

#include <cstdint>
#include <initializer_list>

#include "idm/normal.hpp"

namespace idm {

namespace stream {
inline constexpr std::uint64_t kPopulation = 1;
inline constexpr std::uint64_t kResponses = 2;
inline constexpr std::uint64_t kItems = 3;
inline constexpr std::uint64_t kSplits = 4;
inline constexpr std::uint64_t kNoise = 5;
inline constexpr std::uint64_t kRestarts = 6;
inline constexpr std::uint64_t kFixture = 7;
}  // namespace stream

/// SplitMix64 generator positioned on a (seed, tags...) stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::initializer_list<std::uint64_t> tags = {}) : state_(mix(seed)) {
    for (const std::uint64_t t : tags) state_ = mix(state_ ^ mix(t + 0x9E3779B97F4A7C15ULL));
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  /// Uniform on the open interval (0, 1) with 53-bit resolution.
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal by inverse-CDF transform.
  double normal() { return normal::quantile(uniform()); }

  double normal(double mu, double sigma) { return mu + sigma * normal(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

}  // namespace idm
