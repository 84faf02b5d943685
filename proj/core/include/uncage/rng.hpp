#pragma once

#include <cstdint>
#include <string_view>

#include "uncage/hash.hpp"

namespace uncage {

/// SplitMix64 step. Used for seeding and for deriving independent streams;
/// the reference constants are Steele et al.'s.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// xorshift64* generator (Marsaglia xorshift with Vigna's multiplier).
///
/// This is the portable RNG every randomized stage uses. It is integer-only,
/// so sequences are identical on any platform or language that reproduces
/// the recipe below:
///
///   state ^= state >> 12; state ^= state << 25; state ^= state >> 27;
///   output = state * 0x2545F4914F6CDD1D
///
/// Seeding runs the raw seed through one SplitMix64 step (and retries on the
/// forbidden all-zero state), so any 64-bit seed is acceptable.
class Xorshift64Star {
public:
  explicit Xorshift64Star(std::uint64_t seed) {
    std::uint64_t s = seed;
    state_ = splitmix64(s);
    while (state_ == 0) state_ = splitmix64(s);
  }

  std::uint64_t next() {
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    return state_ * 0x2545F4914F6CDD1DULL;
  }

  /// Uniform in [0, bound). Plain modulo: the tiny bias is irrelevant here
  /// and the mapping stays trivially reproducible.
  std::uint64_t next_below(std::uint64_t bound) { return next() % bound; }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [lo, hi].
  double uniform(double lo, double hi) {
    return lo + next_double() * (hi - lo);
  }

private:
  std::uint64_t state_;
};

/// Derives the seed of an independent stream from (root seed, tag, index).
/// Dataset generation gives every sample its own stream this way so samples
/// are reproducible in isolation and generation order never matters.
inline std::uint64_t derive_stream_seed(std::uint64_t root_seed,
                                        std::uint64_t tag,
                                        std::uint64_t index) {
  std::uint64_t s = root_seed;
  std::uint64_t a = splitmix64(s);
  s = a ^ (tag * 0xD1342543DE82EF95ULL);
  std::uint64_t b = splitmix64(s);
  s = b ^ index;
  return splitmix64(s);
}

/// Same derivation with a human-readable stream name.
inline std::uint64_t derive_stream_seed(std::uint64_t root_seed,
                                        std::string_view tag,
                                        std::uint64_t index) {
  return derive_stream_seed(root_seed, fnv1a64(tag), index);
}

} // namespace uncage
