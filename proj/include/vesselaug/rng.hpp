#pragma once

// Hierarchical, path-derived random streams.
//
// A stream is fully determined by a 64-bit key. Keys are derived from
// (master seed, sample id, plan entry index, replicate index) by chained
// SplitMix64 finalization, so every augmented output owns an independent
// stream and no state is shared between workers.
//
// Generator: xoshiro256** seeded from the key through SplitMix64.
// Uniform doubles take the top 53 bits. Normals use the Box-Muller
// transform on (1 - u1, u2), returning the cosine branch first and the
// sine branch on the next call.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vesselaug {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// FNV-1a over the bytes of `text`.
inline constexpr std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::string sample_id;
  std::int64_t entry = 0;
  std::int64_t replicate = 0;

  std::uint64_t key() const {
    std::uint64_t h = splitmix64(master_seed);
    h = splitmix64(h ^ fnv1a64(sample_id));
    h = splitmix64(h ^ static_cast<std::uint64_t>(entry));
    h = splitmix64(h ^ static_cast<std::uint64_t>(replicate));
    return h;
  }
};

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t key) : key_(key) {
    std::uint64_t s = key;
    for (auto& word : state_) {
      s += 0x9e3779b97f4a7c15ULL;
      std::uint64_t z = s;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      word = z ^ (z >> 31);
    }
  }

  std::uint64_t key() const { return key_; }

  /// Independent child stream; does not advance this one.
  RandomStream split(std::uint64_t index) const {
    return RandomStream(splitmix64(splitmix64(key_) ^ splitmix64(index + 0x5851f42d4c957f2dULL)));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform in [0,1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo,hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in the closed range [lo,hi], unbiased by rejection.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
    const std::uint64_t span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo);
    if (span == std::numeric_limits<std::uint64_t>::max()) {
      return static_cast<std::int64_t>(next_u64());
    }
    const std::uint64_t range = span + 1;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % range;
    std::uint64_t draw = next_u64();
    while (draw >= limit) draw = next_u64();
    return static_cast<std::int64_t>(static_cast<std::uint64_t>(lo) + draw % range);
  }

  /// Standard normal via Box-Muller.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0,1]
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(theta);
    has_spare_ = true;
    return radius * std::cos(theta);
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t key_;
  std::uint64_t state_[4] = {};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline RandomStream derive_stream(const SeedSpec& spec) { return RandomStream(spec.key()); }

}  // namespace vesselaug
