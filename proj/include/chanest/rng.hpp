#pragma once

// Portable random streams.
//
// Generator: xoshiro256** (Blackman & Vigna), state seeded by four
// successive SplitMix64 outputs. Every consumer gets its own stream keyed by
// (seed, purpose tag, indices...):
//
//   key = splitmix64(seed)
//   for each tag t:  key = splitmix64(key ^ splitmix64(t + 0x9E3779B97F4A7C15))
//
// Uniform doubles take the top 53 bits, normals use the Box-Muller transform
// (both outputs of a pair are consumed in order), bounded integers use
// rejection sampling. None of this depends on <random> distributions, whose
// output differs between standard library implementations.

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <utility>
#include <numbers>
#include <numeric>
#include <vector>

namespace chanest {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Purpose tags for stream derivation. Values are part of the on-disk
/// reproducibility contract; never renumber.
enum class Stream : std::uint64_t {
  channel = 1,
  noise = 2,
  bits = 3,
  pilot_bits = 4,
  channel_pick = 5,
  init = 6,
  shuffle = 7,
  window_start = 8,
  train_noise = 9,
  val_noise = 10,
  val_start = 11,
  test_noise = 12,
  trace = 13,
  split = 14,
};

constexpr std::uint64_t derive_seed(std::uint64_t seed,
                                    std::initializer_list<std::uint64_t> tags) noexcept {
  std::uint64_t key = splitmix64(seed);
  for (std::uint64_t t : tags) key = splitmix64(key ^ splitmix64(t + 0x9E3779B97F4A7C15ULL));
  return key;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept {
    std::uint64_t x = seed;
    for (auto& s : state_) {
      x = splitmix64(x);
      s = x;
    }
  }

  /// Independent stream for one (seed, purpose, index...) combination.
  template <typename... Index>
  static Rng stream(std::uint64_t seed, Stream purpose, Index... index) noexcept {
    return Rng(derive_seed(seed, {static_cast<std::uint64_t>(purpose),
                                  static_cast<std::uint64_t>(index)...}));
  }

  std::uint64_t next() noexcept {
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

  /// Uniform on [0, 1).
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform integer on [0, bound).
  std::uint64_t below(std::uint64_t bound) noexcept {
    if (bound <= 1) return 0;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return x % bound;
  }

  /// Standard normal.
  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  bool bit() noexcept { return (next() >> 63) != 0; }

  template <typename T>
  void shuffle(std::vector<T>& v) noexcept {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace chanest
