// SPDX-License-Identifier: Apache-2.0
#pragma once

// Deterministic random numbers that reproduce bit-for-bit on every platform.
//
// The engine is xoshiro256** (Blackman & Vigna), seeded through SplitMix64.
// None of the <random> distributions are used: their algorithms are
// implementation-defined, so bounded integers and reals are derived here.
//
// A run owns one master seed. Independent substreams (training data, test set,
// label noise, weight init) are derived by hashing (master seed, purpose).

#include <array>
#include <bit>
#include <cstdint>
#include <limits>

namespace paritylab {

inline constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

enum class Stream : std::uint64_t {
  train_data = 1,
  test_data = 2,
  label_noise = 3,
  weight_init = 4,
  gradcheck = 5,
};

class Rng {
public:
  using result_type = std::uint64_t;

  explicit constexpr Rng(std::uint64_t seed = 0) noexcept { reseed(seed); }

  /// Substream of a master seed for one purpose; `index` separates siblings.
  static constexpr Rng substream(std::uint64_t master_seed, Stream purpose,
                                 std::uint64_t index = 0) noexcept {
    std::uint64_t s = master_seed;
    std::uint64_t mixed = splitmix64(s);
    s = mixed ^ (static_cast<std::uint64_t>(purpose) * 0xD1B54A32D192ED03ULL);
    mixed = splitmix64(s);
    s = mixed ^ (index * 0xA0761D6478BD642FULL);
    return Rng(splitmix64(s));
  }

  constexpr void reseed(std::uint64_t seed) noexcept {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64(sm);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    const std::uint64_t result = std::rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = std::rotl(state_[3], 45);
    return result;
  }

  /// Uniform integer in [0, bound). Lemire's multiply-shift with rejection.
  constexpr std::uint64_t below(std::uint64_t bound) noexcept {
    if (bound <= 1) return 0;
    unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        m = static_cast<unsigned __int128>((*this)()) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Uniform integer in [lo, hi].
  constexpr std::int64_t between(std::int64_t lo, std::int64_t hi) noexcept {
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  /// Uniform double in [0, 1) with 53 random bits.
  constexpr double unit() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  constexpr double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * unit(); }

  constexpr bool coin() noexcept { return ((*this)() >> 63) != 0; }

  constexpr bool bernoulli(double p) noexcept { return unit() < p; }

  friend constexpr bool operator==(const Rng&, const Rng&) = default;

private:
  std::array<std::uint64_t, 4> state_{};
};

} // namespace paritylab
