/*
 * rng.hpp - seed derivation and the per-trajectory generator.
 *
 * Every trajectory i of an ensemble with master seed s runs on
 *
 *   seed_i = derive_seed(s, i) = splitmix64_mix(s + (i + 1) * 0x9E3779B97F4A7C15)
 *
 * i.e. the i-th output of a SplitMix64 stream started at s, so derive_seed(0, 0)
 * is the familiar first SplitMix64 output 0xE220A8397B1DCDAF. The trajectory
 * generator is xoshiro256** whose four state words are the first four outputs
 * of SplitMix64 started at seed_i. Both algorithms are fixed; golden tests pin
 * their outputs.
 */
#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <limits>

namespace cwexit {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

/// SplitMix64 output finalizer (Stafford variant 13).
constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  constexpr std::uint64_t operator()() noexcept {
    state_ += kGoldenGamma;
    return splitmix64_mix(state_);
  }

 private:
  std::uint64_t state_;
};

constexpr std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t trajectory_index) noexcept {
  return splitmix64_mix(master_seed + (trajectory_index + 1) * kGoldenGamma);
}

/// xoshiro256** 1.0 (Blackman & Vigna). Satisfies UniformRandomBitGenerator.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit constexpr Xoshiro256(std::uint64_t seed) noexcept {
    SplitMix64 sm(seed);
    for (auto& word : s_) word = sm();
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    const std::uint64_t result = std::rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = std::rotl(s_[3], 45);
    return result;
  }

  /// Uniform on (0, 1]: the top 53 bits plus one, scaled by 2^-53. Never 0, so
  /// -log(u) is always finite.
  constexpr double uniform_open_closed() noexcept {
    return static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53;
  }

  /// Uniform on [0, 1).
  constexpr double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  std::array<std::uint64_t, 4> s_{};
};

}  // namespace cwexit
