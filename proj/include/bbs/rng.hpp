#pragma once

// Reproducible random streams.
//
// Generator: xoshiro256** (Blackman & Vigna), state seeded through
// SplitMix64. The stream for (master seed, replicate, cell) is a pure
// function of those three integers, so replicates can run on any thread
// in any order.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace bbs {

/// SplitMix64 finalizer (Stafford variant 13). Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}
  constexpr std::uint64_t next() noexcept {
    state_ += kGoldenGamma;
    return mix64(state_);
  }

 private:
  std::uint64_t state_;
};

/// xoshiro256** 1.0. Satisfies UniformRandomBitGenerator.
class Xoshiro256StarStar {
 public:
  using result_type = std::uint64_t;

  explicit constexpr Xoshiro256StarStar(std::uint64_t seed) noexcept {
    SplitMix64 sm(seed);
    for (auto& w : s_) w = sm.next();
  }

  /// Starts from an explicit state (must not be all zero).
  static constexpr Xoshiro256StarStar from_state(const std::array<std::uint64_t, 4>& state) noexcept {
    Xoshiro256StarStar g(0);
    g.s_ = state;
    return g;
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  friend constexpr bool operator==(const Xoshiro256StarStar&, const Xoshiro256StarStar&) = default;

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }
  std::array<std::uint64_t, 4> s_{};
};

/// A single-consumer random stream with the variate generators the
/// simulators need. Variates are produced by fixed formulas, not by
/// <random> distributions, so values do not depend on the standard library.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) noexcept : gen_(seed) {}

  std::uint64_t next_u64() noexcept { return gen_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Uniform on {0, ..., n-1}; Lemire's nearly-divisionless rejection.
  std::uint64_t below(std::uint64_t n) noexcept {
    unsigned __int128 m = static_cast<unsigned __int128>(gen_()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(gen_()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Standard normal by the Box-Muller transform; the second variate of
  /// each pair is cached.
  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // 1 - u lies in (0, 1], so the logarithm is finite.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  Xoshiro256StarStar gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Master seed plus the stream derivation rule.
struct SeedSpec {
  std::uint64_t master_seed = 0;

  /// Seed word for (replicate, cell): nested SplitMix64 finalizers over the
  /// three integers, each offset by a multiple of the golden gamma.
  std::uint64_t derive(std::uint64_t replicate, std::uint64_t cell = 0) const noexcept {
    std::uint64_t h = mix64(master_seed + kGoldenGamma);
    h = mix64(h ^ (replicate + 2 * kGoldenGamma));
    h = mix64(h ^ (cell + 3 * kGoldenGamma));
    return h;
  }

  RandomStream stream(std::uint64_t replicate, std::uint64_t cell = 0) const noexcept {
    return RandomStream(derive(replicate, cell));
  }
};

}  // namespace bbs
