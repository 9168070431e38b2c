#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace mildlevy {

/// SplitMix64 finalizer, used to hash seeds and counters into keys.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives an independent substream key from a master seed and a path of
/// counters (path index, stream tag, interval index, ...).
constexpr std::uint64_t derive_key(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t key = mix64(seed ^ 0x6a09e667f3bcc909ULL);
  for (const auto c : path) key = mix64(key ^ mix64(c + 0x3c6ef372fe94f82bULL));
  return key;
}

/// Stream tags. Wiener and jump streams never share a substream.
enum class StreamTag : std::uint64_t {
  wiener = 1,
  jumps = 2,
  initial_data = 3,
  audit = 4,
  markov_direct = 5,
  markov_outer = 6,
  markov_inner = 7,
  misc = 8,
};

/// xoshiro256** seeded through SplitMix64. Small state, so constructing one
/// per (path, stream, interval) is cheap.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(std::uint64_t key) noexcept {
    std::uint64_t z = key;
    for (auto& s : state_) {
      z += 0x9e3779b97f4a7c15ULL;
      s = mix64(z);
    }
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
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

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

  std::array<std::uint64_t, 4> state_{};
};

}  // namespace mildlevy
