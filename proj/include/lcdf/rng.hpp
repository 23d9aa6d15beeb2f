#pragma once

#include <cstdint>
#include <cmath>

namespace lcdf {

// Seedable, splittable stream generator for reproducible parallel Monte Carlo.
//
// Stream derivation rule: the state of stream k under master seed m is the
// first four outputs of SplitMix64 seeded with m XOR (k + 1) * 0x9E3779B97F4A7C15,
// feeding a xoshiro256++ generator. Identical (m, k) always yields an identical
// sample sequence, independent of how streams are scheduled across threads.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_index) {
    std::uint64_t sm = master_seed ^ ((stream_index + 1) * 0x9E3779B97F4A7C15ULL);
    for (auto& word : state_) word = split_mix(sm);
    bool all_zero = (state_[0] | state_[1] | state_[2] | state_[3]) == 0;
    if (all_zero) state_[0] = 0x9E3779B97F4A7C15ULL;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on [0, 1), 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1], safe as a log argument.
  double next_double_nonzero() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; consumes exactly two uniforms per pair.
  double next_gaussian() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u = next_double_nonzero();
    double v = next_double();
    double r = std::sqrt(-2.0 * std::log(u));
    double a = 6.283185307179586476925286766559 * v;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

  bool next_bernoulli(double prob) { return next_double() < prob; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  static std::uint64_t split_mix(std::uint64_t& s) {
    std::uint64_t z = (s += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_[4];
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace lcdf
