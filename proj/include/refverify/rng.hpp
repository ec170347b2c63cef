#pragma once

#include <cstdint>
#include <initializer_list>

namespace refverify {

// splitmix64 step, used for seed expansion and for deriving substreams.
inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// xoshiro256** written out in full so seeded runs reproduce bit-for-bit on
// any platform and in any language that ports these few lines.
class Xoshiro256 {
 public:
  explicit Xoshiro256(uint64_t seed) {
    uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64(sm);
  }

  uint64_t next() {
    const uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform01() < p; }

  // Unbiased integer in [0, n) via rejection sampling.
  uint64_t uniform_below(uint64_t n) {
    const uint64_t bound = n == 0 ? 0 : UINT64_MAX - UINT64_MAX % n;
    uint64_t draw;
    do {
      draw = next();
    } while (draw >= bound);
    return draw % n;
  }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  uint64_t state_[4];
};

// Folds several values into one seed, for independent derived streams.
inline uint64_t mix_seed(std::initializer_list<uint64_t> parts) {
  uint64_t acc = 0x6A09E667F3BCC908ULL;
  for (uint64_t part : parts) {
    acc ^= part;
    acc = splitmix64(acc);
  }
  return acc;
}

}  // namespace refverify
