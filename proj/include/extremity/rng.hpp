#pragma once

#include <cstdint>

namespace extremity {

// SplitMix64 step; used for seeding and for deriving child seeds.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed for trial `i` under a master seed: master xor splitmix(i).
inline uint64_t trial_seed(uint64_t master, uint64_t trial_index) {
  return master ^ splitmix64(trial_index);
}

// Independent sub-stream of a seed (initialization / games / evaluation).
inline uint64_t derive_stream(uint64_t seed, uint64_t tag) {
  return splitmix64(seed ^ splitmix64(tag ^ 0xd1b54a32d192ed03ULL));
}

// xoshiro256++ with hand-rolled distributions so that sampled sequences do
// not depend on the standard library implementation.
class Rng {
 public:
  explicit Rng(uint64_t seed) {
    uint64_t x = seed;
    for (auto& w : s_) {
      x = splitmix64(x);
      w = x;
    }
  }

  uint64_t next() {
    const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n), unbiased (Lemire with rejection).
  uint64_t uniform_int(uint64_t n) {
    __uint128_t m = static_cast<__uint128_t>(next()) * n;
    auto lo = static_cast<uint64_t>(m);
    if (lo < n) {
      const uint64_t threshold = -n % n;
      while (lo < threshold) {
        m = static_cast<__uint128_t>(next()) * n;
        lo = static_cast<uint64_t>(m);
      }
    }
    return static_cast<uint64_t>(m >> 64);
  }

  int uniform_index(int n) { return static_cast<int>(uniform_int(static_cast<uint64_t>(n))); }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  uint64_t s_[4];
};

}  // namespace extremity
