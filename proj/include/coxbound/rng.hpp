#pragma once

#include <cstdint>

namespace coxbound {

// Stream-addressed seeding: identical (root, stream) pairs reproduce the same
// sequence bit for bit on any platform.
struct SeedSpec {
  std::uint64_t root = 0;
  std::uint64_t stream = 0;
};

// splitmix64 step (Steele, Lea, Flood 2014); used for seeding only
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// xoshiro256++ (Blackman, Vigna 2019) with per-stream state derived by
// splitmix64 from root and stream id.  All variate generation is implemented
// on top of next() with fixed arithmetic, no library distributions.
class Rng {
 public:
  explicit Rng(SeedSpec seed) {
    std::uint64_t tag = seed.stream;
    std::uint64_t mix = seed.root ^ splitmix64(tag);
    for (auto& w : s_) w = splitmix64(mix);
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // 53-bit uniform on [0, 1)
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // uniform on the open interval (0, 1)
  double uniform_open() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

  double exponential() { return -std::log(uniform_open()); }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

}  // namespace coxbound
