#pragma once

#include <cstdint>

namespace qflan {

// Deterministic random number generation. Every simulation index gets an
// independent xoshiro256** stream whose 256-bit state is derived from
// (master seed, simulation index) through SplitMix64, so results depend only
// on those two values and never on scheduling.
struct SplitMix64 {
  uint64_t state;

  explicit SplitMix64(uint64_t seed) : state(seed) {}

  uint64_t next() {
    uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
};

class Xoshiro256StarStar {
 public:
  Xoshiro256StarStar() : Xoshiro256StarStar(0, 0) {}

  Xoshiro256StarStar(uint64_t seed, uint64_t stream) {
    SplitMix64 mix(seed ^ (stream * 0xA24BAED4963EE407ull + 0x9FB21C651E98DF25ull));
    for (auto& w : s_) w = mix.next();
    // All-zero state is the one invalid seed for xoshiro.
    if (!(s_[0] | s_[1] | s_[2] | s_[3])) s_[3] = 0x1ull;
  }

  uint64_t next() {
    uint64_t result = rotl(s_[1] * 5, 7) * 9;
    uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  uint64_t s_[4];
};

inline Xoshiro256StarStar sim_stream(uint64_t master_seed, uint64_t sim_index) {
  return Xoshiro256StarStar(master_seed, sim_index);
}

}  // namespace qflan
