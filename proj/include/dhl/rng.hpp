#pragma once

#include <cstdint>

namespace dhl {

// Counter-based splitmix64 stream.  Every sampler derives its per-item
// generator as SplitMix64(seed ^ index), so samples are reproducible and
// independent of evaluation order (and hence of the thread count).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n) without modulo bias (fixed-point multiply).
  int next_below(int n) {
    unsigned __int128 wide = static_cast<unsigned __int128>(next_u64()) *
                             static_cast<unsigned __int128>(n);
    return static_cast<int>(wide >> 64);
  }

 private:
  std::uint64_t state_;
};

inline std::uint64_t per_sample_seed(std::uint64_t seed, std::uint64_t index) {
  return seed ^ index;
}

}  // namespace dhl
