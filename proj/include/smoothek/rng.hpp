#pragma once

#include <cstdint>
#include <random>

namespace smoothek {

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Stream `index` of the generator family rooted at `seed`: a 64-bit Mersenne
/// Twister (std::mt19937_64) seeded with SplitMix64(seed, index). Streams are
/// keyed by work-block index, not by thread, so results do not depend on the
/// thread count.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t index) {
  return std::mt19937_64(splitmix64(seed ^ splitmix64(index + 0x5851F42D4C957F2DULL)));
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

}  // namespace smoothek
