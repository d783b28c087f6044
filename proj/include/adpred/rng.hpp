#pragma once

#include <cstdint>
#include <random>

namespace adpred {

// 64-bit stream splitter: mixes a base seed with a stream index so that
// substream k is stable no matter how many substreams exist.
inline std::uint64_t mix64(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d649bb133111ebull;
  return z ^ (z >> 31);
}

// Uniform draw in [0, n) by rejection; bit-identical on every platform,
// unlike std::uniform_int_distribution.
inline std::uint64_t bounded(std::mt19937_64& g, std::uint64_t n) {
  std::uint64_t reject_below = (0 - n) % n;
  while (true) {
    std::uint64_t r = g();
    if (r >= reject_below) return r % n;
  }
}

// Uniform double in [0, 1) with 53 random bits.
inline double unit_double(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

}  // namespace adpred
