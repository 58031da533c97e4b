#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace pwclust::detail {

// SplitMix64 finalizer; also used as the hash mixer for cube keys.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Derive the seed of an independent stream from a base seed. Generators use
/// one stream per (sample, segment) so a segment's content does not depend on
/// the lengths of the segments before it.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return mix64(base ^ mix64(stream + 0x6a09e667f3bcc909ull));
}

/// Uniform double in [0,1) from a 64-bit engine, 53 bits of resolution.
/// Avoids std::uniform_real_distribution so that the value sequence depends
/// only on the engine, not on the standard library implementation.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Inverse-CDF draw from a cumulative weight table (nondecreasing, ending at
/// ~1). Returns the smallest index with cum[i] > u.
inline std::size_t draw_index(const std::vector<double>& cum, double u) {
  std::size_t lo = 0, hi = cum.size() - 1;
  while (lo < hi) {
    std::size_t mid = (lo + hi) / 2;
    if (cum[mid] > u)
      hi = mid;
    else
      lo = mid + 1;
  }
  return lo;
}

}  // namespace pwclust::detail
