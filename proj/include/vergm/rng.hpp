#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace vergm {

/// 64-bit FNV-1a. Used for config digests and for hashing seed-derivation tags.
inline std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Seed-splitting scheme: every random stream is keyed by the master seed,
/// a purpose tag, and an index. Two streams with different (tag, index)
/// pairs are independent for practical purposes; the same triple always
/// yields the same stream.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                                 std::uint64_t index = 0) {
  return splitmix64(splitmix64(master ^ fnv1a64(tag)) + index);
}

using Rng = std::mt19937_64;

// Distribution helpers are hand-rolled: the std::uniform_*_distribution
// classes are implementation-defined, and run artifacts must be reproducible
// from the seed alone.

inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, bound), bound >= 1. Rejection sampling on the
/// low bits keeps the draw exactly uniform.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
  if (bound <= 1) return 0;
  const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

template <typename T>
void shuffle_in_place(std::vector<T>& values, Rng& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(uniform_below(rng, i));
    std::swap(values[i - 1], values[j]);
  }
}

}  // namespace vergm
