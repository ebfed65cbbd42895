#pragma once

#include <cstdint>
#include <random>

namespace motforge {

// splitmix64 step, used to whiten (seed, index) pairs into engine seeds so
// that substreams derived from nearby indices are uncorrelated.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream = 0) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(stream + 1)));
}

// Uniform in [0,1). Avoids std distributions, whose output is
// implementation-defined; reports must be byte-identical across platforms.
inline double uniform01(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& eng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(eng);
}

// Uniform integer in [0, n).
inline std::uint64_t uniform_index(std::mt19937_64& eng, std::uint64_t n) {
  // Rejection-free modulo bias is negligible for the small n used here,
  // but the bound-rejection loop keeps sampling exact.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v = eng();
  while (v >= limit) v = eng();
  return v % n;
}

}  // namespace motforge
