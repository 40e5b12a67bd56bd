#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace koopman::rng {

// Counter-based generator: random access into the SplitMix64 output stream.
// Every draw is a pure function of (seed, counter), so batches can be filled
// in any order (or in parallel) and still be bit-reproducible.
inline std::uint64_t splitmix64(std::uint64_t state) {
  std::uint64_t z = state + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t draw(std::uint64_t seed, std::uint64_t counter) {
  return splitmix64(splitmix64(seed) + counter * 0x9e3779b97f4a7c15ULL);
}

// Uniform on [0, 1) with 53 random bits.
inline double uniform01(std::uint64_t seed, std::uint64_t counter) {
  return static_cast<double>(draw(seed, counter) >> 11) * 0x1.0p-53;
}

inline double uniform(std::uint64_t seed, std::uint64_t counter, double lo, double hi) {
  return lo + (hi - lo) * uniform01(seed, counter);
}

// Standard normal via Box-Muller; consumes counters 2c and 2c+1.
inline double gaussian(std::uint64_t seed, std::uint64_t counter) {
  double u1 = uniform01(seed, 2 * counter);
  double u2 = uniform01(seed, 2 * counter + 1);
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace koopman::rng
