// Seeded RNG streams with draws that are reproducible across platforms.
//
// std::mt19937_64's raw output sequence is pinned by the standard, while the
// std::uniform_* distributions are not; all draws here are built directly on
// raw engine output so a seed always yields the same bytes everywhere.

#pragma once

#include <cstdint>
#include <random>

namespace patchseg {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; also used to decorrelate derived stream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) { return splitmix64(a ^ splitmix64(b)); }

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return splitmix64(mix_seed(a, b) ^ splitmix64(c ^ 0xa5a5a5a5a5a5a5a5ULL));
}

// Uniform draw from [0, n) by rejection; n must be positive.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v = rng();
  while (v >= limit) v = rng();
  return v % n;
}

// Uniform draw from the inclusive range [lo, hi].
inline int uniform_int(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(hi - lo) + 1));
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace patchseg
