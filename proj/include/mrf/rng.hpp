#pragma once

#include <cstdint>
#include <random>

namespace mrf {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent per-purpose seeds from one
// master seed so that changing the consumption pattern of one component does
// not shift the streams of another.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return mix_seed(master ^ mix_seed(stream + 1));
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double normal01(Rng& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

inline int uniform_int(Rng& rng, int lo, int hi_inclusive) {
  return std::uniform_int_distribution<int>(lo, hi_inclusive)(rng);
}

}  // namespace mrf
