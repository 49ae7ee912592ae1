#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace lgcpd {

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from a root seed and a path of counters
/// (replicate index, stream id, ...). Pure function of its arguments.
inline std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = mix64(root);
  for (auto p : path) h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng make_rng(std::uint64_t root, std::initializer_list<std::uint64_t> path = {}) {
  return Rng(derive_seed(root, path));
}

/// Uniform double in [0, 1) with 53 random bits; identical on every platform
/// for a given engine state (unlike std::uniform_real_distribution).
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace lgcpd
