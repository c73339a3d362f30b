#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace otafl {

// All randomness goes through std::mt19937_64 seeded from a 64-bit value.
// Independent streams (per device, per round, per draw) come from hashing the
// parent seed with a stream index, so adding a stream never shifts another.
using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(seed);
  for (std::uint64_t p : path) h = splitmix64(h ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> path = {}) {
  return Rng(mix_seed(seed, path));
}

}  // namespace otafl
