#pragma once

#include <cstdint>
#include <random>

namespace scenefit {

/// splitmix64 finalizer. Seeds derived through it are decorrelated even for
/// adjacent inputs, which is what we rely on when deriving one stream per
/// (seed, frame, sample) tuple.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed) { return splitmix64(seed); }

/// Folds any number of salts into a base seed, one splitmix round per salt.
template <class... Rest>
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt, Rest... rest) {
  return derive_seed(splitmix64(seed + 0x632be59bd9b4e019ULL) ^ splitmix64(salt), rest...);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

}  // namespace scenefit
