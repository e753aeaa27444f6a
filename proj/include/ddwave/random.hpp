#pragma once

#include <cstdint>
#include <random>

#include "ddwave/core.hpp"

namespace ddwave {

using Rng = std::mt19937_64;

// splitmix64 finaliser.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Independent stream for work item `index` under `seed`. Results depend
/// only on (seed, index), never on which thread runs the item.
inline Rng substream(std::uint64_t seed, std::uint64_t index, std::uint64_t salt = 0) {
  return Rng(mix64(mix64(seed) ^ mix64(index + 0x5bd1e995ULL * (salt + 1))));
}

/// Circularly-symmetric complex Gaussian with E|z|² = variance.
inline Complex complex_gaussian(Rng& rng, double variance) {
  std::normal_distribution<double> normal(0.0, std::sqrt(variance / 2.0));
  const double re = normal(rng);
  const double im = normal(rng);
  return {re, im};
}

}  // namespace ddwave
