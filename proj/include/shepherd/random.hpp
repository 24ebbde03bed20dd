#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "shepherd/vec2.hpp"

namespace shepherd {

// mt19937_64 output is fixed by the standard; the distributions below are
// hand-rolled because std:: distributions differ between library vendors.
using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

inline Vec2 random_unit(Rng& rng) {
  const double a = 2.0 * std::numbers::pi * uniform01(rng);
  return {std::cos(a), std::sin(a)};
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Per-cell trial seed. Each field is folded through splitmix64 in order:
///   h = splitmix64(base); h = splitmix64(h ^ scenario); h = splitmix64(h ^ tp);
///   h = splitmix64(h ^ trial)
/// so any single cell can be reproduced from (base, scenario, tp, trial) alone.
constexpr std::uint64_t trial_seed(std::uint64_t base, std::uint64_t scenario, std::uint64_t tp,
                                   std::uint64_t trial) {
  std::uint64_t h = splitmix64(base);
  h = splitmix64(h ^ scenario);
  h = splitmix64(h ^ tp);
  return splitmix64(h ^ trial);
}

}  // namespace shepherd
