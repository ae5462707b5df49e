#pragma once

#include <cstdint>
#include <random>

namespace taskgrid {

/// Uniform integer in [0, bound) from a 64-bit engine. Unlike
/// std::uniform_int_distribution the draw sequence is the same on every
/// standard library.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= threshold) return r % bound;
  }
}

}  // namespace taskgrid
