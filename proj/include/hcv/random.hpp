#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace hcv {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of path `index` in a batch seeded by `seed`. Independent of the
/// order or thread in which paths are generated.
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return seed ^ mix64(index);
}

/// Seed of an independent sub-stream (e.g. the two sides of a finite
/// difference). Distinct streams give unrelated batches for the same seed.
[[nodiscard]] constexpr std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix64(seed ^ mix64(0x5eedULL + stream));
}

using Engine = std::mt19937_64;

/// Uniform draw on the open interval (0, 1) from the top 53 bits.
[[nodiscard]] inline double uniform_open(Engine& eng) {
  return (static_cast<double>(eng() >> 11) + 0.5) * 0x1.0p-53;
}

/// Exponential(rate) by inversion; rate must be positive.
[[nodiscard]] inline double exponential(Engine& eng, double rate) {
  return -std::log(uniform_open(eng)) / rate;
}

}  // namespace hcv
