#pragma once

#include <cstdint>
#include <random>

namespace designbench {

// SplitMix64 output function (Steele, Lea & Flood 2014).
inline std::uint64_t splitmix64(std::uint64_t state) {
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Seed of substream `index` under `master_seed`: the index-th output of the
// SplitMix64 sequence started at the master seed. Counter-based, so the
// result depends only on (master_seed, index) and never on how many other
// streams have been derived or in which order.
inline std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index) {
  return splitmix64(master_seed + (index + 1) * 0x9e3779b97f4a7c15ULL);
}

inline std::mt19937_64 make_stream(std::uint64_t master_seed, std::uint64_t index) {
  return std::mt19937_64{derive_seed(master_seed, index)};
}

// Uniform draw in [0, 1) built from the top 53 bits of one generator output.
// Unlike std::uniform_real_distribution, consumes exactly one output and
// produces the same value on every standard library implementation.
inline double next_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace designbench
