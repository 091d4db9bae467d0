#pragma once

#include <cstdint>
#include <random>

namespace qtrap {

// Reproducibility contract
// ------------------------
// Every random draw in the library comes from std::mt19937_64 engines whose
// seeds are derived from (master_seed, realization_index) with splitmix64.
// realization_seed(master, r) equals the r-th output of a canonical
// splitmix64 stream seeded with master, computed in O(1) so realizations can
// be dispatched to workers in any order. Uniform doubles take the top 53 bits
// of one 64-bit draw, giving values in [0, 1).

inline constexpr std::uint64_t kSplitmix64Increment = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

// r is 1-based: realization r of an ensemble uses realization_seed(master, r).
constexpr std::uint64_t realization_seed(std::uint64_t master_seed, std::uint64_t r) noexcept {
    return splitmix64_mix(master_seed + kSplitmix64Increment * r);
}

using RandomEngine = std::mt19937_64;

inline double uniform01(RandomEngine& engine) {
    return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

}  // namespace qtrap
