#pragma once

#include <cmath>
#include <cstdint>

#include "nept/constants.hpp"

namespace nept {

// Counter-based random stream: every sample is a pure function of
// (seed, index), so draws are reproducible regardless of evaluation
// order or thread schedule.

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Uniform double in the open interval (0, 1).
inline double to_open01(std::uint64_t z) {
    return (static_cast<double>(z >> 11) + 0.5) * (1.0 / 9007199254740992.0);
}

}  // namespace detail

/// Mix a seed with a counter into an independent 64-bit word.
inline std::uint64_t hash_counter(std::uint64_t seed, std::uint64_t index) {
    return detail::splitmix64(detail::splitmix64(seed) ^ detail::splitmix64(index * 0xD1B54A32D192ED03ULL + 1));
}

/// Uniform deviate in the open interval (0, 1) for (seed, index).
inline double uniform_sample(std::uint64_t seed, std::uint64_t index) {
    return detail::to_open01(hash_counter(seed, index));
}

/// Standard normal deviate for (seed, index), Box-Muller on two hashed uniforms.
inline double gaussian_sample(std::uint64_t seed, std::uint64_t index) {
    const double u1 = detail::to_open01(hash_counter(seed, 2 * index));
    const double u2 = detail::to_open01(hash_counter(seed, 2 * index + 1));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

/// Derive a child seed for grid cell / trace `index` from a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return hash_counter(master ^ 0xA0761D6478BD642FULL, index);
}

}  // namespace nept
