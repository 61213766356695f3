#pragma once

#include <cstdint>
#include <random>

namespace logitnets {

using Rng = std::mt19937_64;

// Uniform on [0,1) from the top 53 bits; identical on every platform.
inline double uniform01(Rng& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

// Stream key for (seed, a, b), so replications do not share draws.
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0) {
    std::uint64_t h = seed ^ 0x9E3779B97F4A7C15ULL;
    for (std::uint64_t v : {a, b}) {
        h ^= v + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
        h ^= h >> 31;
        h *= 0xBF58476D1CE4E5B9ULL;
        h ^= h >> 29;
    }
    return h;
}

}  // namespace logitnets
