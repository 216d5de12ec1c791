#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace morphforge::rng {

// All randomness in the library goes through these helpers instead of
// <random> distributions, which are implementation-defined. The mt19937_64
// engine itself is standardized bit-exactly, so given a seed the sequences
// here are reproducible across compilers and platforms.

using Engine = std::mt19937_64;

// Uniform double in [0,1) with 53 random bits.
inline double uniform01(Engine& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

// Uniform double in [lo,hi).
inline double uniform(Engine& g, double lo, double hi) {
    return lo + (hi - lo) * uniform01(g);
}

// Uniform integer in [0,n), rejection sampled to avoid modulo bias.
inline std::uint64_t uniform_index(Engine& g, std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = g();
    } while (x >= limit);
    return x % n;
}

// Standard normal via Box-Muller (one value per call; the cosine branch).
inline double normal(Engine& g) {
    double u1 = uniform01(g);
    double u2 = uniform01(g);
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

// Fisher-Yates shuffle with explicit draws.
template <typename T>
void shuffle(std::vector<T>& v, Engine& g) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(uniform_index(g, i));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace morphforge::rng
