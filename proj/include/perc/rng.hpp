#pragma once

#include <cstdint>
#include <random>

namespace perc {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Stream derivation: stream(seed, index) seeds an mt19937_64 from
// splitmix64(splitmix64(seed) ^ splitmix64(index + 1)).  Streams for
// distinct indices are independent for practical purposes and the
// derivation does not depend on evaluation order, so parallel runs are
// reproducible for any worker count.
inline Rng make_stream(std::uint64_t seed, std::uint64_t index) {
    return Rng(splitmix64(splitmix64(seed) ^ splitmix64(index + 1)));
}

// 53-bit uniform in [0,1).  Hand-rolled so the draw sequence is pinned
// by the engine alone, not by a library-specific distribution.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform in (0,1); safe to feed into logs and inverse CDFs.
inline double uniform_open(Rng& rng) {
    double u;
    do {
        u = uniform01(rng);
    } while (u == 0.0);
    return u;
}

inline bool fair_bit(Rng& rng) { return (rng() >> 63) != 0; }

// Uniform integer in [0, n), rejection-free bias via modulo rejection.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
        v = rng();
    } while (v >= limit);
    return v % n;
}

} // namespace perc
