#pragma once

#include <cstdint>
#include <random>

namespace recsys {

// Uniform double in (0,1). The mapping is explicit rather than going through
// std::uniform_real_distribution so the stream does not depend on the
// standard library implementation.
inline double uniform01(std::mt19937_64& gen) {
    return (static_cast<double>(gen() >> 11) + 0.5) * 0x1.0p-53;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic per-observation draw in [0,1), used for holdout splits.
// Unused coordinates are passed as 0, so the same (u,d) observation draws the
// same value whether or not a word coordinate is present.
inline double observation_draw(std::uint64_t seed, std::uint64_t u,
                               std::uint64_t d, std::uint64_t w) {
    std::uint64_t h = splitmix64(seed ^ splitmix64(u ^ splitmix64(d ^ splitmix64(w))));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace recsys
