#pragma once

#include <cstdint>
#include <random>

#include "types.hpp"

namespace rewarddance {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent per-stream seeds from a
// master seed so that parallel work stays reproducible.
constexpr std::uint64_t mix_seed(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream)
{
    return mix_seed(seed ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b)
{
    return derive_seed(derive_seed(seed, a), b);
}

inline Vector standard_normal(Rng& rng, std::size_t n)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector v(n);
    for (auto& x : v) {
        x = normal(rng);
    }
    return v;
}

inline double uniform(Rng& rng, double lo, double hi)
{
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

} // namespace rewarddance
