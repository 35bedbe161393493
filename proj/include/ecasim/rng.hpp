#pragma once

#include <cstdint>
#include <random>

namespace ecasim {

// SplitMix64 finalizer. Used only to derive independent seeds, never as a
// simulation stream.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Seed of child stream `index` under `parent`. Children of one parent are
// independent of how many siblings exist, so adding replications or stations
// never perturbs the streams that were already there.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept
{
    return mix64(parent + 0x9E3779B97F4A7C15ULL * (index + 1));
}

/// Seeded random stream owned by one station.
class StreamRng {
public:
    explicit StreamRng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n)
    {
        return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
    }

    bool bernoulli(double p) { return std::bernoulli_distribution(p)(engine_); }

private:
    std::mt19937_64 engine_;
};

} // namespace ecasim
