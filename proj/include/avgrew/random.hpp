#pragma once

#include <cstdint>
#include <random>

namespace avgrew {

/// The generator every stochastic operation takes explicitly. mt19937_64 is
/// fully specified by the standard, so sequences are identical across
/// platforms; the distribution helpers below avoid the std:: distributions,
/// whose output is implementation-defined.
using Rng = std::mt19937_64;

/// splitmix64 finalizer. Used to derive per-run seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of run `run_index` in an experiment seeded with `base_seed`.
constexpr std::uint64_t derive_run_seed(std::uint64_t base_seed, std::uint64_t run_index) noexcept {
    return base_seed ^ mix64(run_index);
}

/// Uniform double in [0, 1) built from the top 53 bits.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n). n must be positive.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    // Rejection sampling keeps the draw exactly uniform.
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return static_cast<std::size_t>(x % bound);
}

}  // namespace avgrew
