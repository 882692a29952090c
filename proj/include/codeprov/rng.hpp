#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace codeprov {

/// SplitMix64 finalizer; used to derive independent child seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// 64-bit FNV-1a.
constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t hash = 0xCBF29CE484222325ULL) noexcept {
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001B3ULL;
    }
    return hash;
}

/// Child stream seed for a named stream (e.g. a sample id) under a root seed.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view stream) noexcept {
    return splitmix64(root ^ splitmix64(fnv1a64(stream)));
}

/// Child stream seed for an indexed stream (e.g. a variant index).
constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) noexcept {
    return splitmix64(splitmix64(root) + 0x632BE59BD9B4E019ULL * (index + 1));
}

/// Seeded generator with portable draws.
///
/// The engine is mt19937_64 (fully specified by the standard); the
/// distributions are implemented here rather than taken from <random>, whose
/// outputs vary between standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, bound); bound must be > 0.
    std::uint64_t uniform_below(std::uint64_t bound);

    /// Poisson(lambda) by Knuth's product method; lambda is split into
    /// chunks so exp(-lambda) never underflows.
    std::uint64_t poisson(double lambda);

    /// `count` distinct indices from [0, population), sorted ascending.
    std::vector<std::size_t> choose_sorted(std::size_t population, std::size_t count);

private:
    std::mt19937_64 engine_;
};

}  // namespace codeprov
