#include "codeprov/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace codeprov {

std::uint64_t Rng::uniform_below(std::uint64_t bound) {
    if (bound == 0) {
        throw std::invalid_argument("uniform_below: bound must be positive");
    }
    // Rejection sampling on the top of the range keeps the result unbiased.
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % bound;
}

std::uint64_t Rng::poisson(double lambda) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw std::invalid_argument("poisson: lambda must be finite and non-negative");
    }
    constexpr double kChunk = 500.0;
    std::uint64_t total = 0;
    while (lambda > 0.0) {
        const double part = std::min(lambda, kChunk);
        lambda -= part;
        const double threshold = std::exp(-part);
        double product = uniform01();
        while (product > threshold) {
            ++total;
            product *= uniform01();
        }
    }
    return total;
}

std::vector<std::size_t> Rng::choose_sorted(std::size_t population, std::size_t count) {
    count = std::min(count, population);
    std::vector<std::size_t> pool(population);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    // Partial Fisher-Yates: the first `count` slots end up a uniform sample.
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(uniform_below(population - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(count);
    std::sort(pool.begin(), pool.end());
    return pool;
}

}  // namespace codeprov
