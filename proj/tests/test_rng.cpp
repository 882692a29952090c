#include <doctest.h>

#include <cmath>
#include <set>

#include "codeprov/rng.hpp"

using namespace codeprov;

TEST_CASE("same seed, same stream") {
    Rng a(123);
    Rng b(123);
    for (int i = 0; i < 100; ++i) {
        CHECK(a.next_u64() == b.next_u64());
    }
    CHECK(Rng(1).next_u64() != Rng(2).next_u64());
}

TEST_CASE("derived seeds differ per stream") {
    std::set<std::uint64_t> seeds;
    for (std::uint64_t i = 0; i < 1000; ++i) {
        seeds.insert(derive_seed(42, i));
    }
    CHECK(seeds.size() == 1000);
    CHECK(derive_seed(42, "a") != derive_seed(42, "b"));
    CHECK(derive_seed(42, "a") == derive_seed(42, "a"));
}

TEST_CASE("fnv1a reference values") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("uniform draws") {
    Rng rng(5);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform01();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    CHECK(std::abs(sum / n - 0.5) < 0.005);
    std::vector<int> hits(7, 0);
    for (int i = 0; i < 70000; ++i) {
        ++hits[rng.uniform_below(7)];
    }
    for (int h : hits) {
        CHECK(std::abs(h - 10000) < 500);
    }
}

TEST_CASE("poisson moments") {
    for (double lambda : {0.5, 3.0, 20.0, 900.0}) {
        Rng rng(11);
        const int n = 40000;
        double sum = 0.0;
        double sq = 0.0;
        for (int i = 0; i < n; ++i) {
            const auto x = static_cast<double>(rng.poisson(lambda));
            sum += x;
            sq += x * x;
        }
        const double mean = sum / n;
        const double var = sq / n - mean * mean;
        CHECK(std::abs(mean - lambda) < 5 * std::sqrt(lambda / n));
        CHECK(std::abs(var / lambda - 1.0) < 0.05);
    }
    Rng rng(1);
    CHECK(rng.poisson(0.0) == 0);
}

TEST_CASE("choose_sorted") {
    Rng rng(9);
    const auto picks = rng.choose_sorted(10, 4);
    REQUIRE(picks.size() == 4);
    CHECK(std::is_sorted(picks.begin(), picks.end()));
    CHECK(std::set<std::size_t>(picks.begin(), picks.end()).size() == 4);
    CHECK(rng.choose_sorted(5, 5) == std::vector<std::size_t>{0, 1, 2, 3, 4});
    CHECK(rng.choose_sorted(5, 0).empty());
    // Each index equally likely.
    std::vector<int> hits(6, 0);
    for (int i = 0; i < 30000; ++i) {
        for (std::size_t p : rng.choose_sorted(6, 2)) {
            ++hits[p];
        }
    }
    for (int h : hits) {
        CHECK(std::abs(h - 10000) < 400);
    }
}
