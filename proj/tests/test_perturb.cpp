#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "codeprov/error.hpp"
#include "codeprov/perturb.hpp"
#include "support.hpp"

using namespace codeprov;

TEST_CASE("eligible space locations") {
    CHECK(space_locations("a = 1") == std::vector<std::size_t>{1, 2, 3, 4});
    // Indentation is never a location; the first token of each line starts after it.
    CHECK(space_locations("if x:\n    y\n") == std::vector<std::size_t>{2, 3, 4, 5, 11});
    // No location after a line-continuation backslash.
    const std::string cont = "x = 1 + \\\n    2\n";
    for (std::size_t loc : space_locations(cont)) {
        CHECK(cont[loc - 1] != '\\');
    }
    // Nothing inside an f-string field.
    const std::string f = "s = f'{a + b}'";
    for (std::size_t loc : space_locations(f)) {
        CHECK(loc <= 4);
    }
    CHECK(space_locations("ab", true) == std::vector<std::size_t>{1});
    CHECK(space_locations("é", true).empty());
}

TEST_CASE("line end locations") {
    CHECK(line_end_locations("a\nb\n") == std::vector<std::size_t>{2, 4});
    CHECK(line_end_locations("x=1") == std::vector<std::size_t>{3});
    CHECK(line_end_locations("").empty());
}

TEST_CASE("insertion log replay") {
    CHECK(apply_insertions("a = 1", {{1, 2}, {2, 0}, {3, 1}, {4, 0}}, ' ') == "a   =  1");
    CHECK(apply_insertions("x=1", {{3, 2}}, '\n') == "x=1\n\n");
    CHECK_THROWS_AS(apply_insertions("ab", {{2, 1}, {1, 1}}, ' '), Error);
}

TEST_CASE("seeded replay matches a reference construction") {
    const std::string code = "def f(a, b):\n    return a+b  # sum\n";
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng(seed);
        const PerturbationResult r = insert_spaces(code, 0.5, 3.0, rng);

        // Reference: same draws, string built by hand.
        Rng replay(seed);
        const std::vector<std::size_t> locs = space_locations(code);
        const auto m = static_cast<std::size_t>(std::ceil(0.5 * static_cast<double>(locs.size())));
        std::vector<std::size_t> counts(code.size() + 1, 0);
        for (std::size_t idx : replay.choose_sorted(locs.size(), m)) {
            counts[locs[idx]] += replay.poisson(3.0);
        }
        std::string expected;
        for (std::size_t i = 0; i <= code.size(); ++i) {
            expected.append(counts[i], ' ');
            if (i < code.size()) {
                expected += code[i];
            }
        }
        CHECK(r.text == expected);
        CHECK(r.insertions.size() == m);
    }
    Rng rng(4);
    const PerturbationResult nl = insert_newlines("x=1", 1.0, 2.0, rng);
    Rng replay(4);
    replay.choose_sorted(1, 1);
    CHECK(nl.text == "x=1" + std::string(replay.poisson(2.0), '\n'));
}

TEST_CASE("degenerate parameters leave code unchanged") {
    const std::string code = "a = [1, 2]\nb = a\n";
    Rng rng(1);
    CHECK(insert_spaces(code, 0.0, 3.0, rng).text == code);
    CHECK(insert_spaces(code, 1.0, 0.0, rng).text == code);
    CHECK(insert_newlines(code, 0.0, 2.0, rng).text == code);
    CHECK(insert_newlines(code, 1.0, 0.0, rng).text == code);
    CHECK_THROWS_AS(insert_spaces("", 0.5, 3.0, rng), Error);
    CHECK_THROWS_AS(insert_newlines("", 0.5, 3.0, rng), Error);
}

TEST_CASE("newline count grows by the draws") {
    const std::string code = "a\nb\nc";
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        const PerturbationResult r = insert_newlines(code, 1.0, 2.0, rng);
        std::size_t drawn = 0;
        for (const Insertion& ins : r.insertions) {
            drawn += ins.count;
        }
        CHECK(std::count(r.text.begin(), r.text.end(), '\n') == 2 + static_cast<long>(drawn));
    }
}

TEST_CASE("perturbed sets") {
    PerturbationConfig config;
    config.k = 1;
    config.seed = 99;
    const std::string code = "for i in range(3):\n    print(i)\n";
    const PerturbedSet a = perturb_set(code, config);
    REQUIRE(a.variants.size() == 1);
    CHECK(a.variants[0].text == perturb_set(code, config).variants[0].text);

    // Variant i does not depend on k.
    config.k = 20;
    const PerturbedSet big = perturb_set(code, config);
    CHECK(big.variants[0].text == a.variants[0].text);

    CHECK_THROWS_AS(perturb_set("", config), Error);
    config.k = 0;
    CHECK_THROWS_AS(perturb_set(code, config), Error);
    config.k = 1;
    config.alpha = 1.5;
    CHECK_THROWS_AS(perturb_set(code, config), Error);
}

TEST_CASE("fair coin between perturbation types") {
    PerturbationConfig config;
    config.k = 10000;
    config.seed = 2024;
    const PerturbedSet set = perturb_set("x = 1\n", config);
    std::size_t spaces = 0;
    for (const auto& v : set.variants) {
        spaces += v.type == PerturbationType::space ? 1 : 0;
    }
    CHECK(std::abs(static_cast<double>(spaces) / 10000.0 - 0.5) < 0.02);
}

TEST_CASE("insertion-only invariants on fuzzed code") {
    Rng fuzz(5);
    for (int i = 0; i < 200; ++i) {
        const std::string code = testing::fuzz_snippet(fuzz);
        PerturbationConfig config;
        config.k = 5;
        config.seed = static_cast<std::uint64_t>(i);
        config.unsafe_locations = i % 4 == 0;
        for (const PerturbationResult& v : perturb_set(code, config).variants) {
            CHECK(strip_spaces_and_newlines(v.text) == strip_spaces_and_newlines(code));
            CHECK(v.text.size() >= code.size());
            CHECK(apply_insertions(code, v.insertions, v.type == PerturbationType::space ? ' ' : '\n') == v.text);
        }
    }
}

TEST_CASE("stylized perturber") {
    PerturbationConfig config;
    const StylizedPerturber p(config);
    const auto v = p.perturb("a = 1\n", 3, 7);
    REQUIRE(v.size() == 3);
    CHECK(v == p.perturb("a = 1\n", 3, 7));
    CHECK(p.id() == "stylized");
}
