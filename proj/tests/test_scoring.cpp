#include <doctest.h>

#include <cmath>
#include <functional>

#include "codeprov/error.hpp"
#include "codeprov/scoring.hpp"

using namespace codeprov;

namespace {

ScoredCode tokens_with(const std::vector<double>& lls, const std::vector<std::size_t>& ranks,
                       const std::vector<double>& entropies = {}) {
    ScoredCode sc;
    sc.scorer_id = "hand";
    for (std::size_t i = 0; i < lls.size(); ++i) {
        ScoredToken t;
        t.text = "x";
        t.byte_start = i;
        t.byte_end = i + 1;
        t.log_likelihood = lls[i];
        t.rank = ranks[i];
        if (i < entropies.size()) {
            t.entropy = entropies[i];
        }
        sc.text += "x";
        sc.tokens.push_back(t);
    }
    return sc;
}

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error thrown");
    return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("mean log likelihood") {
    CHECK(mean_log_likelihood(tokens_with({-1, -2, -3}, {1, 1, 1})) == doctest::Approx(-2.0));
    CHECK(mean_log_likelihood(tokens_with({-0.5}, {1})) == -0.5);
    CHECK(mean_log_likelihood(tokens_with({-3, -1, -2}, {1, 1, 1})) == doctest::Approx(-2.0));
    CHECK(code_of([] { mean_log_likelihood(ScoredCode{}); }) == ErrorCode::EmptyScore);
}

TEST_CASE("mean log rank") {
    CHECK(mean_log_rank(tokens_with({-1, -1, -1}, {1, 1, 1})) == 0.0);
    const double by_hand = (0.0 + 1.945910149) / 2.0;
    CHECK(std::abs(mean_log_rank(tokens_with({-1, -1}, {1, 7})) - 0.9730) < 1e-4);
    CHECK(mean_log_rank(tokens_with({-1, -1}, {1, 7})) == doctest::Approx(by_hand));
    CHECK(mean_log_rank(tokens_with({-1, -1}, {7, 1})) == mean_log_rank(tokens_with({-1, -1}, {1, 7})));
    CHECK(mean_rank(tokens_with({-1, -1}, {1, 7})) == 4.0);
}

TEST_CASE("rank lower bounds need opting in") {
    ScoredCode sc = tokens_with({-1, -1}, {1, 11});
    sc.tokens[1].rank_lower_bound = true;
    CHECK(code_of([&] { mean_log_rank(sc); }) == ErrorCode::RankUnavailable);
    CHECK(code_of([&] { mean_rank(sc); }) == ErrorCode::RankUnavailable);
    CHECK(mean_log_rank(sc, true) == doctest::Approx(std::log(11.0) / 2));
}

TEST_CASE("mean entropy") {
    const double ln256 = std::log(256.0);
    CHECK(mean_entropy(tokens_with({-1, -1}, {1, 1}, {ln256, ln256})) == doctest::Approx(ln256));
    CHECK(mean_entropy(tokens_with({0}, {1}, {0.0})) == 0.0);
    CHECK(mean_entropy(tokens_with({-1, -1}, {1, 1}, {0.0, ln256})) == doctest::Approx(ln256 / 2));
    CHECK(code_of([] { mean_entropy(tokens_with({-1}, {1})); }) == ErrorCode::EntropyUnavailable);
}

TEST_CASE("tiling check") {
    ScoredCode sc = tokens_with({-1, -1}, {1, 1});
    CHECK_NOTHROW(check_tiling(sc));
    sc.tokens[1].byte_start = 0;
    CHECK(code_of([&] { check_tiling(sc); }) == ErrorCode::AlignmentFailure);
    sc = tokens_with({-1, -1}, {1, 1});
    sc.text += "y";
    CHECK(code_of([&] { check_tiling(sc); }) == ErrorCode::AlignmentFailure);
}
