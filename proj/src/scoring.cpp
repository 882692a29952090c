#include "codeprov/scoring.hpp"

#include <cmath>

#include "codeprov/error.hpp"

namespace codeprov {

namespace {

void require_tokens(const ScoredCode& sc) {
    require(!sc.tokens.empty(), ErrorCode::EmptyScore, "scored code has no tokens");
}

void require_exact_ranks(const ScoredCode& sc, bool allow_approximate) {
    if (allow_approximate) {
        return;
    }
    for (const ScoredToken& t : sc.tokens) {
        require(!t.rank_lower_bound, ErrorCode::RankUnavailable,
                "scorer '" + sc.scorer_id + "' reported a lower-bound rank; enable approximate ranks to accept it");
    }
}

}  // namespace

double mean_log_likelihood(const ScoredCode& sc) {
    require_tokens(sc);
    double sum = 0.0;
    for (const ScoredToken& t : sc.tokens) {
        sum += t.log_likelihood;
    }
    return sum / static_cast<double>(sc.tokens.size());
}

double mean_log_rank(const ScoredCode& sc, bool allow_approximate) {
    require_tokens(sc);
    require_exact_ranks(sc, allow_approximate);
    double sum = 0.0;
    for (const ScoredToken& t : sc.tokens) {
        sum += std::log(static_cast<double>(t.rank));
    }
    return sum / static_cast<double>(sc.tokens.size());
}

double mean_rank(const ScoredCode& sc, bool allow_approximate) {
    require_tokens(sc);
    require_exact_ranks(sc, allow_approximate);
    double sum = 0.0;
    for (const ScoredToken& t : sc.tokens) {
        sum += static_cast<double>(t.rank);
    }
    return sum / static_cast<double>(sc.tokens.size());
}

double mean_entropy(const ScoredCode& sc) {
    require_tokens(sc);
    double sum = 0.0;
    for (const ScoredToken& t : sc.tokens) {
        require(t.entropy.has_value(), ErrorCode::EntropyUnavailable,
                "scorer '" + sc.scorer_id + "' does not report entropy");
        sum += *t.entropy;
    }
    return sum / static_cast<double>(sc.tokens.size());
}

void check_tiling(const ScoredCode& sc) {
    std::size_t expected = 0;
    for (const ScoredToken& t : sc.tokens) {
        require(t.byte_start == expected && t.byte_end > t.byte_start && t.byte_end <= sc.text.size(),
                ErrorCode::AlignmentFailure,
                "token at byte " + std::to_string(t.byte_start) + " does not continue the tiling at " +
                    std::to_string(expected));
        expected = t.byte_end;
    }
    require(expected == sc.text.size(), ErrorCode::AlignmentFailure,
            "tokens cover " + std::to_string(expected) + " of " + std::to_string(sc.text.size()) + " bytes");
}

}  // namespace codeprov
