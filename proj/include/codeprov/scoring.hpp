#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace codeprov {

/// One model token of a scored string. Natural-log units throughout.
struct ScoredToken {
    std::string text;
    std::size_t byte_start = 0;
    std::size_t byte_end = 0;
    double log_likelihood = 0.0;  // <= 0
    std::size_t rank = 1;         // 1 = the scorer's modal prediction
    // Set when the scorer only knows the rank exceeds its candidate list;
    // `rank` then holds that lower bound (K + 1).
    bool rank_lower_bound = false;
    std::optional<double> entropy;  // nats; absent when the scorer has no full distribution

    bool operator==(const ScoredToken&) const = default;
};

struct ScoredCode {
    std::string text;
    std::vector<ScoredToken> tokens;
    std::string scorer_id;

    bool operator==(const ScoredCode&) const = default;
};

/// Token-level naturalness oracle (the model p_theta). Implementations must
/// be deterministic: scoring the same text twice yields identical results.
class Scorer {
public:
    virtual ~Scorer() = default;

    /// Throws ScorerUnavailable on transport failure, ScorerProtocolError on
    /// malformed responses, EmptyCode for empty text.
    virtual ScoredCode score(std::string_view text) const = 0;

    virtual std::string id() const = 0;

    /// Upper bound on concurrent score() calls the caller should issue.
    virtual std::size_t max_in_flight() const { return 1; }
};

using ScorerHandle = std::shared_ptr<const Scorer>;

double mean_log_likelihood(const ScoredCode& sc);

/// Mean of ln(rank). Throws RankUnavailable when any rank is only a lower
/// bound unless `allow_approximate` is set.
double mean_log_rank(const ScoredCode& sc, bool allow_approximate = false);

double mean_rank(const ScoredCode& sc, bool allow_approximate = false);

/// Throws EntropyUnavailable when a token lacks an entropy value.
double mean_entropy(const ScoredCode& sc);

/// Checks that token byte ranges tile `sc.text` in order. Throws
/// AlignmentFailure otherwise.
void check_tiling(const ScoredCode& sc);

}  // namespace codeprov
