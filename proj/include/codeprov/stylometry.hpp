#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "codeprov/lexing.hpp"
#include "codeprov/sample.hpp"
#include "codeprov/scoring.hpp"

namespace codeprov {

/// Samples that take part in corpus statistics. Blank or non-UTF-8 samples
/// are skipped; a message per skipped sample is appended to `warnings`.
std::vector<const CodeSample*> usable_samples(const Corpus& corpus, std::vector<std::string>* warnings = nullptr);

struct TokenCount {
    std::string text;
    std::size_t count = 0;

    bool operator==(const TokenCount&) const = default;
};

/// Non-whitespace lexer tokens by descending count, ties by token text.
/// `top_k == 0` returns the full table.
std::vector<TokenCount> token_frequency(const Corpus& corpus, std::size_t top_k = 0);

struct ChiSquareResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t dof = 0;
    // Categories present in at least one corpus.
    std::vector<Category> categories;
    std::array<std::size_t, kCategoryCount> counts_a{};
    std::array<std::size_t, kCategoryCount> counts_b{};
};

/// Pearson chi-square on a 2 x k table; all-zero columns are dropped and the
/// degrees of freedom reduced. Fewer than two columns gives statistic 0,
/// p = 1, dof = 0.
ChiSquareResult chi_square_two_rows(const std::array<std::size_t, kCategoryCount>& a,
                                    const std::array<std::size_t, kCategoryCount>& b);

ChiSquareResult compare_category_distributions(const Corpus& a, const Corpus& b);

/// Upper tail of the chi-square distribution.
double chi_square_survival(double statistic, double dof);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// Ordinary least squares y = intercept + slope * x. Needs >= 2 points with
/// distinct x. r_squared is 1 when y has no variance and the fit is exact.
LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y);

struct ZipfFit {
    double zipf_alpha = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::size_t ranks_used = 0;
};

/// Fits ln f = c - alpha ln r over ranks with frequency >= 2. `frequencies`
/// must be sorted descending. Needs >= 10 distinct tokens.
ZipfFit fit_zipf_counts(const std::vector<std::size_t>& frequencies);
ZipfFit fit_zipf(const Corpus& corpus);

struct HeapsPoint {
    std::size_t tokens = 0;      // D
    std::size_t vocabulary = 0;  // V
};

struct HeapsFit {
    double heaps_beta = 0.0;
    double coefficient = 0.0;
    double r_squared = 0.0;
    std::vector<HeapsPoint> curve;
};

inline constexpr std::size_t kDefaultHeapsCheckpoints = 50;

/// V(D) at `checkpoints` evenly spaced prefix sizes, then ln V = ln K + beta ln D.
HeapsFit fit_heaps_stream(const std::vector<std::string>& stream, std::size_t checkpoints = kDefaultHeapsCheckpoints);
HeapsFit fit_heaps(const Corpus& corpus, std::size_t checkpoints = kDefaultHeapsCheckpoints);

/// Concatenated non-whitespace lexer tokens of the usable samples.
std::vector<std::string> token_stream(const Corpus& corpus);

struct LengthStats {
    std::vector<std::size_t> token_counts;  // per usable sample
    std::vector<std::size_t> line_counts;
    std::map<std::size_t, std::size_t> token_count_histogram;
    std::map<std::size_t, std::size_t> line_count_histogram;
    double mean_tokens = 0.0;
    double median_tokens = 0.0;
    double mean_lines = 0.0;
    double median_lines = 0.0;
    std::vector<std::string> warnings;
};

/// Non-whitespace span count of one text.
std::size_t count_tokens(const LexedCode& code);
/// Lines holding at least one non-whitespace character.
std::size_t count_lines(std::string_view text);

LengthStats length_stats(const Corpus& corpus);

struct NaturalnessRow {
    double mean_log_likelihood = 0.0;
    double mean_log_rank = 0.0;
    std::size_t token_count = 0;
};

struct CategoryNaturalness {
    std::array<NaturalnessRow, kCategoryCount> categories{};
    NaturalnessRow all;
    std::vector<std::string> warnings;

    const NaturalnessRow& row(Category c) const { return categories[index_of(c)]; }
};

/// Category of each scorer token: the lexer span with the largest byte
/// overlap, ties to the earlier span. Throws AlignmentFailure when the
/// scorer tokens do not tile the text.
std::vector<Category> align_tokens(const LexedCode& code, const ScoredCode& scored);

CategoryNaturalness category_naturalness(const Corpus& corpus, const Scorer& scorer,
                                         bool allow_approximate_rank = false);

/// Table with columns category, ll_machine, ll_human, ll_delta,
/// log_rank_machine, log_rank_human, log_rank_delta. Deltas are oriented so
/// that positive means the machine corpus is more natural.
void write_naturalness_comparison_csv(std::ostream& out, const CategoryNaturalness& machine,
                                      const CategoryNaturalness& human);

}  // namespace codeprov
