#include "codeprov/stylometry.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

#include <boost/math/special_functions/gamma.hpp>

#include "codeprov/error.hpp"

namespace codeprov {

std::vector<const CodeSample*> usable_samples(const Corpus& corpus, std::vector<std::string>* warnings) {
    std::vector<const CodeSample*> usable;
    for (const CodeSample& s : corpus.samples) {
        std::string problem;
        if (is_blank(s.text)) {
            problem = "is empty or whitespace-only";
        } else if (!is_valid_utf8(s.text)) {
            problem = "is not valid UTF-8";
        }
        if (!problem.empty()) {
            if (warnings != nullptr) {
                warnings->push_back("sample '" + s.id + "' in corpus '" + corpus.name + "' " + problem + "; skipped");
            }
            continue;
        }
        usable.push_back(&s);
    }
    return usable;
}

namespace {

std::vector<const CodeSample*> require_usable(const Corpus& corpus, std::vector<std::string>* warnings = nullptr) {
    auto usable = usable_samples(corpus, warnings);
    require(!usable.empty(), ErrorCode::EmptyCorpus, "corpus '" + corpus.name + "' has no usable samples");
    return usable;
}

double median_of(std::vector<std::size_t> values) {
    if (values.empty()) {
        return 0.0;
    }
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    if (values.size() % 2 == 1) {
        return static_cast<double>(values[mid]);
    }
    return (static_cast<double>(values[mid - 1]) + static_cast<double>(values[mid])) / 2.0;
}

double mean_of(const std::vector<std::size_t>& values) {
    if (values.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (std::size_t v : values) {
        sum += static_cast<double>(v);
    }
    return sum / static_cast<double>(values.size());
}

}  // namespace

std::vector<TokenCount> token_frequency(const Corpus& corpus, std::size_t top_k) {
    std::unordered_map<std::string, std::size_t> counts;
    for (const CodeSample* s : require_usable(corpus)) {
        for (const TokenSpan& span : lex(s->text).spans) {
            if (span.category != Category::whitespace) {
                ++counts[span.text];
            }
        }
    }
    std::vector<TokenCount> table;
    table.reserve(counts.size());
    for (auto& [text, count] : counts) {
        table.push_back({text, count});
    }
    std::sort(table.begin(), table.end(), [](const TokenCount& a, const TokenCount& b) {
        return a.count != b.count ? a.count > b.count : a.text < b.text;
    });
    if (top_k > 0 && table.size() > top_k) {
        table.resize(top_k);
    }
    return table;
}

double chi_square_survival(double statistic, double dof) {
    if (dof <= 0.0) {
        return 1.0;
    }
    if (statistic <= 0.0) {
        return 1.0;
    }
    return boost::math::gamma_q(dof / 2.0, statistic / 2.0);
}

ChiSquareResult chi_square_two_rows(const std::array<std::size_t, kCategoryCount>& a,
                                    const std::array<std::size_t, kCategoryCount>& b) {
    ChiSquareResult result;
    result.counts_a = a;
    result.counts_b = b;
    double total_a = 0.0;
    double total_b = 0.0;
    for (std::size_t i = 0; i < kCategoryCount; ++i) {
        total_a += static_cast<double>(a[i]);
        total_b += static_cast<double>(b[i]);
        if (a[i] + b[i] > 0) {
            result.categories.push_back(kAllCategories[i]);
        }
    }
    require(total_a > 0.0 && total_b > 0.0, ErrorCode::EmptyCorpus, "both corpora need at least one span");
    if (result.categories.size() < 2) {
        return result;
    }
    const double grand = total_a + total_b;
    double statistic = 0.0;
    for (Category c : result.categories) {
        const std::size_t i = index_of(c);
        const double column = static_cast<double>(a[i] + b[i]);
        const double expected_a = total_a * column / grand;
        const double expected_b = total_b * column / grand;
        const double da = static_cast<double>(a[i]) - expected_a;
        const double db = static_cast<double>(b[i]) - expected_b;
        statistic += da * da / expected_a + db * db / expected_b;
    }
    result.statistic = statistic;
    result.dof = result.categories.size() - 1;
    result.p_value = chi_square_survival(statistic, static_cast<double>(result.dof));
    return result;
}

namespace {

std::array<std::size_t, kCategoryCount> corpus_category_counts(const Corpus& corpus) {
    std::array<std::size_t, kCategoryCount> totals{};
    for (const CodeSample* s : require_usable(corpus)) {
        const auto counts = category_counts(lex(s->text));
        for (std::size_t i = 0; i < kCategoryCount; ++i) {
            totals[i] += counts[i];
        }
    }
    return totals;
}

}  // namespace

ChiSquareResult compare_category_distributions(const Corpus& a, const Corpus& b) {
    return chi_square_two_rows(corpus_category_counts(a), corpus_category_counts(b));
}

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    require(x.size() == y.size() && x.size() >= 2, ErrorCode::TooFewTokens, "need at least two points to fit");
    const auto n = static_cast<double>(x.size());
    double mean_x = 0.0;
    double mean_y = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mean_x += x[i];
        mean_y += y[i];
    }
    mean_x /= n;
    mean_y /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mean_x) * (x[i] - mean_x);
        sxy += (x[i] - mean_x) * (y[i] - mean_y);
        syy += (y[i] - mean_y) * (y[i] - mean_y);
    }
    require(sxx > 0.0, ErrorCode::TooFewTokens, "x values are all equal");
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = mean_y - fit.slope * mean_x;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (fit.intercept + fit.slope * x[i]);
        ss_res += r * r;
    }
    // Relative tolerance: a flat series fitted exactly still has rounding noise.
    if (syy <= 1e-24 * std::max(1.0, mean_y * mean_y) * n) {
        fit.r_squared = 1.0;
    } else {
        fit.r_squared = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
    }
    return fit;
}

ZipfFit fit_zipf_counts(const std::vector<std::size_t>& frequencies) {
    require(frequencies.size() >= 10, ErrorCode::TooFewTokens,
            "need at least 10 distinct tokens, got " + std::to_string(frequencies.size()));
    std::vector<double> x;
    std::vector<double> y;
    for (std::size_t r = 0; r < frequencies.size(); ++r) {
        if (r > 0) {
            require(frequencies[r] <= frequencies[r - 1], ErrorCode::InvalidArgument,
                    "frequencies must be sorted descending");
        }
        if (frequencies[r] < 2) {
            break;  // singleton tail
        }
        x.push_back(std::log(static_cast<double>(r + 1)));
        y.push_back(std::log(static_cast<double>(frequencies[r])));
    }
    require(x.size() >= 2, ErrorCode::TooFewTokens, "fewer than two ranks with frequency >= 2");
    const LineFit line = least_squares(x, y);
    ZipfFit fit;
    fit.zipf_alpha = -line.slope;
    fit.intercept = line.intercept;
    fit.r_squared = line.r_squared;
    fit.ranks_used = x.size();
    return fit;
}

ZipfFit fit_zipf(const Corpus& corpus) {
    std::vector<std::size_t> frequencies;
    for (const TokenCount& tc : token_frequency(corpus)) {
        frequencies.push_back(tc.count);
    }
    return fit_zipf_counts(frequencies);
}

std::vector<std::string> token_stream(const Corpus& corpus) {
    std::vector<std::string> stream;
    for (const CodeSample* s : require_usable(corpus)) {
        for (const TokenSpan& span : lex(s->text).spans) {
            if (span.category != Category::whitespace) {
                stream.push_back(span.text);
            }
        }
    }
    return stream;
}

HeapsFit fit_heaps_stream(const std::vector<std::string>& stream, std::size_t checkpoints) {
    require(checkpoints >= 2, ErrorCode::InvalidArgument, "need at least two checkpoints");
    require(stream.size() >= checkpoints, ErrorCode::TooFewTokens,
            "token stream of " + std::to_string(stream.size()) + " is shorter than " + std::to_string(checkpoints) +
                " checkpoints");
    HeapsFit fit;
    std::unordered_set<std::string_view> vocabulary;
    std::size_t consumed = 0;
    for (std::size_t i = 1; i <= checkpoints; ++i) {
        // ceil(i * N / m): evenly spaced, strictly increasing since N >= m
        const std::size_t target = (i * stream.size() + checkpoints - 1) / checkpoints;
        while (consumed < target) {
            vocabulary.insert(stream[consumed]);
            ++consumed;
        }
        fit.curve.push_back({consumed, vocabulary.size()});
    }
    std::vector<double> x;
    std::vector<double> y;
    for (const HeapsPoint& p : fit.curve) {
        x.push_back(std::log(static_cast<double>(p.tokens)));
        y.push_back(std::log(static_cast<double>(p.vocabulary)));
    }
    const LineFit line = least_squares(x, y);
    fit.heaps_beta = line.slope;
    fit.coefficient = std::exp(line.intercept);
    fit.r_squared = line.r_squared;
    return fit;
}

HeapsFit fit_heaps(const Corpus& corpus, std::size_t checkpoints) {
    return fit_heaps_stream(token_stream(corpus), checkpoints);
}

std::size_t count_tokens(const LexedCode& code) {
    return static_cast<std::size_t>(std::count_if(code.spans.begin(), code.spans.end(), [](const TokenSpan& s) {
        return s.category != Category::whitespace;
    }));
}

std::size_t count_lines(std::string_view text) {
    std::size_t lines = 0;
    bool content = false;
    for (char c : text) {
        if (c == '\n') {
            lines += content ? 1 : 0;
            content = false;
        } else if (c != ' ' && c != '\t' && c != '\r' && c != '\f' && c != '\v') {
            content = true;
        }
    }
    return lines + (content ? 1 : 0);
}

LengthStats length_stats(const Corpus& corpus) {
    LengthStats stats;
    for (const CodeSample* s : require_usable(corpus, &stats.warnings)) {
        const std::size_t tokens = count_tokens(lex(s->text));
        const std::size_t lines = count_lines(s->text);
        stats.token_counts.push_back(tokens);
        stats.line_counts.push_back(lines);
        ++stats.token_count_histogram[tokens];
        ++stats.line_count_histogram[lines];
    }
    stats.mean_tokens = mean_of(stats.token_counts);
    stats.median_tokens = median_of(stats.token_counts);
    stats.mean_lines = mean_of(stats.line_counts);
    stats.median_lines = median_of(stats.line_counts);
    return stats;
}

std::vector<Category> align_tokens(const LexedCode& code, const ScoredCode& scored) {
    require(scored.text == code.source, ErrorCode::AlignmentFailure, "scored text differs from lexed source");
    check_tiling(scored);
    std::vector<Category> categories;
    categories.reserve(scored.tokens.size());
    std::size_t first = 0;
    for (const ScoredToken& token : scored.tokens) {
        while (first < code.spans.size() && code.spans[first].end <= token.byte_start) {
            ++first;
        }
        require(first < code.spans.size(), ErrorCode::AlignmentFailure, "token beyond the lexed spans");
        std::size_t best = first;
        std::size_t best_overlap = 0;
        for (std::size_t j = first; j < code.spans.size() && code.spans[j].start < token.byte_end; ++j) {
            const std::size_t overlap =
                std::min(token.byte_end, code.spans[j].end) - std::max(token.byte_start, code.spans[j].start);
            if (overlap > best_overlap) {
                best_overlap = overlap;
                best = j;
            }
        }
        categories.push_back(code.spans[best].category);
    }
    return categories;
}

CategoryNaturalness category_naturalness(const Corpus& corpus, const Scorer& scorer, bool allow_approximate_rank) {
    CategoryNaturalness table;
    std::array<double, kCategoryCount> ll_sum{};
    std::array<double, kCategoryCount> rank_sum{};
    for (const CodeSample* s : require_usable(corpus, &table.warnings)) {
        const LexedCode lexed = lex(s->text);
        const ScoredCode scored = scorer.score(s->text);
        const std::vector<Category> categories = align_tokens(lexed, scored);
        for (std::size_t i = 0; i < categories.size(); ++i) {
            const ScoredToken& t = scored.tokens[i];
            if (t.rank_lower_bound && !allow_approximate_rank) {
                fail(ErrorCode::RankUnavailable, "scorer '" + scorer.id() + "' reported a lower-bound rank");
            }
            const std::size_t c = index_of(categories[i]);
            ll_sum[c] += t.log_likelihood;
            rank_sum[c] += std::log(static_cast<double>(t.rank));
            ++table.categories[c].token_count;
        }
    }
    double all_ll = 0.0;
    double all_rank = 0.0;
    for (std::size_t c = 0; c < kCategoryCount; ++c) {
        NaturalnessRow& row = table.categories[c];
        if (row.token_count > 0) {
            row.mean_log_likelihood = ll_sum[c] / static_cast<double>(row.token_count);
            row.mean_log_rank = rank_sum[c] / static_cast<double>(row.token_count);
        }
        all_ll += ll_sum[c];
        all_rank += rank_sum[c];
        table.all.token_count += row.token_count;
    }
    if (table.all.token_count > 0) {
        table.all.mean_log_likelihood = all_ll / static_cast<double>(table.all.token_count);
        table.all.mean_log_rank = all_rank / static_cast<double>(table.all.token_count);
    }
    return table;
}

void write_naturalness_comparison_csv(std::ostream& out, const CategoryNaturalness& machine,
                                      const CategoryNaturalness& human) {
    out << "category,ll_machine,ll_human,ll_delta,log_rank_machine,log_rank_human,log_rank_delta\n";
    const auto row = [&out](std::string_view name, const NaturalnessRow& m, const NaturalnessRow& h) {
        out << name << std::fixed << std::setprecision(6) << ',' << m.mean_log_likelihood << ','
            << h.mean_log_likelihood << ',' << (m.mean_log_likelihood - h.mean_log_likelihood) << ','
            << m.mean_log_rank << ',' << h.mean_log_rank << ',' << (h.mean_log_rank - m.mean_log_rank) << '\n';
    };
    const auto flags = out.flags();
    const auto precision = out.precision();
    for (Category c : kAllCategories) {
        row(to_string(c), machine.row(c), human.row(c));
    }
    row("ALL", machine.all, human.all);
    out.flags(flags);
    out.precision(precision);
}

}  // namespace codeprov
