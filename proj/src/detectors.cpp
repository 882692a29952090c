#include "codeprov/detectors.hpp"

#include <cmath>
#include <numeric>

#include "codeprov/error.hpp"

namespace codeprov {

std::string_view to_string(Method method) noexcept {
    switch (method) {
        case Method::log_p: return "log_p";
        case Method::entropy: return "entropy";
        case Method::rank: return "rank";
        case Method::log_rank: return "log_rank";
        case Method::lrr: return "lrr";
        case Method::detectgpt: return "detectgpt";
        case Method::npr_mlm: return "npr_mlm";
        case Method::detect_code_gpt: return "detect_code_gpt";
    }
    return "log_p";
}

Method parse_method(std::string_view name) {
    std::string normalized(name);
    for (char& c : normalized) {
        if (c == '-') {
            c = '_';
        }
    }
    if (normalized == "npr") {
        return Method::npr_mlm;
    }
    for (Method m : kAllMethods) {
        if (to_string(m) == normalized) {
            return m;
        }
    }
    fail(ErrorCode::InvalidArgument, "unknown method '" + std::string(name) + "'");
}

bool uses_perturbations(Method method) noexcept {
    return method == Method::detectgpt || method == Method::npr_mlm || method == Method::detect_code_gpt;
}

bool uses_external_perturber(Method method) noexcept {
    return method == Method::detectgpt || method == Method::npr_mlm;
}

double orientation(Method method) noexcept {
    switch (method) {
        case Method::rank:
        case Method::log_rank:
            return -1.0;  // machine text sits at lower ranks
        default:
            return 1.0;
    }
}

void apply_threshold(DetectionResult& result, double epsilon) {
    result.verdict = result.score > epsilon;
}

namespace {

DetectionResult make_result(Method method, double raw) {
    DetectionResult r;
    r.method = method;
    r.raw_score = raw;
    r.score = orientation(method) * raw;
    return r;
}

DetectionResult degenerate_result(Method method, std::size_t k) {
    DetectionResult r;
    r.method = method;
    r.raw_score = kDegenerateScore;
    r.score = kDegenerateScore;
    r.degenerate = true;
    r.k_used = k;
    return r;
}

void require_k(std::size_t k) {
    require(k >= 1, ErrorCode::InvalidArgument, "number of perturbations must be at least 1");
}

std::vector<std::string> variants_of(std::string_view code, const Perturber& perturber, std::size_t k,
                                     std::uint64_t seed) {
    std::vector<std::string> variants = perturber.perturb(code, k, seed);
    require(variants.size() == k, ErrorCode::ProtocolError,
            "perturber '" + perturber.id() + "' returned " + std::to_string(variants.size()) + " variants, expected " +
                std::to_string(k));
    return variants;
}

}  // namespace

DetectionResult score_log_p(const ScoredCode& sc) { return make_result(Method::log_p, mean_log_likelihood(sc)); }

DetectionResult score_entropy(const ScoredCode& sc) { return make_result(Method::entropy, mean_entropy(sc)); }

DetectionResult score_rank(const ScoredCode& sc, const DetectorOptions& options) {
    return make_result(Method::rank, mean_rank(sc, options.allow_approximate_rank));
}

DetectionResult score_log_rank(const ScoredCode& sc, const DetectorOptions& options) {
    return make_result(Method::log_rank, mean_log_rank(sc, options.allow_approximate_rank));
}

DetectionResult score_lrr(const ScoredCode& sc, const DetectorOptions& options) {
    const double ll = mean_log_likelihood(sc);
    const double log_rank = mean_log_rank(sc, options.allow_approximate_rank);
    if (log_rank <= kRankDenominatorGuard) {
        return degenerate_result(Method::lrr, 0);
    }
    return make_result(Method::lrr, std::abs(ll) / log_rank);
}

double likelihood_discrepancy(double original_mean_ll, std::span<const double> perturbed_mean_ll) {
    require_k(perturbed_mean_ll.size());
    const double sum = std::accumulate(perturbed_mean_ll.begin(), perturbed_mean_ll.end(), 0.0);
    return original_mean_ll - sum / static_cast<double>(perturbed_mean_ll.size());
}

std::optional<double> normalized_perturbed_log_rank(double original_mean_log_rank,
                                                    std::span<const double> perturbed_mean_log_rank) {
    require_k(perturbed_mean_log_rank.size());
    if (original_mean_log_rank <= kRankDenominatorGuard) {
        return std::nullopt;
    }
    const double sum = std::accumulate(perturbed_mean_log_rank.begin(), perturbed_mean_log_rank.end(), 0.0);
    return (sum / static_cast<double>(perturbed_mean_log_rank.size())) / original_mean_log_rank;
}

DetectionResult score_detectgpt(std::string_view code, const Scorer& scorer, const Perturber& perturber,
                                std::size_t k, std::uint64_t seed) {
    require_k(k);
    const double original = mean_log_likelihood(scorer.score(code));
    std::vector<double> perturbed;
    perturbed.reserve(k);
    for (const std::string& v : variants_of(code, perturber, k, seed)) {
        perturbed.push_back(mean_log_likelihood(scorer.score(v)));
    }
    DetectionResult r = make_result(Method::detectgpt, likelihood_discrepancy(original, perturbed));
    r.k_used = k;
    return r;
}

DetectionResult score_npr(std::string_view code, const Scorer& scorer, const Perturber& perturber, std::size_t k,
                          std::uint64_t seed, const DetectorOptions& options, Method method) {
    require_k(k);
    const double original = mean_log_rank(scorer.score(code), options.allow_approximate_rank);
    if (original <= kRankDenominatorGuard) {
        return degenerate_result(method, k);
    }
    std::vector<double> perturbed;
    perturbed.reserve(k);
    for (const std::string& v : variants_of(code, perturber, k, seed)) {
        perturbed.push_back(mean_log_rank(scorer.score(v), options.allow_approximate_rank));
    }
    DetectionResult r = make_result(method, *normalized_perturbed_log_rank(original, perturbed));
    r.k_used = k;
    return r;
}

DetectionResult detect_code_gpt(std::string_view code, const Scorer& scorer, const PerturbationConfig& config,
                                std::optional<double> epsilon, const DetectorOptions& options) {
    require(!code.empty(), ErrorCode::EmptyCode, "cannot detect on empty code");
    const StylizedPerturber perturber(config);
    DetectionResult r = score_npr(code, scorer, perturber, config.k, config.seed, options, Method::detect_code_gpt);
    if (epsilon) {
        apply_threshold(r, *epsilon);
    }
    return r;
}

DetectionResult score_method(Method method, const ScoredCode& sc, const DetectorOptions& options) {
    switch (method) {
        case Method::log_p: return score_log_p(sc);
        case Method::entropy: return score_entropy(sc);
        case Method::rank: return score_rank(sc, options);
        case Method::log_rank: return score_log_rank(sc, options);
        case Method::lrr: return score_lrr(sc, options);
        default:
            fail(ErrorCode::InvalidArgument,
                 std::string(to_string(method)) + " needs perturbations; use the perturbation detectors");
    }
}

}  // namespace codeprov
