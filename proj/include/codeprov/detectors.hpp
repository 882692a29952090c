#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "codeprov/perturb.hpp"
#include "codeprov/scoring.hpp"

namespace codeprov {

enum class Method {
    log_p,
    entropy,
    rank,
    log_rank,
    lrr,
    detectgpt,
    npr_mlm,
    detect_code_gpt,
};

inline constexpr std::array<Method, 8> kAllMethods = {
    Method::log_p, Method::entropy,   Method::rank,    Method::log_rank,
    Method::lrr,   Method::detectgpt, Method::npr_mlm, Method::detect_code_gpt,
};

std::string_view to_string(Method method) noexcept;
/// Accepts the enum spelling and the dashed CLI spelling ("detect-code-gpt").
Method parse_method(std::string_view name);

/// Methods that score perturbed variants.
bool uses_perturbations(Method method) noexcept;
/// Methods whose perturbations come from the external MLM perturber.
bool uses_external_perturber(Method method) noexcept;

/// Sign applied to a method's raw statistic so that a larger oriented score
/// always means "more likely machine-authored".
double orientation(Method method) noexcept;

/// Denominator guard for the rank-ratio statistics.
inline constexpr double kRankDenominatorGuard = 1e-6;
/// Score emitted for degenerate (guarded) results.
inline constexpr double kDegenerateScore = 1.0e300;

struct DetectionResult {
    Method method = Method::log_p;
    double raw_score = 0.0;
    double score = 0.0;  // oriented: greater => machine
    bool oriented = true;
    std::optional<bool> verdict;  // present only when a threshold was supplied
    std::size_t k_used = 0;
    bool degenerate = false;
};

/// verdict = score > epsilon.
void apply_threshold(DetectionResult& result, double epsilon);

struct DetectorOptions {
    bool allow_approximate_rank = false;
};

DetectionResult score_log_p(const ScoredCode& sc);
DetectionResult score_entropy(const ScoredCode& sc);
DetectionResult score_rank(const ScoredCode& sc, const DetectorOptions& options = {});
DetectionResult score_log_rank(const ScoredCode& sc, const DetectorOptions& options = {});
/// |mean log likelihood| / mean log rank; degenerate when the denominator is
/// at most kRankDenominatorGuard.
DetectionResult score_lrr(const ScoredCode& sc, const DetectorOptions& options = {});

/// Likelihood discrepancy from precomputed means.
double likelihood_discrepancy(double original_mean_ll, std::span<const double> perturbed_mean_ll);

/// Ratio of the mean perturbed log rank to the original log rank. Returns
/// nullopt when the original is at or below the guard.
std::optional<double> normalized_perturbed_log_rank(double original_mean_log_rank,
                                                    std::span<const double> perturbed_mean_log_rank);

/// d = mean ll(x) - mean over variants of mean ll(x~).
DetectionResult score_detectgpt(std::string_view code, const Scorer& scorer, const Perturber& perturber,
                                std::size_t k, std::uint64_t seed = 0);

/// NPR over k variants from `perturber`; reported as `method`.
DetectionResult score_npr(std::string_view code, const Scorer& scorer, const Perturber& perturber, std::size_t k,
                          std::uint64_t seed = 0, const DetectorOptions& options = {},
                          Method method = Method::npr_mlm);

/// NPR over stylized space/newline perturbations; verdict when epsilon is set.
DetectionResult detect_code_gpt(std::string_view code, const Scorer& scorer, const PerturbationConfig& config,
                                std::optional<double> epsilon = std::nullopt,
                                const DetectorOptions& options = {});

/// Dispatches any non-perturbation method on an already scored text.
DetectionResult score_method(Method method, const ScoredCode& sc, const DetectorOptions& options = {});

}  // namespace codeprov
