#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "codeprov/detectors.hpp"
#include "codeprov/generator.hpp"
#include "codeprov/perturb.hpp"
#include "codeprov/sample.hpp"
#include "codeprov/scoring.hpp"

namespace codeprov {

/// Prefix of `text` covering its first `max_tokens` scorer tokens, cut back
/// to a UTF-8 character boundary.
std::string trim(std::string_view text, std::size_t max_tokens, const Scorer& scorer);

/// Longest prefix that is valid UTF-8.
std::string valid_utf8_prefix(std::string_view bytes);

struct BenchmarkParams {
    std::size_t n_pairs = 500;
    double temperature = 0.2;
    double top_p = 0.95;
    std::size_t max_tokens = 128;  // generation budget and trim length
    std::uint64_t seed = 0;
};

/// Paired human/machine dataset. Each usable human function is split into
/// prompt (signature plus docstring) and body; the machine side is the
/// generator's continuation of the same prompt. Sample texts hold bodies
/// only (the prompt is kept in `prompt`), both trimmed to max_tokens with
/// `trim_scorer`. Samples are emitted human, machine, human, machine, ...
/// Throws InsufficientCorpus when fewer than n_pairs pairs can be built.
std::vector<CodeSample> build_benchmark(const Corpus& human, const Generator& generator, const Scorer& trim_scorer,
                                        const BenchmarkParams& params);

struct MannWhitneyCounts {
    std::uint64_t greater = 0;  // machine > human pairs
    std::uint64_t ties = 0;
    std::uint64_t total = 0;    // n_machine * n_human
};

MannWhitneyCounts mann_whitney_counts(const std::vector<double>& machine, const std::vector<double>& human);

/// Mann-Whitney AUROC: (greater + ties / 2) / total. The value is rounded to
/// a multiple of 2^-53 so that swapping the two lists yields exactly 1 - a.
double auroc(const std::vector<double>& machine, const std::vector<double>& human);

struct WilcoxonResult {
    double statistic = 0.0;  // z score of a's rank sum; sign flips when a, b swap
    double rank_sum = 0.0;   // sum of a's (mid)ranks
    double p_value = 1.0;    // two-sided, normal approximation with tie correction
};

WilcoxonResult wilcoxon_rank_sum(const std::vector<double>& a, const std::vector<double>& b);

struct EvalConfig {
    PerturbationConfig perturbation;  // k, alpha, beta, lambdas, seed
    std::size_t trim_tokens = 128;    // 0 disables trimming
    bool approx_rank = false;
    bool keep_degenerate = false;
    std::vector<std::size_t> sweep_k;  // empty: no sweep
    std::size_t workers = 1;
    double span_fraction = 0.15;       // forwarded to the external perturber
    std::size_t significance_repeats = 10;

    nlohmann::ordered_json echo() const;
    std::string hash() const;
};

/// Persistent per-sample score store (JSONL), keyed by sample id, scorer id,
/// method and method-config hash.
class ScoreCache {
public:
    struct Entry {
        double raw = 0.0;
        double score = 0.0;
        bool degenerate = false;
        std::size_t k_used = 0;
    };

    ScoreCache() = default;
    /// Loads existing records from `path` (if present) and appends new ones.
    explicit ScoreCache(std::filesystem::path path);

    std::optional<Entry> find(const std::string& sample_id, const std::string& scorer_id, Method method,
                              const std::string& config_hash) const;
    void insert(const std::string& sample_id, const std::string& scorer_id, Method method,
                const std::string& config_hash, const Entry& entry);
    std::size_t size() const;

private:
    static std::string key(const std::string& sample_id, const std::string& scorer_id, Method method,
                           const std::string& config_hash);
    std::optional<std::filesystem::path> path_;
    mutable std::mutex mutex_;
    std::map<std::string, Entry> entries_;
};

struct MethodScores {
    std::string scorer_id;
    Method method = Method::log_p;
    std::size_t k = 0;  // perturbation count, 0 for direct methods
    std::optional<double> auroc;
    std::size_t n_machine = 0;
    std::size_t n_human = 0;
    std::size_t degenerate_count = 0;
    std::size_t failed_count = 0;
    std::optional<double> separation_p;  // Wilcoxon machine vs human scores
};

struct PairwiseSignificance {
    std::string scorer_id;
    Method method_a = Method::detect_code_gpt;
    Method method_b = Method::log_p;
    double statistic = 0.0;
    double p_value = 1.0;
};

struct SampleFailure {
    std::string sample_id;
    std::string scorer_id;
    Method method = Method::log_p;
    std::string message;
};

struct EvalReport {
    nlohmann::ordered_json config;
    std::string config_hash;
    std::vector<MethodScores> results;  // at config.perturbation.k
    std::vector<MethodScores> sweep;    // one entry per (scorer, k, perturbation method)
    std::vector<PairwiseSignificance> significance;
    std::vector<SampleFailure> failures;

    const MethodScores* find(const std::string& scorer_id, Method method) const;
    const MethodScores* find_sweep(const std::string& scorer_id, Method method, std::size_t k) const;

    nlohmann::ordered_json to_json() const;
    /// Rows = scorers, columns = methods, cells = AUROC.
    void write_csv(std::ostream& out) const;
    /// Rows = (scorer, k), columns = perturbation methods.
    void write_sweep_csv(std::ostream& out) const;
};

struct SuiteInputs {
    std::vector<Method> methods;
    std::vector<ScorerHandle> scorers;
    PerturberHandle external_perturber;  // required by detectgpt / npr_mlm
    ScoreCache* cache = nullptr;
};

/// Runs every method under every scorer on the dataset. Per-sample failures
/// are recorded, not thrown. Samples whose score is degenerate (or failed)
/// are dropped together with their pair partner.
EvalReport run_suite(const std::vector<CodeSample>& dataset, const SuiteInputs& inputs, const EvalConfig& config);

}  // namespace codeprov
