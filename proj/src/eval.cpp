#include "codeprov/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "codeprov/error.hpp"
#include "codeprov/rng.hpp"
#include "codeprov/stylometry.hpp"

namespace codeprov {

using nlohmann::json;
using nlohmann::ordered_json;

std::string trim(std::string_view text, std::size_t max_tokens, const Scorer& scorer) {
    require(max_tokens >= 1, ErrorCode::InvalidArgument, "trim length must be at least 1 token");
    if (text.empty()) {
        return {};
    }
    const ScoredCode sc = scorer.score(text);
    if (sc.tokens.size() <= max_tokens) {
        return std::string(text);
    }
    std::size_t cut = sc.tokens[max_tokens - 1].byte_end;
    const std::size_t floor = utf8_floor(text, cut);
    if (floor > 0) {
        cut = floor;
    } else {
        // The first character is longer than the budget; keep it whole.
        while (cut < text.size() && (static_cast<unsigned char>(text[cut]) & 0xC0) == 0x80) {
            ++cut;
        }
    }
    return std::string(text.substr(0, cut));
}

std::string valid_utf8_prefix(std::string_view bytes) {
    std::size_t i = 0;
    while (i < bytes.size()) {
        const auto b = static_cast<unsigned char>(bytes[i]);
        std::size_t len = 1;
        if (b >= 0xF0) {
            len = 4;
        } else if (b >= 0xE0) {
            len = 3;
        } else if (b >= 0xC0) {
            len = 2;
        }
        if (i + len > bytes.size() || !is_valid_utf8(bytes.substr(i, len))) {
            break;
        }
        i += len;
    }
    return std::string(bytes.substr(0, i));
}

std::vector<CodeSample> build_benchmark(const Corpus& human, const Generator& generator, const Scorer& trim_scorer,
                                        const BenchmarkParams& params) {
    std::vector<CodeSample> dataset;
    if (params.n_pairs == 0) {
        return dataset;
    }
    struct Candidate {
        const CodeSample* sample;
        std::string prompt;
    };
    std::vector<Candidate> candidates;
    for (const CodeSample* s : usable_samples(human)) {
        std::optional<std::string> prompt = extract_prompt(s->text);
        if (prompt && !is_blank(std::string_view(s->text).substr(prompt->size()))) {
            candidates.push_back({s, std::move(*prompt)});
        }
    }
    Rng rng(derive_seed(params.seed, "benchmark-order"));
    for (std::size_t i = candidates.size(); i > 1; --i) {
        std::swap(candidates[i - 1], candidates[rng.uniform_below(i)]);
    }

    std::size_t pairs = 0;
    for (const Candidate& c : candidates) {
        if (pairs == params.n_pairs) {
            break;
        }
        const std::string body = c.sample->text.substr(c.prompt.size());
        std::string human_text = trim(body, params.max_tokens, trim_scorer);
        if (is_blank(human_text)) {
            continue;
        }
        GenerationParams gen;
        gen.max_tokens = params.max_tokens;
        gen.temperature = params.temperature;
        gen.top_p = params.top_p;
        gen.seed = derive_seed(params.seed, "generate:" + c.sample->id);
        std::string machine_text = valid_utf8_prefix(generator.generate(c.prompt, gen));
        if (is_blank(machine_text)) {
            continue;
        }
        machine_text = trim(machine_text, params.max_tokens, trim_scorer);

        std::ostringstream pair_id;
        pair_id << "pair-" << std::setw(5) << std::setfill('0') << pairs;
        CodeSample h;
        h.id = pair_id.str() + "-human";
        h.text = std::move(human_text);
        h.label = Label::human;
        h.prompt = c.prompt;
        h.language = c.sample->language;
        h.pair = pair_id.str();
        CodeSample m;
        m.id = pair_id.str() + "-machine";
        m.text = std::move(machine_text);
        m.label = Label::machine;
        m.prompt = c.prompt;
        m.source_model = generator.id();
        m.temperature = params.temperature;
        m.language = c.sample->language;
        m.pair = pair_id.str();
        dataset.push_back(std::move(h));
        dataset.push_back(std::move(m));
        ++pairs;
    }
    require(pairs == params.n_pairs, ErrorCode::InsufficientCorpus,
            "built " + std::to_string(pairs) + " of " + std::to_string(params.n_pairs) + " requested pairs");
    return dataset;
}

MannWhitneyCounts mann_whitney_counts(const std::vector<double>& machine, const std::vector<double>& human) {
    require(!machine.empty() && !human.empty(), ErrorCode::EmptyScores, "AUROC needs scores on both sides");
    std::vector<double> sorted = human;
    std::sort(sorted.begin(), sorted.end());
    MannWhitneyCounts counts;
    for (double m : machine) {
        const auto lower = std::lower_bound(sorted.begin(), sorted.end(), m);
        const auto upper = std::upper_bound(lower, sorted.end(), m);
        counts.greater += static_cast<std::uint64_t>(lower - sorted.begin());
        counts.ties += static_cast<std::uint64_t>(upper - lower);
    }
    counts.total = static_cast<std::uint64_t>(machine.size()) * human.size();
    return counts;
}

double auroc(const std::vector<double>& machine, const std::vector<double>& human) {
    const MannWhitneyCounts c = mann_whitney_counts(machine, human);
    // In half-pair units: u + l = 2 * total.
    const std::uint64_t u = 2 * c.greater + c.ties;
    const std::uint64_t l = 2 * c.total - u;
    const auto denom = static_cast<double>(2 * c.total);
    if (u >= l) {
        return static_cast<double>(u) / denom;
    }
    return 1.0 - static_cast<double>(l) / denom;
}

WilcoxonResult wilcoxon_rank_sum(const std::vector<double>& a, const std::vector<double>& b) {
    require(a.size() >= 3 && b.size() >= 3, ErrorCode::TooFewSamples, "rank-sum test needs at least 3 per group");
    struct Item {
        double value;
        bool from_a;
    };
    std::vector<Item> all;
    all.reserve(a.size() + b.size());
    for (double x : a) {
        all.push_back({x, true});
    }
    for (double x : b) {
        all.push_back({x, false});
    }
    std::sort(all.begin(), all.end(), [](const Item& x, const Item& y) { return x.value < y.value; });
    const auto n = static_cast<double>(all.size());
    double rank_sum = 0.0;
    double tie_term = 0.0;
    for (std::size_t i = 0; i < all.size();) {
        std::size_t j = i;
        while (j < all.size() && all[j].value == all[i].value) {
            ++j;
        }
        const double mid_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        const auto t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        for (std::size_t k = i; k < j; ++k) {
            if (all[k].from_a) {
                rank_sum += mid_rank;
            }
        }
        i = j;
    }
    const auto n1 = static_cast<double>(a.size());
    const auto n2 = static_cast<double>(b.size());
    const double mean = n1 * (n + 1.0) / 2.0;
    const double variance = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    WilcoxonResult r;
    r.rank_sum = rank_sum;
    if (variance <= 0.0) {
        return r;
    }
    r.statistic = (rank_sum - mean) / std::sqrt(variance);
    r.p_value = std::erfc(std::abs(r.statistic) / std::sqrt(2.0));
    return r;
}

namespace {

std::string hex64(std::uint64_t v) {
    std::ostringstream s;
    s << std::hex << std::setw(16) << std::setfill('0') << v;
    return s.str();
}

std::string number_text(double v) { return json(v).dump(); }

}  // namespace

ordered_json EvalConfig::echo() const {
    ordered_json j;
    j["k"] = perturbation.k;
    j["alpha"] = perturbation.alpha;
    j["beta"] = perturbation.beta;
    j["lambda_spaces"] = perturbation.lambda_spaces;
    j["lambda_newlines"] = perturbation.lambda_newlines;
    j["seed"] = perturbation.seed;
    j["unsafe_locations"] = perturbation.unsafe_locations;
    j["trim_tokens"] = trim_tokens;
    j["approx_rank"] = approx_rank;
    j["keep_degenerate"] = keep_degenerate;
    j["sweep_k"] = sweep_k;
    j["span_fraction"] = span_fraction;
    j["significance_repeats"] = significance_repeats;
    return j;
}

std::string EvalConfig::hash() const { return hex64(fnv1a64(echo().dump())); }

ScoreCache::ScoreCache(std::filesystem::path path) : path_(std::move(path)) {
    std::ifstream in(*path_, std::ios::binary);
    std::string line;
    while (in && std::getline(in, line)) {
        if (is_blank(line)) {
            continue;
        }
        try {
            const json j = json::parse(line);
            Entry e;
            e.raw = j.at("raw").get<double>();
            e.score = j.at("score").get<double>();
            e.degenerate = j.at("degenerate").get<bool>();
            e.k_used = j.at("k").get<std::size_t>();
            entries_[key(j.at("sample_id"), j.at("scorer_id"), parse_method(j.at("method").get<std::string>()),
                         j.at("config_hash"))] = e;
        } catch (const std::exception&) {
            // A torn trailing line from an interrupted run; the entry is recomputed.
        }
    }
}

std::string ScoreCache::key(const std::string& sample_id, const std::string& scorer_id, Method method,
                            const std::string& config_hash) {
    std::string k = sample_id;
    k += '\x1f';
    k += scorer_id;
    k += '\x1f';
    k += to_string(method);
    k += '\x1f';
    k += config_hash;
    return k;
}

std::optional<ScoreCache::Entry> ScoreCache::find(const std::string& sample_id, const std::string& scorer_id,
                                                  Method method, const std::string& config_hash) const {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(key(sample_id, scorer_id, method, config_hash));
    if (it == entries_.end()) {
        return std::nullopt;
    }
    return it->second;
}

void ScoreCache::insert(const std::string& sample_id, const std::string& scorer_id, Method method,
                        const std::string& config_hash, const Entry& entry) {
    std::lock_guard lock(mutex_);
    entries_[key(sample_id, scorer_id, method, config_hash)] = entry;
    if (path_) {
        ordered_json j;
        j["sample_id"] = sample_id;
        j["scorer_id"] = scorer_id;
        j["method"] = to_string(method);
        j["config_hash"] = config_hash;
        j["raw"] = entry.raw;
        j["score"] = entry.score;
        j["degenerate"] = entry.degenerate;
        j["k"] = entry.k_used;
        std::ofstream out(*path_, std::ios::binary | std::ios::app);
        require(out.good(), ErrorCode::IoError, "cannot append to score cache " + path_->string());
        out << j.dump() << '\n';
    }
}

std::size_t ScoreCache::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

const MethodScores* EvalReport::find(const std::string& scorer_id, Method method) const {
    for (const MethodScores& r : results) {
        if (r.scorer_id == scorer_id && r.method == method) {
            return &r;
        }
    }
    return nullptr;
}

const MethodScores* EvalReport::find_sweep(const std::string& scorer_id, Method method, std::size_t k) const {
    for (const MethodScores& r : sweep) {
        if (r.scorer_id == scorer_id && r.method == method && r.k == k) {
            return &r;
        }
    }
    return nullptr;
}

namespace {

ordered_json method_scores_json(const MethodScores& r) {
    ordered_json j;
    j["scorer"] = r.scorer_id;
    j["method"] = to_string(r.method);
    j["k"] = r.k;
    j["auroc"] = r.auroc ? json(*r.auroc) : json(nullptr);
    j["n_machine"] = r.n_machine;
    j["n_human"] = r.n_human;
    j["degenerate_count"] = r.degenerate_count;
    j["failed_count"] = r.failed_count;
    j["separation_p"] = r.separation_p ? json(*r.separation_p) : json(nullptr);
    return j;
}

}  // namespace

ordered_json EvalReport::to_json() const {
    ordered_json j;
    j["config"] = config;
    j["config_hash"] = config_hash;
    j["results"] = ordered_json::array();
    for (const MethodScores& r : results) {
        j["results"].push_back(method_scores_json(r));
    }
    j["sweep"] = ordered_json::array();
    for (const MethodScores& r : sweep) {
        j["sweep"].push_back(method_scores_json(r));
    }
    j["significance"] = ordered_json::array();
    for (const PairwiseSignificance& s : significance) {
        ordered_json e;
        e["scorer"] = s.scorer_id;
        e["method_a"] = to_string(s.method_a);
        e["method_b"] = to_string(s.method_b);
        e["statistic"] = s.statistic;
        e["p_value"] = s.p_value;
        j["significance"].push_back(std::move(e));
    }
    j["failures"] = ordered_json::array();
    for (const SampleFailure& f : failures) {
        ordered_json e;
        e["sample_id"] = f.sample_id;
        e["scorer"] = f.scorer_id;
        e["method"] = to_string(f.method);
        e["message"] = f.message;
        j["failures"].push_back(std::move(e));
    }
    return j;
}

namespace {

void write_table(std::ostream& out, const std::vector<MethodScores>& rows, bool with_k) {
    std::vector<Method> methods;
    std::vector<std::pair<std::string, std::size_t>> keys;
    for (const MethodScores& r : rows) {
        if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) {
            methods.push_back(r.method);
        }
        const std::pair<std::string, std::size_t> key{r.scorer_id, with_k ? r.k : 0};
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
            keys.push_back(key);
        }
    }
    out << "scorer";
    if (with_k) {
        out << ",k";
    }
    for (Method m : methods) {
        out << ',' << to_string(m);
    }
    out << '\n';
    for (const auto& [scorer, k] : keys) {
        out << scorer;
        if (with_k) {
            out << ',' << k;
        }
        for (Method m : methods) {
            out << ',';
            for (const MethodScores& r : rows) {
                if (r.scorer_id == scorer && r.method == m && (!with_k || r.k == k) && r.auroc) {
                    out << number_text(*r.auroc);
                    break;
                }
            }
        }
        out << '\n';
    }
}

}  // namespace

void EvalReport::write_csv(std::ostream& out) const { write_table(out, results, false); }

void EvalReport::write_sweep_csv(std::ostream& out) const { write_table(out, sweep, true); }

namespace {

struct Column {
    Method method;
    std::size_t k;  // 0 for direct methods
};

struct Outcome {
    std::optional<ScoreCache::Entry> entry;
    std::string error;
};

std::string method_config_hash(Method method, std::size_t k, const EvalConfig& config, const SuiteInputs& inputs) {
    ordered_json j;
    j["trim_tokens"] = config.trim_tokens;
    j["approx_rank"] = config.approx_rank;
    if (method == Method::detect_code_gpt) {
        const PerturbationConfig& p = config.perturbation;
        j["alpha"] = p.alpha;
        j["beta"] = p.beta;
        j["lambda_spaces"] = p.lambda_spaces;
        j["lambda_newlines"] = p.lambda_newlines;
        j["seed"] = p.seed;
        j["unsafe_locations"] = p.unsafe_locations;
        j["k"] = k;
    } else if (uses_external_perturber(method)) {
        j["perturber"] = inputs.external_perturber ? inputs.external_perturber->id() : std::string();
        j["span_fraction"] = config.span_fraction;
        j["seed"] = config.perturbation.seed;
        j["k"] = k;
    }
    return hex64(fnv1a64(j.dump()));
}

ScoreCache::Entry entry_of(const DetectionResult& r) {
    return {r.raw_score, r.score, r.degenerate, r.k_used};
}

ScoreCache::Entry perturbation_entry(Method method, std::optional<double> statistic, std::size_t k) {
    if (!statistic) {
        return {kDegenerateScore, kDegenerateScore, true, k};
    }
    return {*statistic, orientation(method) * *statistic, false, k};
}

// Scores one sample under one scorer for every column.
class SampleEvaluator {
public:
    SampleEvaluator(const CodeSample& sample, const Scorer& scorer, const SuiteInputs& inputs,
                    const EvalConfig& config)
        : sample_(sample), scorer_(scorer), inputs_(inputs), config_(config),
          seed_(derive_seed(config.perturbation.seed, sample.id)) {}

    ScoreCache::Entry compute(const Column& column) {
        const DetectorOptions options{config_.approx_rank};
        if (!uses_perturbations(column.method)) {
            return entry_of(score_method(column.method, original(), options));
        }
        if (column.method == Method::detect_code_gpt) {
            const double base = mean_log_rank(original(), config_.approx_rank);
            if (base <= kRankDenominatorGuard) {
                return perturbation_entry(column.method, std::nullopt, column.k);
            }
            ensure_stylized(column.k);
            return perturbation_entry(column.method,
                                      normalized_perturbed_log_rank(base, prefix(stylized_log_ranks_, column.k)),
                                      column.k);
        }
        require(inputs_.external_perturber != nullptr, ErrorCode::PerturberUnavailable,
                std::string(to_string(column.method)) + " needs an external perturber endpoint");
        if (column.method == Method::npr_mlm) {
            const double base = mean_log_rank(original(), config_.approx_rank);
            if (base <= kRankDenominatorGuard) {
                return perturbation_entry(column.method, std::nullopt, column.k);
            }
            ensure_external(column.k);
            return perturbation_entry(column.method,
                                      normalized_perturbed_log_rank(base, prefix(external_log_ranks_, column.k)),
                                      column.k);
        }
        ensure_external(column.k);
        return perturbation_entry(
            column.method,
            likelihood_discrepancy(mean_log_likelihood(original()), prefix(external_ll_, column.k)), column.k);
    }

    void set_max_k(std::size_t stylized, std::size_t external) {
        max_stylized_k_ = stylized;
        max_external_k_ = external;
    }

private:
    const std::string& text() {
        if (!text_) {
            text_ = config_.trim_tokens > 0 ? trim(sample_.text, config_.trim_tokens, scorer_) : sample_.text;
        }
        return *text_;
    }

    const ScoredCode& original() {
        if (!original_) {
            original_ = scorer_.score(text());
        }
        return *original_;
    }

    static std::vector<double> prefix(const std::vector<double>& values, std::size_t k) {
        require(values.size() >= k, ErrorCode::InvalidArgument, "not enough perturbation scores");
        return {values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k)};
    }

    void ensure_stylized(std::size_t k) {
        if (stylized_log_ranks_.size() >= k) {
            return;
        }
        PerturbationConfig p = config_.perturbation;
        p.k = std::max(k, max_stylized_k_);
        p.seed = seed_;
        stylized_log_ranks_.clear();
        for (const PerturbationResult& v : perturb_set(text(), p).variants) {
            stylized_log_ranks_.push_back(mean_log_rank(scorer_.score(v.text), config_.approx_rank));
        }
    }

    void ensure_external(std::size_t k) {
        if (external_ll_.size() >= k) {
            return;
        }
        const std::size_t want = std::max(k, max_external_k_);
        const std::vector<std::string> variants = inputs_.external_perturber->perturb(text(), want, seed_);
        require(variants.size() == want, ErrorCode::ProtocolError, "external perturber returned the wrong count");
        external_ll_.clear();
        external_log_ranks_.clear();
        for (const std::string& v : variants) {
            const ScoredCode sc = scorer_.score(v);
            external_ll_.push_back(mean_log_likelihood(sc));
            external_log_ranks_.push_back(mean_log_rank(sc, config_.approx_rank));
        }
    }

    const CodeSample& sample_;
    const Scorer& scorer_;
    const SuiteInputs& inputs_;
    const EvalConfig& config_;
    std::uint64_t seed_;
    std::size_t max_stylized_k_ = 0;
    std::size_t max_external_k_ = 0;
    std::optional<std::string> text_;
    std::optional<ScoredCode> original_;
    std::vector<double> stylized_log_ranks_;
    std::vector<double> external_ll_;
    std::vector<double> external_log_ranks_;
};

template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
                fn(i);
            }
        });
    }
    for (std::thread& t : threads) {
        t.join();
    }
}

struct Aggregate {
    std::vector<std::size_t> kept;  // sample indices
    std::size_t degenerate = 0;
    std::size_t failed = 0;
};

// Drops every sample whose pair group holds a failed (or degenerate) sample.
Aggregate aggregate(const std::vector<CodeSample>& dataset, const std::vector<Outcome>& outcomes,
                    bool keep_degenerate) {
    Aggregate agg;
    std::set<std::string> dropped_groups;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const Outcome& o = outcomes[i];
        const bool failed = !o.entry.has_value();
        const bool degenerate = !failed && o.entry->degenerate;
        agg.failed += failed ? 1 : 0;
        agg.degenerate += degenerate ? 1 : 0;
        if (failed || (degenerate && !keep_degenerate)) {
            dropped_groups.insert(dataset[i].pair.value_or(dataset[i].id));
        }
    }
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        if (dropped_groups.count(dataset[i].pair.value_or(dataset[i].id)) == 0) {
            agg.kept.push_back(i);
        }
    }
    return agg;
}

MethodScores summarize(const std::vector<CodeSample>& dataset, const std::vector<Outcome>& outcomes,
                       const std::string& scorer_id, const Column& column, bool keep_degenerate) {
    MethodScores r;
    r.scorer_id = scorer_id;
    r.method = column.method;
    r.k = column.k;
    const Aggregate agg = aggregate(dataset, outcomes, keep_degenerate);
    r.degenerate_count = agg.degenerate;
    r.failed_count = agg.failed;
    std::vector<double> machine;
    std::vector<double> human;
    for (std::size_t i : agg.kept) {
        (dataset[i].label == Label::machine ? machine : human).push_back(outcomes[i].entry->score);
    }
    r.n_machine = machine.size();
    r.n_human = human.size();
    if (!machine.empty() && !human.empty()) {
        r.auroc = auroc(machine, human);
    }
    if (machine.size() >= 3 && human.size() >= 3) {
        r.separation_p = wilcoxon_rank_sum(machine, human).p_value;
    }
    return r;
}

}  // namespace

EvalReport run_suite(const std::vector<CodeSample>& dataset, const SuiteInputs& inputs, const EvalConfig& config) {
    config.perturbation.validate();
    require(!inputs.methods.empty(), ErrorCode::InvalidArgument, "no detection methods requested");
    require(!inputs.scorers.empty(), ErrorCode::InvalidArgument, "no scorers given");
    for (std::size_t k : config.sweep_k) {
        require(k >= 1, ErrorCode::InvalidArgument, "sweep values must be at least 1");
    }

    EvalReport report;
    report.config = config.echo();
    ordered_json scorer_ids = ordered_json::array();
    for (const ScorerHandle& s : inputs.scorers) {
        scorer_ids.push_back(s->id());
    }
    report.config["scorers"] = scorer_ids;
    std::vector<std::string> method_names;
    for (Method m : inputs.methods) {
        method_names.emplace_back(to_string(m));
    }
    report.config["methods"] = method_names;
    report.config_hash = hex64(fnv1a64(report.config.dump()));

    std::vector<Column> columns;
    std::size_t max_stylized = 0;
    std::size_t max_external = 0;
    for (Method m : inputs.methods) {
        if (!uses_perturbations(m)) {
            columns.push_back({m, 0});
            continue;
        }
        std::vector<std::size_t> ks = {config.perturbation.k};
        ks.insert(ks.end(), config.sweep_k.begin(), config.sweep_k.end());
        std::sort(ks.begin(), ks.end());
        ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
        for (std::size_t k : ks) {
            columns.push_back({m, k});
            (m == Method::detect_code_gpt ? max_stylized : max_external) =
                std::max(m == Method::detect_code_gpt ? max_stylized : max_external, k);
        }
    }
    std::vector<std::string> column_hashes;
    for (const Column& c : columns) {
        column_hashes.push_back(method_config_hash(c.method, c.k, config, inputs));
    }

    for (const ScorerHandle& scorer : inputs.scorers) {
        const std::string scorer_id = scorer->id();
        // outcomes[column][sample]
        std::vector<std::vector<Outcome>> outcomes(columns.size(), std::vector<Outcome>(dataset.size()));
        const std::size_t workers = std::min(config.workers, std::max<std::size_t>(1, scorer->max_in_flight()));
        parallel_for(dataset.size(), workers, [&](std::size_t i) {
            const CodeSample& sample = dataset[i];
            SampleEvaluator evaluator(sample, *scorer, inputs, config);
            evaluator.set_max_k(max_stylized, max_external);
            for (std::size_t c = 0; c < columns.size(); ++c) {
                if (inputs.cache != nullptr) {
                    if (auto hit = inputs.cache->find(sample.id, scorer_id, columns[c].method, column_hashes[c])) {
                        outcomes[c][i].entry = *hit;
                        continue;
                    }
                }
                try {
                    outcomes[c][i].entry = evaluator.compute(columns[c]);
                    if (inputs.cache != nullptr) {
                        inputs.cache->insert(sample.id, scorer_id, columns[c].method, column_hashes[c],
                                             *outcomes[c][i].entry);
                    }
                } catch (const std::exception& e) {
                    outcomes[c][i].error = e.what();
                }
            }
        });

        for (std::size_t c = 0; c < columns.size(); ++c) {
            for (std::size_t i = 0; i < dataset.size(); ++i) {
                if (!outcomes[c][i].entry) {
                    report.failures.push_back({dataset[i].id, scorer_id, columns[c].method, outcomes[c][i].error});
                }
            }
            const MethodScores summary = summarize(dataset, outcomes[c], scorer_id, columns[c], config.keep_degenerate);
            const bool primary = columns[c].k == 0 || columns[c].k == config.perturbation.k;
            const bool swept = columns[c].k != 0 &&
                               std::find(config.sweep_k.begin(), config.sweep_k.end(), columns[c].k) !=
                                   config.sweep_k.end();
            if (primary) {
                report.results.push_back(summary);
            }
            if (swept) {
                report.sweep.push_back(summary);
            }
        }

        // Pairwise method comparison over bootstrap replicates of the pairs.
        if (config.significance_repeats >= 3) {
            std::vector<std::size_t> primary_columns;
            for (std::size_t c = 0; c < columns.size(); ++c) {
                if (columns[c].k == 0 || columns[c].k == config.perturbation.k) {
                    primary_columns.push_back(c);
                }
            }
            std::vector<std::string> groups;
            std::map<std::string, std::vector<std::size_t>> members;
            for (std::size_t i = 0; i < dataset.size(); ++i) {
                const std::string g = dataset[i].pair.value_or(dataset[i].id);
                if (members.find(g) == members.end()) {
                    groups.push_back(g);
                }
                members[g].push_back(i);
            }
            std::vector<std::vector<double>> replicate_aurocs(primary_columns.size());
            std::vector<bool> usable(primary_columns.size(), true);
            for (std::size_t rep = 0; rep < config.significance_repeats; ++rep) {
                Rng rng(derive_seed(config.perturbation.seed, "bootstrap:" + std::to_string(rep)));
                std::vector<std::size_t> picks;
                for (std::size_t g = 0; g < groups.size(); ++g) {
                    picks.push_back(static_cast<std::size_t>(rng.uniform_below(groups.size())));
                }
                for (std::size_t pc = 0; pc < primary_columns.size(); ++pc) {
                    const std::vector<Outcome>& col = outcomes[primary_columns[pc]];
                    const Aggregate agg = aggregate(dataset, col, config.keep_degenerate);
                    std::vector<bool> kept(dataset.size(), false);
                    for (std::size_t i : agg.kept) {
                        kept[i] = true;
                    }
                    std::vector<double> machine;
                    std::vector<double> human;
                    for (std::size_t g : picks) {
                        for (std::size_t i : members[groups[g]]) {
                            if (kept[i]) {
                                (dataset[i].label == Label::machine ? machine : human).push_back(col[i].entry->score);
                            }
                        }
                    }
                    if (machine.empty() || human.empty()) {
                        usable[pc] = false;
                        continue;
                    }
                    replicate_aurocs[pc].push_back(auroc(machine, human));
                }
            }
            for (std::size_t a = 0; a < primary_columns.size(); ++a) {
                for (std::size_t b = a + 1; b < primary_columns.size(); ++b) {
                    if (!usable[a] || !usable[b]) {
                        continue;
                    }
                    const WilcoxonResult w = wilcoxon_rank_sum(replicate_aurocs[a], replicate_aurocs[b]);
                    report.significance.push_back({scorer_id, columns[primary_columns[a]].method,
                                                   columns[primary_columns[b]].method, w.statistic, w.p_value});
                }
            }
        }
    }
    return report;
}

}  // namespace codeprov
