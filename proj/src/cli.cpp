#include "codeprov/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "codeprov/detectors.hpp"
#include "codeprov/eval.hpp"
#include "codeprov/generator.hpp"
#include "codeprov/lexing.hpp"
#include "codeprov/perturb.hpp"
#include "codeprov/remote.hpp"
#include "codeprov/sample.hpp"
#include "codeprov/stylometry.hpp"
#include "codeprov/surrogate.hpp"

namespace codeprov {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

int exit_code_for(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::ScorerUnavailable:
        case ErrorCode::PerturberUnavailable:
        case ErrorCode::GenerationUnavailable:
            return kExitUnavailable;
        case ErrorCode::InvalidArgument:
        case ErrorCode::UnsupportedLanguage:
            return kExitUsage;
        case ErrorCode::IoError:
            return kExitNoInput;
        default:
            return kExitDataError;
    }
}

namespace {

// Option values after layering defaults < config file < environment < flags.
class Settings {
public:
    void set(const std::string& key, json value) { values_[key] = std::move(value); }
    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string str(const std::string& key, const std::string& fallback = {}) const {
        auto it = values_.find(key);
        if (it == values_.end()) {
            return fallback;
        }
        if (it->second.is_string()) {
            return it->second.get<std::string>();
        }
        if (it->second.is_array() && !it->second.empty()) {
            return text_of(it->second.back());
        }
        return text_of(it->second);
    }

    double number(const std::string& key, double fallback) const {
        if (!has(key)) {
            return fallback;
        }
        const std::string text = str(key);
        try {
            std::size_t used = 0;
            const double v = std::stod(text, &used);
            if (used == text.size() && std::isfinite(v)) {
                return v;
            }
        } catch (const std::exception&) {
        }
        fail(ErrorCode::InvalidArgument, "--" + key + " expects a number, got '" + text + "'");
    }

    std::uint64_t integer(const std::string& key, std::uint64_t fallback) const {
        if (!has(key)) {
            return fallback;
        }
        return parse_unsigned(key, str(key));
    }

    bool flag(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) {
            return false;
        }
        if (it->second.is_boolean()) {
            return it->second.get<bool>();
        }
        const std::string text = str(key);
        if (text == "true" || text == "1") {
            return true;
        }
        if (text == "false" || text == "0") {
            return false;
        }
        fail(ErrorCode::InvalidArgument, "--" + key + " expects true or false, got '" + text + "'");
    }

    // Repeated flags, JSON arrays and comma-separated values all accumulate.
    std::vector<std::string> list(const std::string& key) const {
        std::vector<std::string> out;
        auto it = values_.find(key);
        if (it == values_.end()) {
            return out;
        }
        std::vector<std::string> raw;
        if (it->second.is_array()) {
            for (const json& v : it->second) {
                raw.push_back(text_of(v));
            }
        } else {
            raw.push_back(text_of(it->second));
        }
        for (const std::string& r : raw) {
            std::stringstream ss(r);
            std::string item;
            while (std::getline(ss, item, ',')) {
                if (!item.empty()) {
                    out.push_back(item);
                }
            }
        }
        return out;
    }

    std::vector<std::size_t> integer_list(const std::string& key) const {
        std::vector<std::size_t> out;
        for (const std::string& s : list(key)) {
            out.push_back(static_cast<std::size_t>(parse_unsigned(key, s)));
        }
        return out;
    }

    ordered_json to_json() const {
        ordered_json j = ordered_json::object();
        for (const auto& [k, v] : values_) {
            j[k] = v;
        }
        return j;
    }

private:
    static std::string text_of(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

    static std::uint64_t parse_unsigned(const std::string& key, const std::string& text) {
        try {
            std::size_t used = 0;
            if (!text.empty() && text[0] != '-') {
                const std::uint64_t v = std::stoull(text, &used);
                if (used == text.size()) {
                    return v;
                }
            }
        } catch (const std::exception&) {
        }
        fail(ErrorCode::InvalidArgument, "--" + key + " expects a non-negative integer, got '" + text + "'");
    }

    std::map<std::string, json> values_;
};

std::string normalize_key(std::string key) {
    std::replace(key.begin(), key.end(), '_', '-');
    while (!key.empty() && key.front() == '-') {
        key.erase(key.begin());
    }
    return key;
}

std::string long_name(const CLI::Option* opt) {
    for (const std::string& n : opt->get_lnames()) {
        return n;
    }
    return {};
}

struct Context {
    CliIo io;
    Settings settings;
};

std::optional<std::string> lookup_env(const CliIo& io, const std::string& name) {
    if (io.env) {
        return io.env(name);
    }
    if (const char* v = std::getenv(name.c_str())) {
        return std::string(v);
    }
    return std::nullopt;
}

void layer_settings(Context& ctx, CLI::App& root, CLI::App& sub) {
    std::set<std::string> known;
    for (CLI::App* app : root.get_subcommands({})) {
        for (const CLI::Option* opt : app->get_options()) {
            known.insert(long_name(opt));
        }
    }
    auto sub_has = [&](const std::string& key) { return sub.get_option_no_throw("--" + key) != nullptr; };

    if (const CLI::Option* config = sub.get_option_no_throw("--config"); config && config->count() > 0) {
        const std::string path = config->results().back();
        std::ifstream in(path, std::ios::binary);
        require(in.good(), ErrorCode::IoError, "cannot read config file " + path);
        json doc;
        try {
            doc = json::parse(in);
        } catch (const json::exception& e) {
            fail(ErrorCode::InvalidArgument, "config file " + path + " is not valid JSON: " + e.what());
        }
        require(doc.is_object(), ErrorCode::InvalidArgument, "config file must hold one JSON object");
        for (const auto& [raw_key, value] : doc.items()) {
            const std::string key = normalize_key(raw_key);
            require(known.count(key) != 0 && key != "config", ErrorCode::InvalidArgument,
                    "unknown config key '" + raw_key + "'");
            if (sub_has(key)) {
                ctx.settings.set(key, value);
            }
        }
    }
    if (sub_has("scorer")) {
        if (auto url = lookup_env(ctx.io, "CODEPROV_SCORER_URL"); url && !url->empty()) {
            ctx.settings.set("scorer", json::array({*url}));
        }
    }
    if (sub_has("timeout-ms")) {
        if (auto ms = lookup_env(ctx.io, "CODEPROV_SCORER_TIMEOUT_MS"); ms && !ms->empty()) {
            ctx.settings.set("timeout-ms", *ms);
        }
    }
    for (const CLI::Option* opt : sub.get_options()) {
        const std::string key = long_name(opt);
        if (key.empty() || key == "help" || opt->count() == 0) {
            continue;
        }
        if (opt->get_expected_min() == 0) {
            ctx.settings.set(key, true);
        } else if (opt->get_multi_option_policy() == CLI::MultiOptionPolicy::TakeAll) {
            ctx.settings.set(key, opt->results());
        } else {
            ctx.settings.set(key, opt->results().back());
        }
    }
}

// Seed from --seed, or drawn from system entropy and reported.
std::uint64_t resolve_seed(Context& ctx) {
    if (ctx.settings.has("seed")) {
        return ctx.settings.integer("seed", 0);
    }
    std::random_device rd;
    const std::uint64_t seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    ctx.settings.set("seed", std::to_string(seed));
    ctx.io.err << "seed: " << seed << '\n';
    return seed;
}

PerturbationConfig perturbation_config(Context& ctx) {
    PerturbationConfig p;
    const Settings& s = ctx.settings;
    p.k = static_cast<std::size_t>(s.integer("k", p.k));
    p.alpha = s.number("alpha", p.alpha);
    p.beta = s.number("beta", p.beta);
    p.lambda_spaces = s.number("lambda-spaces", p.lambda_spaces);
    p.lambda_newlines = s.number("lambda-newlines", p.lambda_newlines);
    p.unsafe_locations = s.flag("unsafe-locations");
    p.seed = resolve_seed(ctx);
    p.validate();
    return p;
}

HttpSettings http_settings(const Context& ctx, std::size_t max_in_flight) {
    HttpSettings http;
    http.timeout_ms = static_cast<int>(ctx.settings.integer("timeout-ms", static_cast<std::uint64_t>(http.timeout_ms)));
    http.retries = static_cast<int>(ctx.settings.integer("retries", static_cast<std::uint64_t>(http.retries)));
    http.max_in_flight = std::max<std::size_t>(1, max_in_flight);
    require(http.timeout_ms > 0, ErrorCode::InvalidArgument, "--timeout-ms must be positive");
    return http;
}

std::vector<ScorerHandle> open_scorers(const Context& ctx, std::size_t workers) {
    const std::vector<std::string> specs = ctx.settings.list("scorer");
    require(!specs.empty(), ErrorCode::InvalidArgument,
            "no scorer given; pass --scorer URL|surrogate:PATH or set CODEPROV_SCORER_URL");
    std::vector<ScorerHandle> scorers;
    for (const std::string& spec : specs) {
        scorers.push_back(open_scorer(spec, http_settings(ctx, workers)));
    }
    return scorers;
}

std::vector<Method> methods_of(const Context& ctx, const std::string& fallback) {
    std::vector<std::string> names = ctx.settings.list("method");
    if (names.empty() && !fallback.empty()) {
        names.push_back(fallback);
    }
    require(!names.empty(), ErrorCode::InvalidArgument, "no detection method given");
    std::vector<Method> methods;
    for (const std::string& n : names) {
        const Method m = parse_method(n);
        if (std::find(methods.begin(), methods.end(), m) == methods.end()) {
            methods.push_back(m);
        }
    }
    return methods;
}

std::string format_of(const Context& ctx) {
    const std::string f = ctx.settings.str("format", "json");
    require(f == "json" || f == "csv", ErrorCode::InvalidArgument, "--format must be json or csv");
    return f;
}

double median(std::vector<double> v) {
    require(!v.empty(), ErrorCode::EmptyScores, "calibration file holds no scores");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

// One score per line: a bare number or a JSON object with a "score" field.
std::vector<double> read_calibration(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCode::IoError, "cannot read calibration file " + path);
    std::vector<double> scores;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (is_blank(line)) {
            continue;
        }
        try {
            const json j = json::parse(line);
            if (j.is_number()) {
                scores.push_back(j.get<double>());
            } else if (j.is_object() && j.contains("score") && j["score"].is_number()) {
                scores.push_back(j["score"].get<double>());
            } else {
                fail(ErrorCode::InvalidFormat, "line " + std::to_string(n) + " of " + path + " holds no score");
            }
        } catch (const json::exception&) {
            fail(ErrorCode::InvalidFormat, "line " + std::to_string(n) + " of " + path + " is not a number or JSON");
        }
    }
    return scores;
}

std::optional<double> resolve_epsilon(const Context& ctx) {
    if (!ctx.settings.has("epsilon")) {
        return std::nullopt;
    }
    const std::string e = ctx.settings.str("epsilon");
    if (e == "auto") {
        require(ctx.settings.has("calibration"), ErrorCode::InvalidArgument,
                "--epsilon auto needs --calibration FILE");
        return median(read_calibration(ctx.settings.str("calibration")));
    }
    return ctx.settings.number("epsilon", 0.0);
}

template <typename Fn>
void parallel_indices(std::size_t n, std::size_t workers, Fn&& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, n));
    std::atomic<std::size_t> next{0};
    auto loop = [&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
            fn(i);
        }
    };
    if (workers == 1) {
        loop();
        return;
    }
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back(loop);
    }
    for (std::thread& t : threads) {
        t.join();
    }
}

std::string read_input(Context& ctx, const std::string& path) {
    if (path == "-") {
        std::ostringstream ss;
        ss << ctx.io.in.rdbuf();
        return ss.str();
    }
    return read_file(path);
}

std::size_t workers_of(const Context& ctx) {
    const auto w = static_cast<std::size_t>(ctx.settings.integer("workers", 1));
    require(w >= 1, ErrorCode::InvalidArgument, "--workers must be at least 1");
    return w;
}

int cmd_detect(Context& ctx, const std::vector<std::string>& inputs_arg) {
    const std::vector<Method> methods = methods_of(ctx, "detect-code-gpt");
    const std::size_t workers = workers_of(ctx);
    const PerturbationConfig config = perturbation_config(ctx);
    const std::optional<double> epsilon = resolve_epsilon(ctx);
    const auto trim_tokens = static_cast<std::size_t>(ctx.settings.integer("trim-tokens", 128));
    const DetectorOptions options{ctx.settings.flag("approx-rank")};
    PerturberHandle external;
    for (Method m : methods) {
        if (uses_external_perturber(m)) {
            require(ctx.settings.has("perturber"), ErrorCode::InvalidArgument,
                    std::string(to_string(m)) + " needs --perturber URL");
        }
    }
    const ScorerHandle scorer = open_scorers(ctx, workers).front();
    if (ctx.settings.has("perturber")) {
        HttpSettings http = http_settings(ctx, workers);
        http.url = ctx.settings.str("perturber");
        external = std::make_shared<ExternalPerturber>(http, ctx.settings.number("span-fraction", 0.15));
    }
    const std::vector<std::string> inputs = inputs_arg.empty() ? std::vector<std::string>{"-"} : inputs_arg;

    struct Row {
        std::vector<std::string> lines;
        std::string error;
        std::optional<ErrorCode> code;
    };
    std::vector<Row> rows(inputs.size());
    parallel_indices(inputs.size(), workers, [&](std::size_t i) {
        Row& row = rows[i];
        try {
            std::string text = read_input(ctx, inputs[i]);
            require(is_valid_utf8(text), ErrorCode::InvalidEncoding, "input is not valid UTF-8");
            require(!text.empty(), ErrorCode::EmptyCode, "input is empty");
            if (trim_tokens > 0) {
                text = trim(text, trim_tokens, *scorer);
            }
            std::optional<ScoredCode> scored;
            for (Method m : methods) {
                DetectionResult r;
                if (m == Method::detect_code_gpt) {
                    r = detect_code_gpt(text, *scorer, config, std::nullopt, options);
                } else if (m == Method::detectgpt) {
                    r = score_detectgpt(text, *scorer, *external, config.k, config.seed);
                } else if (m == Method::npr_mlm) {
                    r = score_npr(text, *scorer, *external, config.k, config.seed, options);
                } else {
                    if (!scored) {
                        scored = scorer->score(text);
                    }
                    r = score_method(m, *scored, options);
                }
                if (epsilon) {
                    apply_threshold(r, *epsilon);
                }
                ordered_json j;
                j["input"] = inputs[i];
                j["method"] = to_string(m);
                j["score"] = r.score;
                j["raw_score"] = r.raw_score;
                if (r.k_used > 0) {
                    j["k"] = r.k_used;
                }
                if (r.degenerate) {
                    j["degenerate"] = true;
                }
                if (r.verdict) {
                    j["verdict"] = *r.verdict ? "machine" : "human";
                }
                row.lines.push_back(j.dump());
            }
        } catch (const Error& e) {
            row.error = e.what();
            row.code = e.code();
        } catch (const std::exception& e) {
            row.error = e.what();
            row.code = ErrorCode::InvalidFormat;
        }
    });

    int status = kExitOk;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (const std::string& line : rows[i].lines) {
            ctx.io.out << line << '\n';
        }
        if (rows[i].code) {
            ctx.io.err << inputs[i] << ": " << rows[i].error << '\n';
            if (exit_code_for(*rows[i].code) == kExitUnavailable) {
                status = kExitUnavailable;
            } else if (status == kExitOk) {
                status = kExitInputError;
            }
        }
    }
    return status;
}

int cmd_perturb(Context& ctx, const std::string& input) {
    const PerturbationConfig config = perturbation_config(ctx);
    const std::string text = read_input(ctx, input.empty() ? "-" : input);
    require(is_valid_utf8(text), ErrorCode::InvalidEncoding, "input is not valid UTF-8");
    const PerturbedSet set = perturb_set(text, config);
    for (std::size_t i = 0; i < set.variants.size(); ++i) {
        ordered_json j;
        j["variant_index"] = i;
        j["type"] = to_string(set.variants[i].type);
        j["text"] = set.variants[i].text;
        ctx.io.out << j.dump() << '\n';
    }
    return kExitOk;
}

int cmd_lex(Context& ctx, const std::string& input) {
    const std::string text = read_input(ctx, input.empty() ? "-" : input);
    write_tsv(ctx.io.out, lex(text));
    return kExitOk;
}

ordered_json corpus_summary(const Corpus& corpus) {
    ordered_json j;
    j["name"] = corpus.name;
    std::vector<std::string> warnings;
    const std::vector<const CodeSample*> usable = usable_samples(corpus, &warnings);
    j["samples"] = corpus.samples.size();
    j["usable_samples"] = usable.size();

    std::array<std::size_t, kCategoryCount> counts{};
    for (const CodeSample* s : usable) {
        const auto c = category_counts(lex(s->text));
        for (std::size_t i = 0; i < kCategoryCount; ++i) {
            counts[i] += c[i];
        }
    }
    std::size_t total = 0;
    for (std::size_t c : counts) {
        total += c;
    }
    ordered_json proportions;
    for (Category c : kAllCategories) {
        proportions[std::string(to_string(c))] =
            total == 0 ? 0.0 : static_cast<double>(counts[index_of(c)]) / static_cast<double>(total);
    }
    j["category_proportions"] = proportions;

    try {
        const ZipfFit z = fit_zipf(corpus);
        j["zipf"] = {{"alpha", z.zipf_alpha}, {"r_squared", z.r_squared}, {"ranks_used", z.ranks_used}};
    } catch (const Error& e) {
        j["zipf"] = nullptr;
        warnings.push_back(std::string("zipf fit skipped: ") + e.what());
    }
    try {
        const HeapsFit h = fit_heaps(corpus);
        j["heaps"] = {{"beta", h.heaps_beta}, {"coefficient", h.coefficient}, {"r_squared", h.r_squared}};
    } catch (const Error& e) {
        j["heaps"] = nullptr;
        warnings.push_back(std::string("heaps fit skipped: ") + e.what());
    }
    const LengthStats lengths = length_stats(corpus);
    j["lengths"] = {{"mean_tokens", lengths.mean_tokens},
                    {"median_tokens", lengths.median_tokens},
                    {"mean_lines", lengths.mean_lines},
                    {"median_lines", lengths.median_lines}};
    ordered_json top = ordered_json::array();
    for (const TokenCount& t : token_frequency(corpus, 20)) {
        top.push_back({{"token", t.text}, {"count", t.count}});
    }
    j["top_tokens"] = top;
    j["warnings"] = warnings;
    return j;
}

void write_proportions_csv(std::ostream& out, const std::vector<ordered_json>& summaries) {
    out << "category";
    for (const ordered_json& s : summaries) {
        out << ',' << s["name"].get<std::string>();
    }
    out << '\n';
    for (Category c : kAllCategories) {
        out << to_string(c);
        for (const ordered_json& s : summaries) {
            out << ',' << s["category_proportions"][std::string(to_string(c))].dump();
        }
        out << '\n';
    }
}

void write_naturalness_csv(std::ostream& out, const CategoryNaturalness& n) {
    out << "category,ll,log_rank,tokens\n";
    auto row = [&](std::string_view name, const NaturalnessRow& r) {
        out << name << ',' << json(r.mean_log_likelihood).dump() << ',' << json(r.mean_log_rank).dump() << ','
            << r.token_count << '\n';
    };
    for (Category c : kAllCategories) {
        row(to_string(c), n.row(c));
    }
    row("ALL", n.all);
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorCode::IoError, "cannot write " + path.string());
    return out;
}

int cmd_analyze(Context& ctx, const std::vector<std::string>& paths) {
    const std::string format = format_of(ctx);
    std::vector<Corpus> corpora;
    if (ctx.settings.flag("by-label")) {
        require(paths.size() == 1, ErrorCode::InvalidArgument, "--by-label takes exactly one dataset");
        const DatasetReadResult data = read_dataset(fs::path(paths[0]));
        Corpus machine{"machine", {}};
        Corpus human{"human", {}};
        for (const CodeSample& s : data.samples) {
            (s.label == Label::machine ? machine : human).samples.push_back(s);
        }
        corpora.push_back(std::move(machine));
        corpora.push_back(std::move(human));
    } else {
        require(paths.size() == 1 || paths.size() == 2, ErrorCode::InvalidArgument, "analyze takes 1 or 2 corpora");
        for (const std::string& p : paths) {
            corpora.push_back(load_corpus(p));
        }
    }
    const fs::path out_dir = ctx.settings.str("out-dir", "analysis");
    fs::create_directories(out_dir);

    ordered_json report;
    report["config"] = ctx.settings.to_json();
    std::vector<ordered_json> summaries;
    for (const Corpus& c : corpora) {
        summaries.push_back(corpus_summary(c));
    }
    report["corpora"] = summaries;
    if (corpora.size() == 2) {
        const ChiSquareResult chi = compare_category_distributions(corpora[0], corpora[1]);
        report["chi_square"] = {{"statistic", chi.statistic}, {"p_value", chi.p_value}, {"dof", chi.dof}};
    }
    {
        std::ofstream csv = open_output(out_dir / "category_proportions.csv");
        write_proportions_csv(csv, summaries);
    }
    if (!ctx.settings.list("scorer").empty()) {
        const ScorerHandle scorer = open_scorers(ctx, workers_of(ctx)).front();
        const bool approx = ctx.settings.flag("approx-rank");
        std::vector<CategoryNaturalness> nat;
        for (const Corpus& c : corpora) {
            nat.push_back(category_naturalness(c, *scorer, approx));
        }
        if (nat.size() == 2) {
            std::ofstream csv = open_output(out_dir / "naturalness_comparison.csv");
            write_naturalness_comparison_csv(csv, nat[0], nat[1]);
        } else {
            std::ofstream csv = open_output(out_dir / "naturalness.csv");
            write_naturalness_csv(csv, nat[0]);
        }
        report["scorer"] = scorer->id();
    }
    {
        std::ofstream js = open_output(out_dir / "summary.json");
        js << report.dump(2) << '\n';
    }
    if (format == "json") {
        ctx.io.out << report.dump(2) << '\n';
    } else {
        write_proportions_csv(ctx.io.out, summaries);
    }
    return kExitOk;
}

int cmd_evaluate(Context& ctx, const std::string& dataset_path) {
    const std::string format = format_of(ctx);
    const std::vector<Method> methods = methods_of(ctx, "");
    const std::size_t workers = workers_of(ctx);
    EvalConfig config;
    config.perturbation = perturbation_config(ctx);
    config.trim_tokens = static_cast<std::size_t>(ctx.settings.integer("trim-tokens", 128));
    config.approx_rank = ctx.settings.flag("approx-rank");
    config.keep_degenerate = ctx.settings.flag("keep-degenerate");
    config.sweep_k = ctx.settings.integer_list("sweep-k");
    config.workers = workers;
    config.span_fraction = ctx.settings.number("span-fraction", config.span_fraction);
    config.significance_repeats =
        static_cast<std::size_t>(ctx.settings.integer("significance-repeats", config.significance_repeats));
    for (std::size_t k : config.sweep_k) {
        require(k >= 1, ErrorCode::InvalidArgument, "--sweep-k values must be at least 1");
    }
    SuiteInputs inputs;
    inputs.methods = methods;
    for (Method m : methods) {
        if (uses_external_perturber(m)) {
            require(ctx.settings.has("perturber"), ErrorCode::InvalidArgument,
                    std::string(to_string(m)) + " needs --perturber URL");
        }
    }
    inputs.scorers = open_scorers(ctx, workers);
    if (ctx.settings.has("perturber")) {
        HttpSettings http = http_settings(ctx, workers);
        http.url = ctx.settings.str("perturber");
        inputs.external_perturber = std::make_shared<ExternalPerturber>(http, config.span_fraction);
    }

    require(fs::exists(dataset_path), ErrorCode::IoError, "dataset " + dataset_path + " does not exist");
    const DatasetReadResult data = read_dataset(fs::path(dataset_path));
    for (const DatasetIssue& issue : data.issues) {
        ctx.io.err << dataset_path << ":" << issue.line << ": " << issue.message << '\n';
    }
    if (data.issues.size() * 100 > data.lines_read) {
        ctx.io.err << data.issues.size() << " of " << data.lines_read << " lines malformed (limit 1%)\n";
        return kExitDataError;
    }
    require(!data.samples.empty(), ErrorCode::EmptyCorpus, "dataset " + dataset_path + " holds no samples");
    std::size_t n_machine = 0;
    for (const CodeSample& s : data.samples) {
        n_machine += s.label == Label::machine ? 1 : 0;
    }
    if (n_machine * 2 != data.samples.size()) {
        ctx.io.err << "warning: unbalanced dataset (" << n_machine << " machine, " << data.samples.size() - n_machine
                   << " human)\n";
    }

    std::optional<ScoreCache> cache;
    if (!ctx.settings.flag("no-cache")) {
        const std::string cache_path = ctx.settings.str("cache", dataset_path + ".scores.jsonl");
        cache.emplace(fs::path(cache_path));
        inputs.cache = &*cache;
    }

    const EvalReport report = run_suite(data.samples, inputs, config);
    const std::string prefix = ctx.settings.str("out", "report");
    {
        std::ofstream js = open_output(prefix + ".json");
        js << report.to_json().dump(2) << '\n';
    }
    {
        std::ofstream csv = open_output(prefix + ".csv");
        report.write_csv(csv);
    }
    if (!config.sweep_k.empty()) {
        std::ofstream csv = open_output(prefix + "_sweep.csv");
        report.write_sweep_csv(csv);
    }
    if (format == "json") {
        ctx.io.out << report.to_json().dump(2) << '\n';
    } else {
        report.write_csv(ctx.io.out);
    }
    if (!report.failures.empty()) {
        ctx.io.err << report.failures.size() << " per-sample failures recorded in the report\n";
    }
    return kExitOk;
}

// Functions of each source file, or the human samples of a JSONL dataset.
Corpus human_functions(const fs::path& path) {
    Corpus loaded = load_corpus(path);
    if (path.extension() == ".jsonl") {
        Corpus human{loaded.name, {}};
        for (CodeSample& s : loaded.samples) {
            if (s.label == Label::human) {
                human.samples.push_back(std::move(s));
            }
        }
        return human;
    }
    Corpus out{loaded.name, {}};
    for (const CodeSample& file : loaded.samples) {
        if (!is_valid_utf8(file.text)) {
            continue;
        }
        const std::vector<std::string> functions = extract_functions(file.text);
        for (std::size_t i = 0; i < functions.size(); ++i) {
            CodeSample s;
            s.id = file.id + "#" + std::to_string(i);
            s.text = functions[i];
            out.samples.push_back(std::move(s));
        }
    }
    return out;
}

int cmd_build_benchmark(Context& ctx) {
    BenchmarkParams params;
    params.n_pairs = static_cast<std::size_t>(ctx.settings.integer("n-pairs", params.n_pairs));
    params.temperature = ctx.settings.number("temperature", params.temperature);
    params.top_p = ctx.settings.number("top-p", params.top_p);
    params.max_tokens = static_cast<std::size_t>(ctx.settings.integer("max-tokens", params.max_tokens));
    params.seed = resolve_seed(ctx);
    require(params.temperature > 0.0, ErrorCode::InvalidArgument, "--temperature must be positive");
    require(params.top_p > 0.0 && params.top_p <= 1.0, ErrorCode::InvalidArgument, "--top-p must be in (0, 1]");
    require(params.max_tokens >= 1, ErrorCode::InvalidArgument, "--max-tokens must be at least 1");
    const std::string corpus_path = ctx.settings.str("corpus");
    const std::string generator_spec = ctx.settings.str("generator");
    const std::string out_path = ctx.settings.str("out");
    require(!corpus_path.empty() && !generator_spec.empty() && !out_path.empty(), ErrorCode::InvalidArgument,
            "build-benchmark needs --corpus, --generator and --out");

    GeneratorHandle generator;
    ScorerHandle trim_scorer;
    constexpr std::string_view kSurrogate = "surrogate:";
    if (generator_spec.rfind(kSurrogate, 0) == 0) {
        auto model = std::make_shared<const SurrogateModel>(
            SurrogateModel::load(fs::path(generator_spec.substr(kSurrogate.size()))));
        generator = std::make_shared<SurrogateGenerator>(model);
        trim_scorer = std::make_shared<SurrogateScorer>(model);
    } else {
        HttpSettings http = http_settings(ctx, 1);
        http.url = generator_spec;
        generator = std::make_shared<RemoteGenerator>(http);
    }
    if (!ctx.settings.list("scorer").empty()) {
        trim_scorer = open_scorers(ctx, 1).front();
    }
    require(trim_scorer != nullptr, ErrorCode::InvalidArgument, "a remote generator needs --scorer for trimming");

    const Corpus human = human_functions(corpus_path);
    const std::vector<CodeSample> dataset = build_benchmark(human, *generator, *trim_scorer, params);
    write_dataset(fs::path(out_path), dataset);
    ordered_json summary;
    summary["out"] = out_path;
    summary["pairs"] = dataset.size() / 2;
    summary["generator"] = generator->id();
    summary["config"] = ctx.settings.to_json();
    ctx.io.out << summary.dump() << '\n';
    return kExitOk;
}

int cmd_train_surrogate(Context& ctx) {
    const std::vector<std::string> paths = ctx.settings.list("corpus");
    const std::string out_path = ctx.settings.str("out");
    require(!paths.empty() && !out_path.empty(), ErrorCode::InvalidArgument, "train-surrogate needs --corpus and --out");
    const auto order = static_cast<std::size_t>(ctx.settings.integer("order", 5));
    const double smoothing = ctx.settings.number("smoothing", 0.5);
    Corpus corpus{"training", {}};
    for (const std::string& p : paths) {
        Corpus c = load_corpus(p);
        for (CodeSample& s : c.samples) {
            corpus.samples.push_back(std::move(s));
        }
    }
    const SurrogateModel model = SurrogateModel::train(corpus, order, smoothing);
    model.save(fs::path(out_path));
    ordered_json summary;
    summary["out"] = out_path;
    summary["id"] = model.id();
    summary["contexts"] = model.context_count();
    summary["files"] = corpus.samples.size();
    ctx.io.out << summary.dump() << '\n';
    return kExitOk;
}

void add_perturbation_flags(CLI::App* cmd) {
    cmd->add_option("--k", "number of perturbations (default 50)");
    cmd->add_option("--alpha", "fraction of space locations perturbed (default 0.5)");
    cmd->add_option("--beta", "fraction of lines perturbed (default 0.5)");
    cmd->add_option("--lambda-spaces", "Poisson mean of inserted spaces (default 3)");
    cmd->add_option("--lambda-newlines", "Poisson mean of inserted newlines (default 2)");
    cmd->add_flag("--unsafe-locations", "insert spaces at every character boundary");
}

void add_scoring_flags(CLI::App* cmd, bool multi_scorer) {
    auto* scorer = cmd->add_option("--scorer", "scoring backend: http URL or surrogate:PATH");
    if (multi_scorer) {
        scorer->take_all();
    }
    cmd->add_option("--timeout-ms", "HTTP timeout per request (default 30000)");
    cmd->add_option("--retries", "extra HTTP attempts after a transport failure (default 3)");
    cmd->add_flag("--approx-rank", "accept rank lower bounds from the scorer");
}

void add_common_flags(CLI::App* cmd) {
    cmd->add_option("--seed", "root random seed (drawn and printed when absent)");
    cmd->add_option("--config", "JSON config file with keys mirroring the flags");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, CliIo io) {
    CLI::App app{"Zero-shot detection of machine-generated code", "codeprov"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "print help for every subcommand");

    std::vector<std::string> detect_inputs;
    auto* detect = app.add_subcommand("detect", "score code files (or stdin) with one or more detectors");
    detect->add_option("inputs", detect_inputs, "files to score; '-' or none reads stdin");
    detect->add_option("--method", "detector (default detect-code-gpt); repeatable")->take_all();
    add_scoring_flags(detect, false);
    add_perturbation_flags(detect);
    add_common_flags(detect);
    detect->add_option("--epsilon", "threshold: a number, or 'auto' for the calibration median");
    detect->add_option("--calibration", "scores for --epsilon auto: numbers or JSON lines with a score field");
    detect->add_option("--workers", "inputs scored concurrently (default 1)");
    detect->add_option("--trim-tokens", "score only the first N scorer tokens; 0 disables (default 128)");
    detect->add_option("--perturber", "external perturber endpoint for detectgpt and npr-mlm");
    detect->add_option("--span-fraction", "span fraction sent to the external perturber (default 0.15)");

    std::string perturb_input;
    auto* perturb = app.add_subcommand("perturb", "emit stylized variants of one file as JSON lines");
    perturb->add_option("input", perturb_input, "file to perturb; '-' or none reads stdin");
    add_perturbation_flags(perturb);
    add_common_flags(perturb);

    std::vector<std::string> analyze_inputs;
    auto* analyze = app.add_subcommand("analyze", "stylometry of one corpus, or a comparison of two");
    analyze->add_option("corpora", analyze_inputs, "one or two corpora (directory, source file or JSONL)")
        ->required();
    add_scoring_flags(analyze, false);
    add_common_flags(analyze);
    analyze->add_flag("--by-label", "split a single JSONL dataset into machine and human corpora");
    analyze->add_option("--out-dir", "output directory (default analysis)");
    analyze->add_option("--format", "stdout format: json or csv (default json)");
    analyze->add_option("--workers", "concurrent scorer requests (default 1)");

    std::string dataset_path;
    auto* evaluate = app.add_subcommand("evaluate", "AUROC of each method under each scorer on a dataset");
    evaluate->add_option("dataset", dataset_path, "JSONL dataset")->required();
    evaluate->add_option("--method", "detector; repeatable or comma separated")->take_all();
    add_scoring_flags(evaluate, true);
    add_perturbation_flags(evaluate);
    add_common_flags(evaluate);
    evaluate->add_option("--workers", "samples scored concurrently (default 1)");
    evaluate->add_option("--trim-tokens", "score only the first N scorer tokens; 0 disables (default 128)");
    evaluate->add_option("--sweep-k", "comma separated perturbation counts for the k sweep");
    evaluate->add_flag("--keep-degenerate", "keep samples with degenerate scores");
    evaluate->add_option("--format", "stdout format: json or csv (default json)");
    evaluate->add_option("--out", "output prefix for .json/.csv files (default report)");
    evaluate->add_option("--cache", "score cache path (default DATASET.scores.jsonl)");
    evaluate->add_flag("--no-cache", "do not read or write the score cache");
    evaluate->add_option("--perturber", "external perturber endpoint for detectgpt and npr-mlm");
    evaluate->add_option("--span-fraction", "span fraction sent to the external perturber (default 0.15)");
    evaluate->add_option("--significance-repeats", "bootstrap replicates for method comparison (default 10)");

    auto* build = app.add_subcommand("build-benchmark", "pair human functions with generated continuations");
    build->add_option("--corpus", "human corpus: directory, source file or JSONL");
    build->add_option("--generator", "surrogate:PATH or generation endpoint URL");
    build->add_option("--scorer", "scorer used for trimming (default: the surrogate generator)");
    build->add_option("--timeout-ms", "HTTP timeout per request (default 30000)");
    build->add_option("--retries", "extra HTTP attempts after a transport failure (default 3)");
    build->add_option("--n-pairs", "number of pairs (default 500)");
    build->add_option("--temperature", "sampling temperature (default 0.2)");
    build->add_option("--top-p", "nucleus mass (default 0.95)");
    build->add_option("--max-tokens", "generation budget and trim length (default 128)");
    build->add_option("--out", "output JSONL dataset");
    add_common_flags(build);

    auto* train = app.add_subcommand("train-surrogate", "train the byte n-gram surrogate model");
    train->add_option("--corpus", "training corpus; repeatable")->take_all();
    train->add_option("--order", "n-gram order, 1 to 8 (default 5)");
    train->add_option("--smoothing", "add-s smoothing constant (default 0.5)");
    train->add_option("--out", "model output path");
    train->add_option("--config", "JSON config file with keys mirroring the flags");

    std::string lex_input;
    auto* lex_cmd = app.add_subcommand("lex", "print lexer spans as TSV");
    lex_cmd->add_option("input", lex_input, "file to lex; '-' or none reads stdin");

    std::vector<std::string> argv_store = {"codeprov"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const std::string& a : argv_store) {
        argv.push_back(a.c_str());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, io.out, io.err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    Context ctx{io, {}};
    try {
        CLI::App* sub = app.get_subcommands().front();
        layer_settings(ctx, app, *sub);
        if (sub == detect) {
            return cmd_detect(ctx, detect_inputs);
        }
        if (sub == perturb) {
            return cmd_perturb(ctx, perturb_input);
        }
        if (sub == analyze) {
            return cmd_analyze(ctx, analyze_inputs);
        }
        if (sub == evaluate) {
            return cmd_evaluate(ctx, dataset_path);
        }
        if (sub == build) {
            return cmd_build_benchmark(ctx);
        }
        if (sub == train) {
            return cmd_train_surrogate(ctx);
        }
        return cmd_lex(ctx, lex_input);
    } catch (const Error& e) {
        io.err << "error: " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        io.err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

}  // namespace codeprov
