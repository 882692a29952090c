#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "codeprov/error.hpp"
#include "codeprov/eval.hpp"
#include "codeprov/surrogate.hpp"
#include "support.hpp"

using namespace codeprov;

namespace {

double brute_auroc(const std::vector<double>& m, const std::vector<double>& h) {
    double credit = 0.0;
    for (double a : m) {
        for (double b : h) {
            credit += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
        }
    }
    return credit / static_cast<double>(m.size() * h.size());
}

std::vector<CodeSample> paired(const std::vector<std::pair<std::string, std::string>>& pairs) {
    std::vector<CodeSample> out;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const std::string pair = "p" + std::to_string(i);
        CodeSample h;
        h.id = pair + "-human";
        h.text = pairs[i].first;
        h.pair = pair;
        CodeSample m = h;
        m.id = pair + "-machine";
        m.text = pairs[i].second;
        m.label = Label::machine;
        out.push_back(h);
        out.push_back(m);
    }
    return out;
}

std::vector<CodeSample> mock_dataset() {
    return paired({{"def f(x):\n    return x * 2\n", "def f(x):\n    return x+x\n"},
                   {"class A:\n    pass\n", "class A: pass\n"},
                   {"import os\nprint(os.sep)\n", "import os\nprint(os.name)\n"},
                   {"for i in range(9):\n    go(i)\n", "for j in range(3): go(j)\n"},
                   {"while True:\n    break\n", "while 1:\n    break\n"},
                   {"y = [a for a in b]\n", "y = list(b)\n"}});
}

std::vector<CodeSample> flipped(std::vector<CodeSample> data) {
    for (CodeSample& s : data) {
        s.label = s.label == Label::human ? Label::machine : Label::human;
    }
    return data;
}

}  // namespace

TEST_CASE("auroc examples") {
    CHECK(auroc({0.9, 0.8}, {0.2, 0.1}) == 1.0);
    CHECK(auroc({0.9, 0.3}, {0.5, 0.1}) == 0.75);
    CHECK(auroc({0.4, 0.6, 0.1}, {0.4, 0.6, 0.1}) == 0.5);
    CHECK_THROWS_AS(auroc({}, {1.0}), Error);
    CHECK_THROWS_AS(auroc({1.0}, {}), Error);
}

TEST_CASE("auroc equals brute-force pair counting") {
    Rng rng(1);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<double> m(1 + rng.uniform_below(8));
        std::vector<double> h(1 + rng.uniform_below(8));
        for (double& x : m) {
            x = static_cast<double>(rng.uniform_below(6));
        }
        for (double& x : h) {
            x = static_cast<double>(rng.uniform_below(6));
        }
        const MannWhitneyCounts c = mann_whitney_counts(m, h);
        std::uint64_t greater = 0;
        std::uint64_t ties = 0;
        for (double a : m) {
            for (double b : h) {
                greater += a > b ? 1 : 0;
                ties += a == b ? 1 : 0;
            }
        }
        CHECK(c.greater == greater);
        CHECK(c.ties == ties);
        CHECK(std::abs(auroc(m, h) - brute_auroc(m, h)) < 1e-15);
        CHECK(auroc(m, h) + auroc(h, m) == 1.0);
        // Strictly increasing transform.
        std::vector<double> em;
        std::vector<double> eh;
        for (double x : m) {
            em.push_back(std::exp(x) * 3.0 - 7.0);
        }
        for (double x : h) {
            eh.push_back(std::exp(x) * 3.0 - 7.0);
        }
        CHECK(auroc(em, eh) == auroc(m, h));
    }
}

TEST_CASE("wilcoxon rank-sum") {
    std::vector<double> a;
    std::vector<double> b;
    for (int i = 1; i <= 20; ++i) {
        a.push_back(i);
        b.push_back(100 + i);
    }
    const WilcoxonResult r = wilcoxon_rank_sum(a, b);
    // Rank sum 210, mean 410, variance 20 * 20 * 41 / 12.
    const double z = (210.0 - 410.0) / std::sqrt(20.0 * 20.0 * 41.0 / 12.0);
    CHECK(r.rank_sum == 210.0);
    CHECK(r.statistic == doctest::Approx(z));
    CHECK(std::abs(r.statistic + 5.41) < 0.01);
    CHECK(r.p_value < 0.001);
    const WilcoxonResult swapped = wilcoxon_rank_sum(b, a);
    CHECK(swapped.statistic == doctest::Approx(-r.statistic));
    CHECK(swapped.p_value == doctest::Approx(r.p_value));
    const WilcoxonResult same = wilcoxon_rank_sum(a, a);
    CHECK(same.p_value == doctest::Approx(1.0));
    CHECK_THROWS_AS(wilcoxon_rank_sum({1, 2}, {1, 2, 3}), Error);
    // Ties: midranks and tie-corrected variance.
    const WilcoxonResult tied = wilcoxon_rank_sum({1, 1, 2, 3}, {1, 2, 2, 4});
    CHECK(tied.rank_sum == doctest::Approx(2.0 + 2.0 + 5.0 + 7.0));
}

TEST_CASE("trimming") {
    const testing::ByteMockScorer scorer;  // one token per byte
    CHECK(trim("short", 128, scorer) == "short");
    CHECK(trim("abcdef", 1, scorer) == "a");
    CHECK(trim("abcdef", 3, scorer) == "abc");
    CHECK(trim(trim("abcdef", 3, scorer), 3, scorer) == "abc");
    CHECK(trim("aé", 2, scorer) == "a");   // never split a character
    CHECK(trim("éa", 1, scorer) == "é");
    CHECK_THROWS_AS(trim("abc", 0, scorer), Error);
    CHECK(valid_utf8_prefix("ok\xc3") == "ok");
    CHECK(valid_utf8_prefix("é\xff\x41") == "é");
}

TEST_CASE("score cache round trip") {
    const auto path = std::filesystem::temp_directory_path() / "codeprov_cache_test.jsonl";
    std::filesystem::remove(path);
    {
        ScoreCache cache(path);
        cache.insert("s1", "mock", Method::log_p, "h", {-1.5, -1.5, false, 0});
        cache.insert("s1", "mock", Method::detect_code_gpt, "h", {1.25, 1.25, false, 50});
        CHECK(cache.size() == 2);
    }
    ScoreCache reloaded(path);
    CHECK(reloaded.size() == 2);
    const auto hit = reloaded.find("s1", "mock", Method::detect_code_gpt, "h");
    REQUIRE(hit.has_value());
    CHECK(hit->raw == 1.25);
    CHECK(hit->k_used == 50);
    CHECK_FALSE(reloaded.find("s1", "mock", Method::detect_code_gpt, "other").has_value());
    std::filesystem::remove(path);
}

TEST_CASE("suite: label flip, cache reuse and determinism") {
    const std::vector<CodeSample> data = mock_dataset();
    SuiteInputs inputs;
    inputs.methods = {Method::log_p, Method::entropy, Method::rank, Method::log_rank, Method::lrr,
                      Method::detect_code_gpt};
    inputs.scorers = {std::make_shared<testing::ByteMockScorer>()};
    EvalConfig config;
    config.perturbation.k = 8;
    config.perturbation.seed = 5;
    config.sweep_k = {2, 4, 8};
    config.significance_repeats = 5;

    const EvalReport cold = run_suite(data, inputs, config);
    REQUIRE(cold.results.size() == 6);
    CHECK(cold.sweep.size() == 3);
    CHECK(cold.failures.empty());
    for (const MethodScores& r : cold.results) {
        CHECK(r.n_machine == 6);
        CHECK(r.n_human == 6);
        REQUIRE(r.auroc.has_value());
        CHECK(*r.auroc >= 0.0);
        CHECK(*r.auroc <= 1.0);
    }
    CHECK(cold.find_sweep("mock:bytes", Method::detect_code_gpt, 8)->auroc ==
          cold.find("mock:bytes", Method::detect_code_gpt)->auroc);
    CHECK(cold.significance.size() == 15);
    CHECK(cold.config_hash.size() == 16);

    const EvalReport flip = run_suite(flipped(data), inputs, config);
    for (std::size_t i = 0; i < cold.results.size(); ++i) {
        CHECK(*flip.results[i].auroc == 1.0 - *cold.results[i].auroc);
    }
    for (std::size_t i = 0; i < cold.sweep.size(); ++i) {
        CHECK(*flip.sweep[i].auroc == 1.0 - *cold.sweep[i].auroc);
    }

    const auto path = std::filesystem::temp_directory_path() / "codeprov_suite_cache.jsonl";
    std::filesystem::remove(path);
    std::string first;
    {
        ScoreCache cache(path);
        inputs.cache = &cache;
        first = run_suite(data, inputs, config).to_json().dump();
    }
    ScoreCache warm(path);
    CHECK(warm.size() > 0);
    inputs.cache = &warm;
    const std::size_t before = warm.size();
    CHECK(run_suite(data, inputs, config).to_json().dump() == first);
    CHECK(warm.size() == before);
    CHECK(first == cold.to_json().dump());
    std::filesystem::remove(path);

    inputs.cache = nullptr;
    config.workers = 4;
    CHECK(run_suite(data, inputs, config).to_json().dump() == cold.to_json().dump());
}

TEST_CASE("suite: degenerate and failed samples drop their pair") {
    // Under the byte mock, every byte of "dnx" has rank 1.
    std::vector<CodeSample> data = mock_dataset();
    data[1].text = "dnx";
    // A sample the scorer cannot score.
    data[4].text = "";
    SuiteInputs inputs;
    inputs.methods = {Method::log_p, Method::lrr, Method::detect_code_gpt};
    inputs.scorers = {std::make_shared<testing::ByteMockScorer>()};
    EvalConfig config;
    config.perturbation.k = 4;
    config.significance_repeats = 0;
    const EvalReport report = run_suite(data, inputs, config);
    const MethodScores* dcg = report.find("mock:bytes", Method::detect_code_gpt);
    REQUIRE(dcg != nullptr);
    CHECK(dcg->degenerate_count == 1);
    CHECK(dcg->failed_count == 1);
    CHECK(dcg->n_machine == 4);
    CHECK(dcg->n_human == 4);
    const MethodScores* logp = report.find("mock:bytes", Method::log_p);
    CHECK(logp->degenerate_count == 0);
    CHECK(logp->n_machine == 5);
    CHECK(report.failures.size() == 3);

    config.keep_degenerate = true;
    CHECK(run_suite(data, inputs, config).find("mock:bytes", Method::detect_code_gpt)->n_machine == 5);

    inputs.methods = {Method::detectgpt};
    const EvalReport no_perturber = run_suite(data, inputs, config);
    CHECK(no_perturber.failures.size() == data.size());
    CHECK_FALSE(no_perturber.results[0].auroc.has_value());
}

TEST_CASE("report CSV shape") {
    SuiteInputs inputs;
    inputs.methods = {Method::log_p, Method::detect_code_gpt};
    inputs.scorers = {std::make_shared<testing::ByteMockScorer>(), std::make_shared<testing::ByteMockScorer>(2)};
    EvalConfig config;
    config.perturbation.k = 3;
    config.sweep_k = {1, 2};
    const EvalReport report = run_suite(mock_dataset(), inputs, config);
    std::ostringstream csv;
    report.write_csv(csv);
    std::istringstream lines(csv.str());
    std::string header;
    std::getline(lines, header);
    CHECK(header == "scorer,log_p,detect_code_gpt");
    std::ostringstream sweep;
    report.write_sweep_csv(sweep);
    CHECK(sweep.str().rfind("scorer,k,detect_code_gpt\n", 0) == 0);
    const auto j = report.to_json();
    CHECK(j["config"]["k"] == 3);
    CHECK(j["results"].size() == 4);
    const std::string table = csv.str();
    CHECK(std::count(table.begin(), table.end(), '\n') == 3);
}

TEST_CASE("benchmark construction") {
    const std::vector<std::string> sources = {
        "def add(a, b):\n    \"\"\"Sum.\"\"\"\n    return a + b\n",
        "def sub(a, b):\n    # difference\n    return a - b\n",
        "def mul(a, b):\n    return a * b\n",
        "def neg(a):\n    '''Negate.'''\n    value = -a\n    return value\n",
    };
    Corpus human{"h", {}};
    for (std::size_t i = 0; i < sources.size(); ++i) {
        CodeSample s;
        s.id = "f" + std::to_string(i);
        s.text = sources[i];
        human.samples.push_back(s);
    }
    const auto model = std::make_shared<const SurrogateModel>(SurrogateModel::train(human, 6, 0.5));
    const SurrogateGenerator generator(model);
    const SurrogateScorer scorer(model);
    BenchmarkParams params;
    params.n_pairs = 3;
    params.max_tokens = 24;
    params.seed = 8;
    const auto data = build_benchmark(human, generator, scorer, params);
    REQUIRE(data.size() == 6);
    std::size_t machine = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const CodeSample& s = data[i];
        CHECK(s.label == (i % 2 == 0 ? Label::human : Label::machine));
        machine += s.label == Label::machine ? 1 : 0;
        CHECK(s.text.size() <= 24);
        CHECK(is_valid_utf8(s.text));
        CHECK(s.prompt.has_value());
        CHECK(s.pair == data[i - i % 2].pair);
    }
    CHECK(machine == 3);
    CHECK(data[1].source_model == model->id());
    CHECK(build_benchmark(human, generator, scorer, params) == data);

    params.n_pairs = 0;
    CHECK(build_benchmark(human, generator, scorer, params).empty());
    params.n_pairs = 50;
    try {
        build_benchmark(human, generator, scorer, params);
        FAIL("expected InsufficientCorpus");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InsufficientCorpus);
    }
}
