#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "codeprov/error.hpp"
#include "codeprov/surrogate.hpp"
#include "support.hpp"

using namespace codeprov;

namespace {

Corpus corpus_of(std::initializer_list<const char*> texts) {
    Corpus c{"t", {}};
    int i = 0;
    for (const char* t : texts) {
        CodeSample s;
        s.id = "s" + std::to_string(i++);
        s.text = t;
        c.samples.push_back(s);
    }
    return c;
}

// Rank by enumeration: probability descending, byte ascending.
std::size_t brute_rank(const ByteDistribution& p, unsigned char actual) {
    std::vector<int> order(256);
    for (int b = 0; b < 256; ++b) {
        order[b] = b;
    }
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return p[a] > p[b]; });
    return static_cast<std::size_t>(std::find(order.begin(), order.end(), actual) - order.begin()) + 1;
}

}  // namespace

TEST_CASE("add-s smoothing by hand") {
    const SurrogateModel m = SurrogateModel::train(corpus_of({"aa"}), 2, 0.5);
    const ByteDistribution p = m.conditional("a");
    CHECK(p['a'] == doctest::Approx(1.5 / 129.0).epsilon(1e-12));
    CHECK(p['a'] == doctest::Approx(0.011628).epsilon(1e-4));
    CHECK(p['b'] == doctest::Approx(0.5 / 129.0).epsilon(1e-12));
    // Unseen context: uniform.
    const ByteDistribution u = m.conditional("z");
    for (double x : u) {
        CHECK(x == doctest::Approx(1.0 / 256));
    }
}

TEST_CASE("untrained model is uniform") {
    const auto model = std::make_shared<const SurrogateModel>(SurrogateModel::train(corpus_of({""}), 5, 0.5));
    const SurrogateScorer scorer(model);
    const ScoredCode sc = scorer.score("hello");
    for (const ScoredToken& t : sc.tokens) {
        CHECK(t.log_likelihood == doctest::Approx(std::log(1.0 / 256)));
        CHECK(*t.entropy == doctest::Approx(std::log(256.0)));
        CHECK(t.rank == static_cast<std::size_t>(static_cast<unsigned char>(t.text[0])) + 1);
    }
    CHECK_THROWS_AS(SurrogateModel::train(Corpus{}, 5, 0.5), Error);
    CHECK_THROWS_AS(SurrogateModel::train(corpus_of({"x"}), 0, 0.5), Error);
    CHECK_THROWS_AS(SurrogateModel::train(corpus_of({"x"}), 9, 0.5), Error);
    CHECK_THROWS_AS(SurrogateModel::train(corpus_of({"x"}), 3, 0.0), Error);
}

TEST_CASE("periodic corpus predicts its continuation") {
    const auto model =
        std::make_shared<const SurrogateModel>(SurrogateModel::train(corpus_of({"abababababababab"}), 3, 0.5));
    const ByteDistribution p = model->conditional("abab");
    CHECK(std::max_element(p.begin(), p.end()) - p.begin() == 'a');
    const SurrogateScorer scorer(model);
    const ScoredCode sc = scorer.score("ababab");
    for (std::size_t i = 2; i < sc.tokens.size(); ++i) {
        CHECK(sc.tokens[i].rank == 1);
    }
    SamplingParams greedy;
    greedy.greedy = true;
    greedy.max_len = 6;
    CHECK(sample_surrogate(*model, "a", greedy) == "bababa");
}

TEST_CASE("position statistics match brute-force enumeration") {
    const auto model = std::make_shared<const SurrogateModel>(
        SurrogateModel::train(corpus_of({"def f(x):\n    return x + 1\n", "def g(y):\n    return y * 2\n",
                                         "class A:\n    pass\n"}),
                              4, 0.5));
    Rng rng(3);
    const std::string text = "def h(z):\n    return z - 3\nclass B:\n    pass\n";
    for (std::size_t i = 0; i < text.size(); ++i) {
        const std::string_view history = std::string_view(text).substr(0, i);
        const auto actual = static_cast<unsigned char>(text[i]);
        const ByteDistribution p = model->conditional(history);
        double sum = 0.0;
        double h = 0.0;
        for (double x : p) {
            sum += x;
            h -= x * std::log(x);
        }
        CHECK(std::abs(sum - 1.0) < 1e-9);
        const auto stats = model->position_stats(history, actual);
        CHECK(stats.rank == brute_rank(p, actual));
        CHECK(stats.log_likelihood == doctest::Approx(std::log(p[actual])).epsilon(1e-12));
        CHECK(stats.entropy == doctest::Approx(h).epsilon(1e-10));
        // A random non-actual byte as well.
        const auto other = static_cast<unsigned char>(rng.uniform_below(256));
        CHECK(model->position_stats(history, other).rank == brute_rank(p, other));
    }
}

TEST_CASE("serialization round trip is bit exact") {
    const auto model = std::make_shared<const SurrogateModel>(
        SurrogateModel::train(corpus_of({"import os\nprint(os.getcwd())\n", "x = [i for i in range(10)]\n"}), 5,
                              0.5));
    std::stringstream buffer;
    model->save(buffer);
    const std::string bytes = buffer.str();
    CHECK(bytes.substr(0, 8) == "CPSURRGT");
    std::stringstream in(bytes);
    const auto loaded = std::make_shared<const SurrogateModel>(SurrogateModel::load(in));
    CHECK(*loaded == *model);
    CHECK(loaded->id() == model->id());
    std::stringstream again;
    loaded->save(again);
    CHECK(again.str() == bytes);
    const std::string probe = "print(range(os))\n";
    CHECK(SurrogateScorer(loaded).score(probe) == SurrogateScorer(model).score(probe));

    std::stringstream bad("NOTAMODEL-------");
    CHECK_THROWS_AS(SurrogateModel::load(bad), Error);
    std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS_AS(SurrogateModel::load(truncated), Error);
}

TEST_CASE("training is deterministic") {
    const Corpus c = corpus_of({"a = 1\n", "b = 2\n"});
    std::stringstream s1;
    std::stringstream s2;
    SurrogateModel::train(c, 5, 0.5).save(s1);
    SurrogateModel::train(c, 5, 0.5).save(s2);
    CHECK(s1.str() == s2.str());
}

TEST_CASE("temperature and nucleus") {
    const SurrogateModel model =
        SurrogateModel::train(corpus_of({"for i in range(10):\n    print(i)\n"}), 3, 0.5);
    const std::string text = "for i in range(10):\n    print(i)\n";
    for (std::size_t i = 0; i < text.size(); ++i) {
        const ByteDistribution p = model.conditional(std::string_view(text).substr(0, i));
        const ByteDistribution cold = scaled_distribution(p, 0.2, 1.0);
        const ByteDistribution warm = scaled_distribution(p, 1.0, 1.0);
        CHECK(entropy_of(cold) <= entropy_of(warm) + 1e-12);
        double sum = 0.0;
        for (double x : warm) {
            sum += x;
        }
        CHECK(std::abs(sum - 1.0) < 1e-9);
        const ByteDistribution nucleus = scaled_distribution(p, 1.0, 0.5);
        double kept = 0.0;
        double nucleus_sum = 0.0;
        for (int b = 0; b < 256; ++b) {
            nucleus_sum += nucleus[b];
            if (nucleus[b] > 0.0) {
                kept += p[b];
            }
        }
        CHECK(std::abs(nucleus_sum - 1.0) < 1e-9);
        CHECK(kept >= 0.5 - 1e-12);
    }
    CHECK_THROWS_AS(scaled_distribution(ByteDistribution{}, 0.0, 1.0), Error);
    CHECK_THROWS_AS(scaled_distribution(ByteDistribution{}, 1.0, 1.5), Error);
}

TEST_CASE("sampling an untrained model is uniform") {
    const SurrogateModel model = SurrogateModel::train(corpus_of({""}), 1, 0.5);
    SamplingParams params;
    params.max_len = 100000;
    params.seed = 17;
    const std::string out = sample_surrogate(model, "", params);
    REQUIRE(out.size() == 100000);
    std::vector<double> counts(256, 0.0);
    for (char c : out) {
        counts[static_cast<unsigned char>(c)] += 1.0;
    }
    const double expected = 100000.0 / 256;
    double chi = 0.0;
    for (double c : counts) {
        chi += (c - expected) * (c - expected) / expected;
    }
    // 255 degrees of freedom: mean 255, sd about 22.6.
    CHECK(chi < 255 + 3 * 22.6);
    CHECK(sample_surrogate(model, "", params) == out);
}

TEST_CASE("sampling is seeded") {
    const SurrogateModel model = SurrogateModel::train(corpus_of({"def f(a, b):\n    return a + b\n"}), 5, 0.5);
    SamplingParams params;
    params.max_len = 64;
    params.temperature = 0.7;
    params.top_p = 0.95;
    params.seed = 1;
    const std::string a = sample_surrogate(model, "def ", params);
    CHECK(a == sample_surrogate(model, "def ", params));
    CHECK(a.size() == 64);
    params.seed = 2;
    CHECK(a != sample_surrogate(model, "def ", params));
}
