#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "codeprov/perturb.hpp"
#include "codeprov/rng.hpp"
#include "codeprov/scoring.hpp"

namespace testing {

// One token per byte; log-likelihood and rank depend on the byte value only.
// rank_power raises every rank to a power (scales log ranks exactly);
// ll_shift is subtracted from every log-likelihood.
class ByteMockScorer final : public codeprov::Scorer {
public:
    explicit ByteMockScorer(unsigned rank_power = 1, double ll_shift = 0.0, bool with_entropy = true)
        : rank_power_(rank_power), ll_shift_(ll_shift), with_entropy_(with_entropy) {}

    codeprov::ScoredCode score(std::string_view text) const override {
        codeprov::ScoredCode sc;
        sc.text = std::string(text);
        sc.scorer_id = id();
        for (std::size_t i = 0; i < text.size(); ++i) {
            const auto b = static_cast<unsigned char>(text[i]);
            codeprov::ScoredToken t;
            t.text = std::string(1, text[i]);
            t.byte_start = i;
            t.byte_end = i + 1;
            t.log_likelihood = -0.25 * static_cast<double>(1 + b % 7) - ll_shift_;
            std::size_t rank = 1 + b % 5;
            std::size_t powered = 1;
            for (unsigned p = 0; p < rank_power_; ++p) {
                powered *= rank;
            }
            t.rank = powered;
            if (with_entropy_) {
                t.entropy = 0.1 * static_cast<double>(b % 11);
            }
            sc.tokens.push_back(std::move(t));
        }
        return sc;
    }
    std::string id() const override { return rank_power_ == 1 ? "mock:bytes" : "mock:bytes^" + std::to_string(rank_power_); }

private:
    unsigned rank_power_;
    double ll_shift_;
    bool with_entropy_;
};

// Returns k copies of the input.
class IdentityPerturber final : public codeprov::Perturber {
public:
    std::vector<std::string> perturb(std::string_view code, std::size_t k, std::uint64_t) const override {
        return std::vector<std::string>(k, std::string(code));
    }
    std::string id() const override { return "identity"; }
};

// Random Python-flavoured snippet, valid UTF-8, including f-strings,
// comments, multi-line strings and a few non-ASCII identifiers.
inline std::string fuzz_snippet(codeprov::Rng& rng) {
    static const std::vector<std::string> atoms = {
        "x", "value", "self", "_tmp", "λ", "naïve", "def", "return", "if", "else", "for", "in", "while",
        "class", "import", "from", "lambda", "None", "True", "False", "0", "42", "3.14", "0x1f", "1e-3",
        "'s'", "\"dq\"", "f\"a{x}b\"", "f'{y!r:>{w}}'", "\"\"\"doc\nstring\"\"\"", "b'\\x00'", "# note", "+",
        "-", "*", "/", "//", "%", "**", "==", "!=", "<=", ">=", "=", "+=", "->", "@", "(", ")", "[", "]",
        "{", "}", ",", ":", ".", ";", "...", "\\", "$", "?"};
    std::string out;
    const std::uint64_t lines = 1 + rng.uniform_below(8);
    for (std::uint64_t l = 0; l < lines; ++l) {
        out.append(4 * rng.uniform_below(3), ' ');
        const std::uint64_t n = 1 + rng.uniform_below(7);
        for (std::uint64_t i = 0; i < n; ++i) {
            if (i > 0 && rng.uniform01() < 0.6) {
                out.append(1 + rng.uniform_below(2), ' ');
            }
            out += atoms[rng.uniform_below(atoms.size())];
        }
        if (rng.uniform01() < 0.1) {
            out += "\t";
        }
        if (l + 1 < lines || rng.uniform01() < 0.7) {
            out += rng.uniform01() < 0.1 ? "\r\n" : "\n";
        }
    }
    return out;
}

}  // namespace testing
