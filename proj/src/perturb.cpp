#include "codeprov/perturb.hpp"

#include <algorithm>
#include <cmath>

#include "codeprov/error.hpp"
#include "codeprov/lexing.hpp"

namespace codeprov {

void PerturbationConfig::validate() const {
    require(alpha >= 0.0 && alpha <= 1.0, ErrorCode::InvalidArgument, "alpha must be in [0, 1]");
    require(beta >= 0.0 && beta <= 1.0, ErrorCode::InvalidArgument, "beta must be in [0, 1]");
    require(std::isfinite(lambda_spaces) && lambda_spaces >= 0.0, ErrorCode::InvalidArgument,
            "lambda_spaces must be finite and non-negative");
    require(std::isfinite(lambda_newlines) && lambda_newlines >= 0.0, ErrorCode::InvalidArgument,
            "lambda_newlines must be finite and non-negative");
    require(k >= 1, ErrorCode::InvalidArgument, "k must be at least 1");
}

std::string_view to_string(PerturbationType type) noexcept {
    return type == PerturbationType::space ? "space" : "newline";
}

namespace {

std::size_t selection_size(double fraction, std::size_t population) {
    // ceil, with a small guard so that e.g. 0.1 * 10 stays 1
    const double raw = fraction * static_cast<double>(population);
    const auto n = static_cast<std::size_t>(std::ceil(raw - 1e-9));
    return std::min(n, population);
}

}  // namespace

std::vector<std::size_t> space_locations(std::string_view code, bool unsafe_locations) {
    std::vector<std::size_t> locations;
    if (unsafe_locations) {
        for (std::size_t i = 1; i < code.size(); ++i) {
            if ((static_cast<unsigned char>(code[i]) & 0xC0) != 0x80) {
                locations.push_back(i);
            }
        }
        return locations;
    }
    const LexedCode lexed = lex(code);
    const auto& spans = lexed.spans;
    bool token_on_line = false;
    for (std::size_t i = 0; i + 1 < spans.size(); ++i) {
        const TokenSpan& span = spans[i];
        const bool has_newline = span.text.find('\n') != std::string::npos;
        if (span.category == Category::whitespace) {
            if (has_newline) {
                token_on_line = false;
            }
        } else {
            token_on_line = true;
        }
        const bool inside_fstring = span.fstring_depth > 0 && spans[i + 1].fstring_depth > 0;
        const bool continuation = span.text == "\\";
        if (token_on_line && !inside_fstring && !continuation) {
            locations.push_back(span.end);
        }
    }
    return locations;
}

std::vector<std::size_t> line_end_locations(std::string_view code) {
    std::vector<std::size_t> ends;
    for (std::size_t i = 0; i < code.size(); ++i) {
        if (code[i] == '\n') {
            ends.push_back(i + 1);
        }
    }
    if (!code.empty() && code.back() != '\n') {
        ends.push_back(code.size());
    }
    return ends;
}

std::string apply_insertions(std::string_view code, const std::vector<Insertion>& insertions, char fill) {
    std::string out;
    std::size_t total = 0;
    for (const Insertion& ins : insertions) {
        total += ins.count;
    }
    out.reserve(code.size() + total);
    std::size_t pos = 0;
    for (const Insertion& ins : insertions) {
        require(ins.location >= pos && ins.location <= code.size(), ErrorCode::InvalidArgument,
                "insertions must be sorted and inside the text");
        out.append(code.substr(pos, ins.location - pos));
        out.append(ins.count, fill);
        pos = ins.location;
    }
    out.append(code.substr(pos));
    return out;
}

PerturbationResult insert_spaces(std::string_view code, double alpha, double lambda_spaces, Rng& rng,
                                 bool unsafe_locations) {
    require(!code.empty(), ErrorCode::EmptyCode, "cannot perturb empty code");
    require(alpha >= 0.0 && alpha <= 1.0, ErrorCode::InvalidArgument, "alpha must be in [0, 1]");
    const std::vector<std::size_t> candidates = space_locations(code, unsafe_locations);
    PerturbationResult result;
    result.type = PerturbationType::space;
    for (std::size_t index : rng.choose_sorted(candidates.size(), selection_size(alpha, candidates.size()))) {
        result.insertions.push_back({candidates[index], static_cast<std::size_t>(rng.poisson(lambda_spaces))});
    }
    result.text = apply_insertions(code, result.insertions, ' ');
    return result;
}

PerturbationResult insert_newlines(std::string_view code, double beta, double lambda_newlines, Rng& rng) {
    require(!code.empty(), ErrorCode::EmptyCode, "cannot perturb empty code");
    require(beta >= 0.0 && beta <= 1.0, ErrorCode::InvalidArgument, "beta must be in [0, 1]");
    const std::vector<std::size_t> lines = line_end_locations(code);
    PerturbationResult result;
    result.type = PerturbationType::newline;
    for (std::size_t index : rng.choose_sorted(lines.size(), selection_size(beta, lines.size()))) {
        result.insertions.push_back({lines[index], static_cast<std::size_t>(rng.poisson(lambda_newlines))});
    }
    result.text = apply_insertions(code, result.insertions, '\n');
    return result;
}

PerturbationResult perturb_once(std::string_view code, const PerturbationConfig& config, Rng& rng) {
    if (rng.uniform01() <= 0.5) {
        return insert_spaces(code, config.alpha, config.lambda_spaces, rng, config.unsafe_locations);
    }
    return insert_newlines(code, config.beta, config.lambda_newlines, rng);
}

PerturbedSet perturb_set(std::string_view code, const PerturbationConfig& config) {
    config.validate();
    require(!code.empty(), ErrorCode::EmptyCode, "cannot perturb empty code");
    PerturbedSet set;
    set.original = std::string(code);
    set.variants.reserve(config.k);
    for (std::size_t i = 0; i < config.k; ++i) {
        Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(i)));
        set.variants.push_back(perturb_once(code, config, rng));
    }
    return set;
}

std::string strip_spaces_and_newlines(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        if (c != ' ' && c != '\n') {
            out.push_back(c);
        }
    }
    return out;
}

std::vector<std::string> StylizedPerturber::perturb(std::string_view code, std::size_t k, std::uint64_t seed) const {
    PerturbationConfig config = config_;
    config.k = k;
    config.seed = seed;
    PerturbedSet set = perturb_set(code, config);
    std::vector<std::string> texts;
    texts.reserve(set.variants.size());
    for (auto& v : set.variants) {
        texts.push_back(std::move(v.text));
    }
    return texts;
}

}  // namespace codeprov
