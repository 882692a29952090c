#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "codeprov/rng.hpp"

namespace codeprov {

struct PerturbationConfig {
    double alpha = 0.5;            // fraction of space locations perturbed
    double beta = 0.5;             // fraction of lines perturbed
    double lambda_spaces = 3.0;    // Poisson mean of spaces per location
    double lambda_newlines = 2.0;  // Poisson mean of newlines per line
    std::size_t k = 50;            // number of perturbations
    std::uint64_t seed = 0;
    // Allow insertion at every code point boundary instead of only between
    // tokens on a line (ablation only; can break indentation and strings).
    bool unsafe_locations = false;

    /// Throws InvalidArgument when a field is out of range.
    void validate() const;
};

enum class PerturbationType { space, newline };

std::string_view to_string(PerturbationType type) noexcept;

/// `count` characters inserted at byte `location` of the input.
struct Insertion {
    std::size_t location = 0;
    std::size_t count = 0;

    bool operator==(const Insertion&) const = default;
};

struct PerturbationResult {
    std::string text;
    PerturbationType type = PerturbationType::space;
    std::vector<Insertion> insertions;  // ascending by location
};

struct PerturbedSet {
    std::string original;
    std::vector<PerturbationResult> variants;
};

/// Byte offsets where spaces may be inserted. By default: boundaries between
/// adjacent lexer spans on one physical line, after the line's first token
/// (indentation is never touched), outside f-string interiors and not after a
/// line-continuation backslash.
std::vector<std::size_t> space_locations(std::string_view code, bool unsafe_locations = false);

/// Offsets just after each physical line (after its terminator when it has
/// one). A trailing empty segment after the final newline is not a line.
std::vector<std::size_t> line_end_locations(std::string_view code);

/// Applies insertions of `fill` characters; reference re-application of an
/// insertion log.
std::string apply_insertions(std::string_view code, const std::vector<Insertion>& insertions, char fill);

/// Selects ceil(alpha * |C|) locations without replacement and inserts
/// Poisson(lambda_spaces) spaces at each.
PerturbationResult insert_spaces(std::string_view code, double alpha, double lambda_spaces, Rng& rng,
                                 bool unsafe_locations = false);

/// Selects ceil(beta * |L|) lines without replacement and inserts
/// Poisson(lambda_newlines) bare '\n' characters after each.
PerturbationResult insert_newlines(std::string_view code, double beta, double lambda_newlines, Rng& rng);

/// One variant from its own stream: a fair coin picks spaces (u <= 0.5) or
/// newlines.
PerturbationResult perturb_once(std::string_view code, const PerturbationConfig& config, Rng& rng);

/// k variants; variant i draws from derive_seed(config.seed, i), so any
/// prefix of variants is independent of k.
PerturbedSet perturb_set(std::string_view code, const PerturbationConfig& config);

/// Deletes every space and newline; insertion-only perturbations preserve it.
std::string strip_spaces_and_newlines(std::string_view text);

/// Source of perturbed variants q(. | x) for the perturbation detectors.
class Perturber {
public:
    virtual ~Perturber() = default;
    /// Returns exactly k variants of `code`.
    virtual std::vector<std::string> perturb(std::string_view code, std::size_t k, std::uint64_t seed) const = 0;
    virtual std::string id() const = 0;
};

using PerturberHandle = std::shared_ptr<const Perturber>;

/// Space/newline insertion perturber.
class StylizedPerturber final : public Perturber {
public:
    explicit StylizedPerturber(PerturbationConfig config) : config_(config) { config_.validate(); }

    std::vector<std::string> perturb(std::string_view code, std::size_t k, std::uint64_t seed) const override;
    std::string id() const override { return "stylized"; }

    const PerturbationConfig& config() const noexcept { return config_; }

private:
    PerturbationConfig config_;
};

}  // namespace codeprov
