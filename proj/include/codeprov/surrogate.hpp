#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "codeprov/sample.hpp"
#include "codeprov/scoring.hpp"

namespace codeprov {

inline constexpr std::size_t kByteVocabulary = 256;

using ByteDistribution = std::array<double, kByteVocabulary>;

/// Byte-level n-gram language model with add-s smoothing.
///
/// P(b | ctx) = (c(ctx, b) + s) / (c(ctx) + 256 s), where ctx is the previous
/// order-1 bytes. Positions near the start of a text use the shorter
/// available history, which is a distinct context (the BOS context for the
/// first byte).
class SurrogateModel {
public:
    static constexpr std::size_t kMaxOrder = 8;

    SurrogateModel() = default;

    static SurrogateModel train(const Corpus& corpus, std::size_t order = 5, double smoothing = 0.5);

    std::size_t order() const noexcept { return order_; }
    double smoothing() const noexcept { return smoothing_; }
    /// FNV-1a over the training texts in order.
    std::uint64_t corpus_fingerprint() const noexcept { return fingerprint_; }
    std::size_t context_count() const noexcept { return index_.size(); }

    /// Full conditional over the next byte given all preceding bytes.
    ByteDistribution conditional(std::string_view history) const;

    /// Per-position statistics computed from the sparse counts.
    struct PositionStats {
        double log_likelihood;
        std::size_t rank;
        double entropy;
    };
    PositionStats position_stats(std::string_view history, unsigned char actual) const;

    std::string id() const;

    void save(std::ostream& out) const;
    void save(const std::filesystem::path& path) const;
    static SurrogateModel load(std::istream& in);
    static SurrogateModel load(const std::filesystem::path& path);

    bool operator==(const SurrogateModel& other) const;

private:
    struct Entry {
        std::uint8_t byte;
        std::uint32_t count;
    };
    struct Range {
        std::uint32_t offset;
        std::uint32_t length;
        std::uint64_t total;
    };

    std::uint64_t context_key(std::string_view history) const noexcept;
    const Range* find(std::string_view history) const;
    void build_index();

    std::size_t order_ = 5;
    double smoothing_ = 0.5;
    std::uint64_t fingerprint_ = 0;
    // Sorted by (context key, byte); `index_` points into it.
    std::vector<std::uint64_t> keys_;
    std::vector<Range> ranges_;
    std::vector<Entry> entries_;
    std::unordered_map<std::uint64_t, std::size_t> index_;
};

/// Scores text byte by byte under a SurrogateModel.
class SurrogateScorer final : public Scorer {
public:
    explicit SurrogateScorer(std::shared_ptr<const SurrogateModel> model) : model_(std::move(model)) {}

    ScoredCode score(std::string_view text) const override;
    std::string id() const override { return model_->id(); }
    std::size_t max_in_flight() const override { return 64; }

    const SurrogateModel& model() const noexcept { return *model_; }

private:
    std::shared_ptr<const SurrogateModel> model_;
};

struct SamplingParams {
    std::size_t max_len = 128;
    double temperature = 1.0;
    double top_p = 1.0;
    std::uint64_t seed = 0;
    bool greedy = false;  // the temperature -> 0+ limit
};

/// Temperature-scaled, nucleus-truncated, renormalized distribution.
/// Bytes outside the nucleus get probability 0.
ByteDistribution scaled_distribution(const ByteDistribution& p, double temperature, double top_p);

double entropy_of(const ByteDistribution& p);

/// Autoregressive sampling; returns the continuation only (without the
/// prompt). Deterministic given `params.seed`.
std::string sample_surrogate(const SurrogateModel& model, std::string_view prompt, const SamplingParams& params);

}  // namespace codeprov
