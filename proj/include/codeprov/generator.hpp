#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include "codeprov/surrogate.hpp"

namespace codeprov {

struct GenerationParams {
    std::size_t max_tokens = 128;
    double temperature = 0.2;
    double top_p = 0.95;
    std::uint64_t seed = 0;
};

/// Produces a continuation of a prompt (the machine side of a benchmark).
class Generator {
public:
    virtual ~Generator() = default;
    /// Returns the continuation only. Throws GenerationUnavailable when the
    /// backend cannot be reached.
    virtual std::string generate(std::string_view prompt, const GenerationParams& params) const = 0;
    virtual std::string id() const = 0;
};

using GeneratorHandle = std::shared_ptr<const Generator>;

class SurrogateGenerator final : public Generator {
public:
    explicit SurrogateGenerator(std::shared_ptr<const SurrogateModel> model) : model_(std::move(model)) {}

    std::string generate(std::string_view prompt, const GenerationParams& params) const override {
        SamplingParams sampling;
        sampling.max_len = params.max_tokens;
        sampling.temperature = params.temperature;
        sampling.top_p = params.top_p;
        sampling.seed = params.seed;
        return sample_surrogate(*model_, prompt, sampling);
    }

    std::string id() const override { return model_->id(); }

private:
    std::shared_ptr<const SurrogateModel> model_;
};

}  // namespace codeprov
