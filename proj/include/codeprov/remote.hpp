#pragma once

#include <atomic>
#include <cstddef>
#include <memory>
#include <string>
#include <string_view>

#include <json.hpp>

#include "codeprov/error.hpp"
#include "codeprov/generator.hpp"
#include "codeprov/perturb.hpp"
#include "codeprov/scoring.hpp"

namespace codeprov {

struct HttpSettings {
    std::string url;  // http://host[:port][/prefix]
    int timeout_ms = 30000;
    int retries = 3;  // extra attempts after the first
    int backoff_ms = 100;  // doubled after every failed attempt
    std::size_t max_in_flight = 4;
};

/// JSON-over-HTTP POST with bounded concurrency and exponential-backoff
/// retries on transport failures and 5xx responses.
class JsonEndpoint {
public:
    JsonEndpoint(HttpSettings settings, ErrorCode unavailable, ErrorCode protocol);
    ~JsonEndpoint();
    JsonEndpoint(const JsonEndpoint&) = delete;
    JsonEndpoint& operator=(const JsonEndpoint&) = delete;

    nlohmann::json post(std::string_view path, const nlohmann::json& body) const;

    const HttpSettings& settings() const noexcept { return settings_; }

private:
    struct Impl;
    HttpSettings settings_;
    ErrorCode unavailable_;
    ErrorCode protocol_;
    std::string scheme_host_port_;
    std::string prefix_;
    std::unique_ptr<Impl> impl_;
};

/// Client of POST /v1/score.
///
/// Request:  {"id": n, "text": "...", "want": ["logprob", "rank", "entropy"]}
/// Response: {"id": n, "scorer_id": "...", "tokens": [{"text", "byte_start",
///            "byte_end", "log_likelihood", "rank", "rank_lower_bound"?,
///            "entropy"?}, ...]}
/// The server's token segmentation is authoritative; it must tile the text.
class RemoteScorer final : public Scorer {
public:
    explicit RemoteScorer(HttpSettings settings);

    ScoredCode score(std::string_view text) const override;
    std::string id() const override { return "remote:" + endpoint_.settings().url; }
    std::size_t max_in_flight() const override { return endpoint_.settings().max_in_flight; }

private:
    JsonEndpoint endpoint_;
    mutable std::atomic<std::uint64_t> next_id_{1};
};

/// Parses a /v1/score response body. Exposed for tests and servers.
ScoredCode parse_score_response(const nlohmann::json& body, std::string_view text, std::uint64_t expected_id);
nlohmann::json score_response_json(const ScoredCode& sc, std::uint64_t id);

/// Client of POST /v1/generate {prompt, max_tokens, temperature, top_p} -> {text}.
class RemoteGenerator final : public Generator {
public:
    explicit RemoteGenerator(HttpSettings settings);

    std::string generate(std::string_view prompt, const GenerationParams& params) const override;
    std::string id() const override { return "remote:" + endpoint_.settings().url; }

private:
    JsonEndpoint endpoint_;
};

/// Client of POST /v1/perturb {text, k, span_fraction} -> {variants: [...]}.
/// Variants are passed through untouched.
class ExternalPerturber final : public Perturber {
public:
    ExternalPerturber(HttpSettings settings, double span_fraction = 0.15);

    std::vector<std::string> perturb(std::string_view code, std::size_t k, std::uint64_t seed) const override;
    std::string id() const override { return "external:" + endpoint_.settings().url; }

private:
    JsonEndpoint endpoint_;
    double span_fraction_;
};

/// "surrogate:PATH" loads a SurrogateModel; an http:// URL opens a
/// RemoteScorer using `http` for the remaining settings.
ScorerHandle open_scorer(std::string_view spec, HttpSettings http = {});

}  // namespace codeprov
