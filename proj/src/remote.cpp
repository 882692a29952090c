#include "codeprov/remote.hpp"

#include <chrono>
#include <cmath>
#include <semaphore>
#include <thread>

#include <httplib.h>

#include "codeprov/surrogate.hpp"

namespace codeprov {

using nlohmann::json;

struct JsonEndpoint::Impl {
    explicit Impl(std::ptrdiff_t slots) : slots(slots) {}
    mutable std::counting_semaphore<> slots;
};

JsonEndpoint::JsonEndpoint(HttpSettings settings, ErrorCode unavailable, ErrorCode protocol)
    : settings_(std::move(settings)), unavailable_(unavailable), protocol_(protocol) {
    const std::string& url = settings_.url;
    const std::size_t scheme_end = url.find("://");
    require(scheme_end != std::string::npos && url.compare(0, scheme_end, "http") == 0, ErrorCode::InvalidArgument,
            "endpoint must be an http:// URL, got '" + url + "'");
    const std::size_t path_start = url.find('/', scheme_end + 3);
    scheme_host_port_ = url.substr(0, path_start);
    prefix_ = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!prefix_.empty() && prefix_.back() == '/') {
        prefix_.pop_back();
    }
    require(settings_.max_in_flight >= 1, ErrorCode::InvalidArgument, "max_in_flight must be at least 1");
    require(settings_.timeout_ms > 0 && settings_.retries >= 0, ErrorCode::InvalidArgument,
            "timeout must be positive and retries non-negative");
    impl_ = std::make_unique<Impl>(static_cast<std::ptrdiff_t>(settings_.max_in_flight));
}

JsonEndpoint::~JsonEndpoint() = default;

json JsonEndpoint::post(std::string_view path, const json& body) const {
    impl_->slots.acquire();
    struct Release {
        std::counting_semaphore<>& s;
        ~Release() { s.release(); }
    } release{impl_->slots};

    const std::string payload = body.dump();
    const std::string target = prefix_ + std::string(path);
    std::string last_error;
    int backoff = settings_.backoff_ms;
    for (int attempt = 0; attempt <= settings_.retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
            backoff *= 2;
        }
        httplib::Client client(scheme_host_port_);
        const auto timeout = std::chrono::milliseconds(settings_.timeout_ms);
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);
        auto response = client.Post(target, payload, "application/json");
        if (!response) {
            last_error = httplib::to_string(response.error());
            continue;
        }
        if (response->status >= 500) {
            last_error = "HTTP " + std::to_string(response->status);
            continue;
        }
        if (response->status != 200) {
            fail(protocol_, settings_.url + target + " answered HTTP " + std::to_string(response->status) + ": " +
                                response->body.substr(0, 200));
        }
        try {
            return json::parse(response->body);
        } catch (const json::exception& e) {
            fail(protocol_, "malformed JSON from " + settings_.url + target + ": " + e.what());
        }
    }
    fail(unavailable_, settings_.url + target + " unreachable after " + std::to_string(settings_.retries + 1) +
                           " attempts: " + last_error);
}

ScoredCode parse_score_response(const json& body, std::string_view text, std::uint64_t expected_id) {
    constexpr auto kProtocol = ErrorCode::ScorerProtocolError;
    try {
        require(body.is_object() && body.contains("tokens") && body["tokens"].is_array(), kProtocol,
                "response lacks a tokens array");
        if (body.contains("id")) {
            require(body["id"].get<std::uint64_t>() == expected_id, kProtocol, "response id does not match request");
        }
        ScoredCode sc;
        sc.text = std::string(text);
        sc.scorer_id = body.value("scorer_id", std::string());
        for (const json& t : body["tokens"]) {
            ScoredToken token;
            token.byte_start = t.at("byte_start").get<std::size_t>();
            token.byte_end = t.at("byte_end").get<std::size_t>();
            require(token.byte_start <= token.byte_end && token.byte_end <= text.size(), kProtocol,
                    "token byte range outside the text");
            token.text = std::string(text.substr(token.byte_start, token.byte_end - token.byte_start));
            token.log_likelihood = t.at("log_likelihood").get<double>();
            require(std::isfinite(token.log_likelihood) && token.log_likelihood <= 1e-9, kProtocol,
                    "log_likelihood must be finite and <= 0");
            token.log_likelihood = std::min(token.log_likelihood, 0.0);
            const auto rank = t.at("rank").get<std::int64_t>();
            require(rank >= 1, kProtocol, "rank must be >= 1");
            token.rank = static_cast<std::size_t>(rank);
            token.rank_lower_bound = t.value("rank_lower_bound", false);
            if (t.contains("entropy") && !t["entropy"].is_null()) {
                const double h = t["entropy"].get<double>();
                require(std::isfinite(h) && h >= -1e-9, kProtocol, "entropy must be >= 0");
                token.entropy = std::max(h, 0.0);
            }
            sc.tokens.push_back(std::move(token));
        }
        try {
            check_tiling(sc);
        } catch (const Error& e) {
            fail(kProtocol, e.what());
        }
        return sc;
    } catch (const json::exception& e) {
        fail(kProtocol, std::string("malformed score response: ") + e.what());
    }
}

json score_response_json(const ScoredCode& sc, std::uint64_t id) {
    json tokens = json::array();
    for (const ScoredToken& t : sc.tokens) {
        json j{{"byte_start", t.byte_start},
               {"byte_end", t.byte_end},
               {"log_likelihood", t.log_likelihood},
               {"rank", t.rank}};
        if (t.rank_lower_bound) {
            j["rank_lower_bound"] = true;
        }
        if (t.entropy) {
            j["entropy"] = *t.entropy;
        }
        tokens.push_back(std::move(j));
    }
    return json{{"id", id}, {"scorer_id", sc.scorer_id}, {"tokens", std::move(tokens)}};
}

RemoteScorer::RemoteScorer(HttpSettings settings)
    : endpoint_(std::move(settings), ErrorCode::ScorerUnavailable, ErrorCode::ScorerProtocolError) {}

ScoredCode RemoteScorer::score(std::string_view text) const {
    require(!text.empty(), ErrorCode::EmptyCode, "cannot score empty text");
    const std::uint64_t request_id = next_id_.fetch_add(1);
    const json request{{"id", request_id},
                       {"text", std::string(text)},
                       {"want", json::array({"logprob", "rank", "entropy"})}};
    ScoredCode sc = parse_score_response(endpoint_.post("/v1/score", request), text, request_id);
    if (sc.scorer_id.empty()) {
        sc.scorer_id = id();
    }
    return sc;
}

RemoteGenerator::RemoteGenerator(HttpSettings settings)
    : endpoint_(std::move(settings), ErrorCode::GenerationUnavailable, ErrorCode::ProtocolError) {}

std::string RemoteGenerator::generate(std::string_view prompt, const GenerationParams& params) const {
    const json request{{"prompt", std::string(prompt)},
                       {"max_tokens", params.max_tokens},
                       {"temperature", params.temperature},
                       {"top_p", params.top_p}};
    const json response = endpoint_.post("/v1/generate", request);
    if (!response.is_object() || !response.contains("text") || !response["text"].is_string()) {
        fail(ErrorCode::ProtocolError, "generation response lacks a text field");
    }
    return response["text"].get<std::string>();
}

ExternalPerturber::ExternalPerturber(HttpSettings settings, double span_fraction)
    : endpoint_(std::move(settings), ErrorCode::PerturberUnavailable, ErrorCode::ProtocolError),
      span_fraction_(span_fraction) {}

std::vector<std::string> ExternalPerturber::perturb(std::string_view code, std::size_t k, std::uint64_t) const {
    require(k >= 1, ErrorCode::InvalidArgument, "k must be at least 1");
    const json request{{"text", std::string(code)}, {"k", k}, {"span_fraction", span_fraction_}};
    const json response = endpoint_.post("/v1/perturb", request);
    if (!response.is_object() || !response.contains("variants") || !response["variants"].is_array()) {
        fail(ErrorCode::ProtocolError, "perturb response lacks a variants array");
    }
    std::vector<std::string> variants;
    for (const json& v : response["variants"]) {
        if (!v.is_string()) {
            fail(ErrorCode::ProtocolError, "perturb variant is not a string");
        }
        variants.push_back(v.get<std::string>());
    }
    require(variants.size() == k, ErrorCode::ProtocolError,
            "perturber returned " + std::to_string(variants.size()) + " variants, expected " + std::to_string(k));
    return variants;
}

ScorerHandle open_scorer(std::string_view spec, HttpSettings http) {
    constexpr std::string_view kSurrogate = "surrogate:";
    if (spec.substr(0, kSurrogate.size()) == kSurrogate) {
        auto model = std::make_shared<const SurrogateModel>(
            SurrogateModel::load(std::filesystem::path(std::string(spec.substr(kSurrogate.size())))));
        return std::make_shared<SurrogateScorer>(std::move(model));
    }
    if (spec.substr(0, 7) == "http://") {
        http.url = std::string(spec);
        return std::make_shared<RemoteScorer>(std::move(http));
    }
    fail(ErrorCode::InvalidArgument, "scorer must be surrogate:PATH or an http:// URL, got '" + std::string(spec) + "'");
}

}  // namespace codeprov
