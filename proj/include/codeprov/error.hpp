#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace codeprov {

enum class ErrorCode {
    UnsupportedLanguage,
    InvalidEncoding,
    EmptyCode,
    EmptyCorpus,
    EmptyScore,
    EmptyScores,
    TooFewTokens,
    TooFewSamples,
    AlignmentFailure,
    ScorerUnavailable,
    ScorerProtocolError,
    RankUnavailable,
    EntropyUnavailable,
    PerturberUnavailable,
    ProtocolError,
    GenerationUnavailable,
    InsufficientCorpus,
    InvalidArgument,
    InvalidFormat,
    IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

    /// Transport failures are the only retryable class.
    bool retryable() const noexcept { return code_ == ErrorCode::ScorerUnavailable; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
    if (!condition) {
        fail(code, message);
    }
}

}  // namespace codeprov
