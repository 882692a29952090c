#include "codeprov/error.hpp"

namespace codeprov {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::UnsupportedLanguage: return "UnsupportedLanguage";
        case ErrorCode::InvalidEncoding: return "InvalidEncoding";
        case ErrorCode::EmptyCode: return "EmptyCode";
        case ErrorCode::EmptyCorpus: return "EmptyCorpus";
        case ErrorCode::EmptyScore: return "EmptyScore";
        case ErrorCode::EmptyScores: return "EmptyScores";
        case ErrorCode::TooFewTokens: return "TooFewTokens";
        case ErrorCode::TooFewSamples: return "TooFewSamples";
        case ErrorCode::AlignmentFailure: return "AlignmentFailure";
        case ErrorCode::ScorerUnavailable: return "ScorerUnavailable";
        case ErrorCode::ScorerProtocolError: return "ScorerProtocolError";
        case ErrorCode::RankUnavailable: return "RankUnavailable";
        case ErrorCode::EntropyUnavailable: return "EntropyUnavailable";
        case ErrorCode::PerturberUnavailable: return "PerturberUnavailable";
        case ErrorCode::ProtocolError: return "ProtocolError";
        case ErrorCode::GenerationUnavailable: return "GenerationUnavailable";
        case ErrorCode::InsufficientCorpus: return "InsufficientCorpus";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::InvalidFormat: return "InvalidFormat";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace codeprov
