#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "codeprov/error.hpp"

namespace codeprov {

/// Process exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitInputError = 2;   // some inputs failed, others succeeded
inline constexpr int kExitUsage = 64;
inline constexpr int kExitDataError = 65;
inline constexpr int kExitNoInput = 66;
inline constexpr int kExitUnavailable = 69;

int exit_code_for(ErrorCode code) noexcept;

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

struct CliIo {
    std::istream& in;
    std::ostream& out;
    std::ostream& err;
    EnvLookup env;  // empty: process environment
};

/// Runs the tool; `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, CliIo io);

}  // namespace codeprov
