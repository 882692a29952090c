#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "codeprov/lexing.hpp"

namespace codeprov {

enum class Label { human, machine };

std::string_view to_string(Label label) noexcept;
Label parse_label(std::string_view name);

struct CodeSample {
    std::string id;
    std::string text;
    Label label = Label::human;
    std::optional<std::string> prompt;
    std::optional<std::string> source_model;
    std::optional<double> temperature;
    Language language = Language::python;
    // Links the human and machine halves of one benchmark pair.
    std::optional<std::string> pair;

    bool operator==(const CodeSample&) const = default;
};

struct Corpus {
    std::string name;
    std::vector<CodeSample> samples;
};

/// A malformed dataset line; `line` is 1-based.
struct DatasetIssue {
    std::size_t line = 0;
    std::string message;
};

struct DatasetReadResult {
    std::vector<CodeSample> samples;
    std::vector<DatasetIssue> issues;
    std::size_t lines_read = 0;
};

/// Parses JSONL CodeSample records. Malformed lines are collected in
/// `issues` rather than thrown; blank lines are ignored.
DatasetReadResult read_dataset(std::istream& in);
DatasetReadResult read_dataset(const std::filesystem::path& path);

void write_dataset(std::ostream& out, const std::vector<CodeSample>& samples);
void write_dataset(const std::filesystem::path& path, const std::vector<CodeSample>& samples);

std::string to_jsonl_line(const CodeSample& sample);

/// Loads a corpus from a JSONL dataset, a single source file, or a directory
/// (every *.py file below it, sorted by path, one sample per file).
Corpus load_corpus(const std::filesystem::path& path);

/// Source files below `root` with the given extension, sorted.
std::vector<std::filesystem::path> list_source_files(const std::filesystem::path& root,
                                                     std::string_view extension = ".py");

std::string read_file(const std::filesystem::path& path);

/// Splits Python source into function definitions (top-level functions and
/// methods). Each result is dedented so its `def` line starts at column 0;
/// decorators are not included.
std::vector<std::string> extract_functions(std::string_view source);

/// Prompt for a function sample: the signature line(s) plus a leading
/// docstring or comment block, including the whitespace that follows.
/// Returns nullopt when the text has no extractable signature.
std::optional<std::string> extract_prompt(std::string_view function_text);

/// True when the text contains no non-whitespace character.
bool is_blank(std::string_view text) noexcept;

}  // namespace codeprov
