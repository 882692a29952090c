#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace codeprov {

enum class Language { python };

Language parse_language(std::string_view name);
std::string_view to_string(Language language) noexcept;

/// The seven syntax-element categories used throughout the toolkit.
enum class Category {
    keyword,
    identifier,
    literal,
    op,
    syntactic_symbol,
    comment,
    whitespace,
};

inline constexpr std::size_t kCategoryCount = 7;

inline constexpr std::array<Category, kCategoryCount> kAllCategories = {
    Category::keyword, Category::identifier,       Category::literal,    Category::op,
    Category::syntactic_symbol, Category::comment, Category::whitespace,
};

/// "keyword", "identifier", "literal", "operator", "syntactic_symbol",
/// "comment", "whitespace".
std::string_view to_string(Category category) noexcept;
Category parse_category(std::string_view name);

struct TokenSpan {
    std::string text;
    std::size_t start = 0;  // byte offset, inclusive
    std::size_t end = 0;    // byte offset, exclusive
    Category category = Category::whitespace;
    std::size_t line = 1;   // 1-based line of `start`
    // Nesting depth inside f-string replacement fields; 0 outside any f-string.
    int fstring_depth = 0;

    bool operator==(const TokenSpan&) const = default;
};

struct LexedCode {
    std::string source;
    std::vector<TokenSpan> spans;
    Language language = Language::python;
};

/// Error-tolerant lossless lexing. Concatenating the span texts reproduces
/// `source`; malformed input still lexes with best-effort categories.
/// Throws InvalidEncoding for non-UTF-8 input.
LexedCode lex(std::string_view source, Language language = Language::python);

/// Span-count fractions per category; sums to 1. Throws EmptyCode when there
/// are no spans.
std::map<Category, double> category_proportions(const LexedCode& code);

/// Span counts per category, indexed by Category.
std::array<std::size_t, kCategoryCount> category_counts(const LexedCode& code);

bool is_python_keyword(std::string_view word) noexcept;

/// One span per line: start, end, category, escaped text (tab separated).
void write_tsv(std::ostream& out, const LexedCode& code);

/// Returns true when `bytes` is well-formed UTF-8.
bool is_valid_utf8(std::string_view bytes) noexcept;

/// Largest prefix length <= `limit` that does not end inside a multi-byte
/// character.
std::size_t utf8_floor(std::string_view bytes, std::size_t limit) noexcept;

inline std::size_t index_of(Category category) noexcept { return static_cast<std::size_t>(category); }

}  // namespace codeprov
