#include "codeprov/lexing.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <string>

#include "codeprov/error.hpp"

namespace codeprov {

namespace {

constexpr std::string_view kKeywords[] = {
    "and",   "as",       "assert", "async",  "await",    "break",  "class",
    "continue", "def",   "del",    "elif",   "else",     "except", "finally",
    "for",   "from",     "global", "if",     "import",   "in",     "is",
    "lambda", "nonlocal", "not",   "or",     "pass",     "raise",  "return",
    "try",   "while",    "with",   "yield",
};

// Longest match first.
constexpr std::string_view kPunctuators[] = {
    "**=", "//=", ">>=", "<<=", "...",
    "->", ":=", "**", "//", "<<", ">>", "<=", ">=", "==", "!=", "<>",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "@=",
    "+", "-", "*", "/", "%", "@", "&", "|", "^", "~", "<", ">", "=", "!", ";",
    "(", ")", "[", "]", "{", "}", ",", ":", ".",
};

Category punctuator_category(std::string_view p) {
    if (p == "...") {
        return Category::literal;  // the Ellipsis constant
    }
    if (p.size() == 1 && std::string_view("()[]{},:.").find(p[0]) != std::string_view::npos) {
        return Category::syntactic_symbol;
    }
    return Category::op;
}

bool is_space_char(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_ident_start(char c) {
    const auto u = static_cast<unsigned char>(c);
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || u >= 0x80;
}

bool is_ident_char(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }

bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool is_string_prefix(std::string_view word) {
    if (word.size() > 2) {
        return false;
    }
    std::string lower;
    for (char c : word) {
        lower += static_cast<char>(c | 0x20);
    }
    static constexpr std::string_view kPrefixes[] = {
        "r", "u", "b", "f", "t", "br", "rb", "fr", "rf", "tr", "rt",
    };
    return std::find(std::begin(kPrefixes), std::end(kPrefixes), lower) != std::end(kPrefixes);
}

class PythonLexer {
public:
    PythonLexer(std::string_view src, std::vector<TokenSpan>& out) : src_(src), out_(out) {}

    void run() {
        std::size_t pos = lex_tokens(0, 0, nullptr);
        // The top level never stops early; anything left is a lexer bug.
        if (pos != src_.size()) {
            emit(pos, src_.size(), Category::op, 0);
        }
    }

private:
    // Stop condition for lexing an f-string replacement field.
    struct FieldStop {
        std::string_view quote;  // enclosing quote sequence
        bool triple = false;
    };

    void emit(std::size_t start, std::size_t end, Category category, int depth) {
        if (start >= end) {
            return;
        }
        TokenSpan span;
        span.text = std::string(src_.substr(start, end - start));
        span.start = start;
        span.end = end;
        span.category = category;
        span.line = line_;
        span.fstring_depth = depth;
        line_ += static_cast<std::size_t>(std::count(span.text.begin(), span.text.end(), '\n'));
        out_.push_back(std::move(span));
    }

    bool at(std::size_t pos, std::string_view s) const { return src_.substr(pos, s.size()) == s; }

    // Lexes tokens from `pos`. At the top level (stop == nullptr) runs to the
    // end of input; inside a replacement field stops before the character
    // that ends the expression part ('}', '!', ':' or the enclosing quote).
    std::size_t lex_tokens(std::size_t pos, int depth, const FieldStop* stop) {
        int brackets = 0;
        while (pos < src_.size()) {
            const char c = src_[pos];
            if (stop != nullptr) {
                if (at(pos, stop->quote)) {
                    return pos;
                }
                if (!stop->triple && c == '\n') {
                    return pos;
                }
                if (brackets == 0 && (c == '}' || c == ':' || (c == '!' && !at(pos, "!=")))) {
                    return pos;
                }
            }
            if (is_space_char(c)) {
                std::size_t end = pos;
                while (end < src_.size() && is_space_char(src_[end])) {
                    if (stop != nullptr && !stop->triple && src_[end] == '\n') {
                        break;
                    }
                    ++end;
                }
                emit(pos, end, Category::whitespace, depth);
                pos = end;
            } else if (c == '#') {
                std::size_t end = src_.find('\n', pos);
                if (end == std::string_view::npos) {
                    end = src_.size();
                }
                if (end > pos + 1 && src_[end - 1] == '\r') {
                    --end;
                }
                emit(pos, end, Category::comment, depth);
                pos = end;
            } else if (is_ident_start(c)) {
                std::size_t end = pos;
                while (end < src_.size() && is_ident_char(src_[end])) {
                    ++end;
                }
                const std::string_view word = src_.substr(pos, end - pos);
                if (end < src_.size() && (src_[end] == '"' || src_[end] == '\'') &&
                    is_string_prefix(word)) {
                    pos = lex_string(pos, end, depth, stop);
                } else {
                    Category category = Category::identifier;
                    if (word == "True" || word == "False" || word == "None") {
                        category = Category::literal;
                    } else if (is_python_keyword(word)) {
                        category = Category::keyword;
                    }
                    emit(pos, end, category, depth);
                    pos = end;
                }
            } else if (is_digit(c) || (c == '.' && pos + 1 < src_.size() && is_digit(src_[pos + 1]))) {
                const std::size_t end = scan_number(pos);
                emit(pos, end, Category::literal, depth);
                pos = end;
            } else if (c == '"' || c == '\'') {
                pos = lex_string(pos, pos, depth, stop);
            } else if (c == '\\') {
                // Explicit line joining (or a stray backslash).
                emit(pos, pos + 1, Category::op, depth);
                ++pos;
            } else {
                std::string_view matched;
                for (std::string_view p : kPunctuators) {
                    if (at(pos, p)) {
                        matched = p;
                        break;
                    }
                }
                if (matched.empty()) {
                    emit(pos, pos + 1, Category::op, depth);
                    ++pos;
                    continue;
                }
                if (stop != nullptr) {
                    if (matched == "(" || matched == "[" || matched == "{") {
                        ++brackets;
                    } else if ((matched == ")" || matched == "]" || matched == "}") && brackets > 0) {
                        --brackets;
                    }
                }
                emit(pos, pos + matched.size(), punctuator_category(matched), depth);
                pos += matched.size();
            }
        }
        return pos;
    }

    std::size_t scan_number(std::size_t pos) const {
        std::size_t end = pos;
        auto digits = [&](auto accept) {
            while (end < src_.size() && (accept(src_[end]) || src_[end] == '_')) {
                ++end;
            }
        };
        if (src_[pos] == '0' && pos + 1 < src_.size() &&
            std::string_view("xXoObB").find(src_[pos + 1]) != std::string_view::npos) {
            end = pos + 2;
            digits([](char c) { return std::isxdigit(static_cast<unsigned char>(c)) != 0; });
            return end;
        }
        digits(is_digit);
        if (end < src_.size() && src_[end] == '.') {
            ++end;
            digits(is_digit);
        }
        if (end < src_.size() && (src_[end] == 'e' || src_[end] == 'E')) {
            std::size_t exp = end + 1;
            if (exp < src_.size() && (src_[exp] == '+' || src_[exp] == '-')) {
                ++exp;
            }
            if (exp < src_.size() && is_digit(src_[exp])) {
                end = exp;
                digits(is_digit);
            }
        }
        if (end < src_.size() && (src_[end] == 'j' || src_[end] == 'J')) {
            ++end;
        }
        return end;
    }

    // `start` is the beginning of the prefix, `quote_pos` the first quote.
    std::size_t lex_string(std::size_t start, std::size_t quote_pos, int depth, const FieldStop* outer) {
        const char q = src_[quote_pos];
        const bool triple = at(quote_pos, std::string(3, q));
        const std::string quote(triple ? 3 : 1, q);
        std::string prefix;
        for (char c : src_.substr(start, quote_pos - start)) {
            prefix += static_cast<char>(c | 0x20);
        }
        const bool formatted = prefix.find('f') != std::string::npos || prefix.find('t') != std::string::npos;
        const bool raw = prefix.find('r') != std::string::npos;
        std::size_t pos = quote_pos + quote.size();

        if (formatted) {
            return lex_fstring(start, pos, quote, triple, raw, depth);
        }
        while (pos < src_.size()) {
            if (src_[pos] == '\\') {
                pos += 2;
                continue;
            }
            if (at(pos, quote)) {
                pos += quote.size();
                emit(start, pos, Category::literal, depth);
                return pos;
            }
            if (!triple && src_[pos] == '\n') {
                break;  // unterminated single-line string
            }
            if (outer != nullptr && at(pos, outer->quote)) {
                break;  // unterminated string inside an f-string field
            }
            ++pos;
        }
        pos = std::min(pos, src_.size());
        emit(start, pos, Category::literal, depth);
        return pos;
    }

    std::size_t lex_fstring(std::size_t literal_start, std::size_t pos, const std::string& quote,
                            bool triple, bool raw, int depth) {
        const int inner = depth + 1;
        const FieldStop stop{quote, triple};
        while (pos < src_.size()) {
            const char c = src_[pos];
            if (c == '\\' && pos + 1 < src_.size()) {
                const char next = src_[pos + 1];
                if (!(raw && (next == '{' || next == '}'))) {
                    pos += 2;
                    continue;
                }
                ++pos;
                continue;
            }
            if (at(pos, "{{") || at(pos, "}}")) {
                pos += 2;
                continue;
            }
            if (c == '{') {
                emit(literal_start, pos, Category::literal, inner);
                pos = lex_field(pos, inner, stop);
                literal_start = pos;
                continue;
            }
            if (at(pos, quote)) {
                pos += quote.size();
                emit(literal_start, pos, Category::literal, inner);
                return pos;
            }
            if (!triple && c == '\n') {
                break;
            }
            ++pos;
        }
        pos = std::min(pos, src_.size());
        emit(literal_start, pos, Category::literal, inner);
        return pos;
    }

    // `pos` is at '{'. Returns the position after the closing '}' (or where
    // lexing stopped on malformed input).
    std::size_t lex_field(std::size_t pos, int depth, const FieldStop& stop) {
        emit(pos, pos + 1, Category::syntactic_symbol, depth);
        pos = lex_tokens(pos + 1, depth, &stop);
        if (pos < src_.size() && src_[pos] == '!') {
            emit(pos, pos + 1, Category::op, depth);
            ++pos;
            std::size_t end = pos;
            while (end < src_.size() && is_ident_char(src_[end])) {
                ++end;
            }
            emit(pos, end, Category::identifier, depth);
            pos = end;
        }
        if (pos < src_.size() && src_[pos] == ':') {
            emit(pos, pos + 1, Category::syntactic_symbol, depth);
            ++pos;
            std::size_t spec_start = pos;
            while (pos < src_.size() && src_[pos] != '}' && !at(pos, stop.quote) &&
                   !(!stop.triple && src_[pos] == '\n')) {
                if (src_[pos] == '{') {
                    emit(spec_start, pos, Category::literal, depth);
                    pos = lex_field(pos, depth, stop);
                    spec_start = pos;
                    continue;
                }
                ++pos;
            }
            emit(spec_start, pos, Category::literal, depth);
        }
        if (pos < src_.size() && src_[pos] == '}') {
            emit(pos, pos + 1, Category::syntactic_symbol, depth);
            ++pos;
        }
        return pos;
    }

    std::string_view src_;
    std::vector<TokenSpan>& out_;
    std::size_t line_ = 1;
};

void escape_tsv(std::ostream& out, std::string_view text) {
    for (char c : text) {
        switch (c) {
            case '\\': out << "\\\\"; break;
            case '\t': out << "\\t"; break;
            case '\n': out << "\\n"; break;
            case '\r': out << "\\r"; break;
            default: out << c;
        }
    }
}

}  // namespace

Language parse_language(std::string_view name) {
    if (name == "python" || name == "py") {
        return Language::python;
    }
    fail(ErrorCode::UnsupportedLanguage, "language '" + std::string(name) + "' is not supported");
}

std::string_view to_string(Language language) noexcept {
    switch (language) {
        case Language::python: return "python";
    }
    return "python";
}

std::string_view to_string(Category category) noexcept {
    switch (category) {
        case Category::keyword: return "keyword";
        case Category::identifier: return "identifier";
        case Category::literal: return "literal";
        case Category::op: return "operator";
        case Category::syntactic_symbol: return "syntactic_symbol";
        case Category::comment: return "comment";
        case Category::whitespace: return "whitespace";
    }
    return "whitespace";
}

Category parse_category(std::string_view name) {
    for (Category c : kAllCategories) {
        if (to_string(c) == name) {
            return c;
        }
    }
    fail(ErrorCode::InvalidArgument, "unknown category '" + std::string(name) + "'");
}

bool is_python_keyword(std::string_view word) noexcept {
    return std::find(std::begin(kKeywords), std::end(kKeywords), word) != std::end(kKeywords);
}

bool is_valid_utf8(std::string_view bytes) noexcept {
    std::size_t i = 0;
    while (i < bytes.size()) {
        const auto b0 = static_cast<unsigned char>(bytes[i]);
        if (b0 < 0x80) {
            ++i;
            continue;
        }
        std::size_t len;
        std::uint32_t cp;
        if ((b0 & 0xE0) == 0xC0) {
            len = 2;
            cp = b0 & 0x1F;
        } else if ((b0 & 0xF0) == 0xE0) {
            len = 3;
            cp = b0 & 0x0F;
        } else if ((b0 & 0xF8) == 0xF0) {
            len = 4;
            cp = b0 & 0x07;
        } else {
            return false;
        }
        if (i + len > bytes.size()) {
            return false;
        }
        for (std::size_t k = 1; k < len; ++k) {
            const auto b = static_cast<unsigned char>(bytes[i + k]);
            if ((b & 0xC0) != 0x80) {
                return false;
            }
            cp = (cp << 6) | (b & 0x3F);
        }
        const bool overlong = (len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000);
        if (overlong || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
            return false;
        }
        i += len;
    }
    return true;
}

std::size_t utf8_floor(std::string_view bytes, std::size_t limit) noexcept {
    if (limit >= bytes.size()) {
        return bytes.size();
    }
    // Step back over continuation bytes so the cut lands on a lead byte.
    while (limit > 0 && (static_cast<unsigned char>(bytes[limit]) & 0xC0) == 0x80) {
        --limit;
    }
    return limit;
}

LexedCode lex(std::string_view source, Language language) {
    (void)to_string(language);
    require(is_valid_utf8(source), ErrorCode::InvalidEncoding, "source is not valid UTF-8");
    LexedCode code;
    code.source = std::string(source);
    code.language = language;
    PythonLexer(code.source, code.spans).run();
    return code;
}

std::array<std::size_t, kCategoryCount> category_counts(const LexedCode& code) {
    std::array<std::size_t, kCategoryCount> counts{};
    for (const TokenSpan& span : code.spans) {
        ++counts[index_of(span.category)];
    }
    return counts;
}

std::map<Category, double> category_proportions(const LexedCode& code) {
    require(!code.spans.empty(), ErrorCode::EmptyCode, "no spans to measure");
    const auto counts = category_counts(code);
    const auto total = static_cast<double>(code.spans.size());
    std::map<Category, double> fractions;
    for (Category c : kAllCategories) {
        fractions[c] = static_cast<double>(counts[index_of(c)]) / total;
    }
    return fractions;
}

void write_tsv(std::ostream& out, const LexedCode& code) {
    for (const TokenSpan& span : code.spans) {
        out << span.start << '\t' << span.end << '\t' << to_string(span.category) << '\t';
        escape_tsv(out, span.text);
        out << '\n';
    }
}

}  // namespace codeprov
