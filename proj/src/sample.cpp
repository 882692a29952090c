#include "codeprov/sample.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "codeprov/error.hpp"

namespace codeprov {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string_view to_string(Label label) noexcept {
    return label == Label::machine ? "machine" : "human";
}

Label parse_label(std::string_view name) {
    if (name == "human") {
        return Label::human;
    }
    if (name == "machine") {
        return Label::machine;
    }
    fail(ErrorCode::InvalidFormat, "unknown label '" + std::string(name) + "'");
}

std::string to_jsonl_line(const CodeSample& sample) {
    ordered_json j;
    j["id"] = sample.id;
    j["label"] = to_string(sample.label);
    j["language"] = to_string(sample.language);
    j["text"] = sample.text;
    if (sample.prompt) {
        j["prompt"] = *sample.prompt;
    }
    if (sample.source_model) {
        j["source_model"] = *sample.source_model;
    }
    if (sample.temperature) {
        j["temperature"] = *sample.temperature;
    }
    if (sample.pair) {
        j["pair"] = *sample.pair;
    }
    return j.dump();
}

namespace {

CodeSample sample_from_json(const ordered_json& j) {
    if (!j.is_object()) {
        fail(ErrorCode::InvalidFormat, "record is not a JSON object");
    }
    CodeSample s;
    s.id = j.at("id").get<std::string>();
    s.text = j.at("text").get<std::string>();
    s.label = parse_label(j.at("label").get<std::string>());
    if (j.contains("language")) {
        s.language = parse_language(j["language"].get<std::string>());
    }
    if (j.contains("prompt") && !j["prompt"].is_null()) {
        s.prompt = j["prompt"].get<std::string>();
    }
    if (j.contains("source_model") && !j["source_model"].is_null()) {
        s.source_model = j["source_model"].get<std::string>();
    }
    if (j.contains("temperature") && !j["temperature"].is_null()) {
        s.temperature = j["temperature"].get<double>();
    }
    if (j.contains("pair") && !j["pair"].is_null()) {
        s.pair = j["pair"].get<std::string>();
    }
    if (s.id.empty()) {
        fail(ErrorCode::InvalidFormat, "empty id");
    }
    if (is_blank(s.text)) {
        fail(ErrorCode::InvalidFormat, "text is empty after trimming");
    }
    return s;
}

}  // namespace

DatasetReadResult read_dataset(std::istream& in) {
    DatasetReadResult result;
    std::unordered_set<std::string> ids;
    std::string line;
    while (std::getline(in, line)) {
        ++result.lines_read;
        if (is_blank(line)) {
            continue;
        }
        try {
            CodeSample s = sample_from_json(ordered_json::parse(line));
            if (!ids.insert(s.id).second) {
                fail(ErrorCode::InvalidFormat, "duplicate id '" + s.id + "'");
            }
            result.samples.push_back(std::move(s));
        } catch (const std::exception& e) {
            result.issues.push_back({result.lines_read, e.what()});
        }
    }
    return result;
}

DatasetReadResult read_dataset(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCode::IoError, "cannot open dataset " + path.string());
    return read_dataset(in);
}

void write_dataset(std::ostream& out, const std::vector<CodeSample>& samples) {
    for (const CodeSample& s : samples) {
        out << to_jsonl_line(s) << '\n';
    }
}

void write_dataset(const fs::path& path, const std::vector<CodeSample>& samples) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorCode::IoError, "cannot write dataset " + path.string());
    write_dataset(out, samples);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCode::IoError, "cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::vector<fs::path> list_source_files(const fs::path& root, std::string_view extension) {
    std::vector<fs::path> files;
    std::error_code ec;
    for (auto it = fs::recursive_directory_iterator(root, fs::directory_options::skip_permission_denied, ec);
         it != fs::recursive_directory_iterator(); it.increment(ec)) {
        if (ec) {
            break;
        }
        if (it->is_regular_file(ec) && it->path().extension() == extension) {
            files.push_back(it->path());
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

Corpus load_corpus(const fs::path& path) {
    Corpus corpus;
    corpus.name = path.filename().string();
    require(fs::exists(path), ErrorCode::IoError, "no such corpus: " + path.string());
    if (fs::is_directory(path)) {
        for (const fs::path& file : list_source_files(path)) {
            CodeSample s;
            s.id = fs::relative(file, path).generic_string();
            s.text = read_file(file);
            corpus.samples.push_back(std::move(s));
        }
        return corpus;
    }
    if (path.extension() == ".jsonl") {
        DatasetReadResult r = read_dataset(path);
        if (!r.issues.empty()) {
            fail(ErrorCode::InvalidFormat, path.string() + ":" + std::to_string(r.issues.front().line) + ": " +
                                               r.issues.front().message);
        }
        corpus.samples = std::move(r.samples);
        return corpus;
    }
    CodeSample s;
    s.id = path.filename().string();
    s.text = read_file(path);
    corpus.samples.push_back(std::move(s));
    return corpus;
}

bool is_blank(std::string_view text) noexcept {
    return std::all_of(text.begin(), text.end(), [](char c) {
        return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
    });
}

namespace {

struct LogicalLine {
    std::size_t line_start;   // byte offset of the physical line start
    std::size_t first_token;  // index into spans
    std::size_t indent;       // columns (bytes) of leading whitespace
};

// Statement-starting lines: lines beginning outside brackets and not after a
// backslash continuation. Comment-only lines are not statements.
std::vector<LogicalLine> logical_lines(const LexedCode& code) {
    std::vector<LogicalLine> lines;
    int brackets = 0;
    bool at_line_start = true;
    bool continuation = false;
    const std::string& src = code.source;
    for (std::size_t i = 0; i < code.spans.size(); ++i) {
        const TokenSpan& span = code.spans[i];
        if (span.category == Category::whitespace) {
            if (span.text.find('\n') != std::string::npos && brackets == 0 && !continuation) {
                at_line_start = true;
            }
            if (span.text.find('\n') != std::string::npos) {
                continuation = false;
            }
            continue;
        }
        if (at_line_start && span.category != Category::comment) {
            const std::size_t nl = span.start == 0 ? std::string::npos : src.rfind('\n', span.start - 1);
            const std::size_t line_start = nl == std::string::npos ? 0 : nl + 1;
            lines.push_back({line_start, i, span.start - line_start});
        }
        if (span.category != Category::comment) {
            at_line_start = false;
        }
        continuation = span.text == "\\";
        if (span.fstring_depth == 0 && span.category == Category::syntactic_symbol) {
            if (span.text == "(" || span.text == "[" || span.text == "{") {
                ++brackets;
            } else if ((span.text == ")" || span.text == "]" || span.text == "}") && brackets > 0) {
                --brackets;
            }
        }
    }
    return lines;
}

std::string dedent(std::string_view block, std::size_t columns) {
    std::string out;
    std::size_t pos = 0;
    while (pos < block.size()) {
        std::size_t nl = block.find('\n', pos);
        const std::size_t end = nl == std::string_view::npos ? block.size() : nl + 1;
        std::string_view line = block.substr(pos, end - pos);
        std::size_t strip = 0;
        while (strip < columns && strip < line.size() && (line[strip] == ' ' || line[strip] == '\t')) {
            ++strip;
        }
        out.append(line.substr(strip));
        pos = end;
    }
    return out;
}

}  // namespace

std::vector<std::string> extract_functions(std::string_view source) {
    if (!is_valid_utf8(source)) {
        return {};
    }
    const LexedCode code = lex(source);
    const std::vector<LogicalLine> lines = logical_lines(code);
    std::vector<std::string> functions;
    std::size_t covered_until = 0;
    for (std::size_t li = 0; li < lines.size(); ++li) {
        const LogicalLine& line = lines[li];
        if (line.line_start < covered_until) {
            continue;  // nested inside an extracted function
        }
        std::size_t t = line.first_token;
        if (code.spans[t].text == "async" && t + 2 < code.spans.size()) {
            t += 2;
        }
        if (code.spans[t].category != Category::keyword || code.spans[t].text != "def") {
            continue;
        }
        std::size_t end = source.size();
        for (std::size_t lj = li + 1; lj < lines.size(); ++lj) {
            if (lines[lj].indent <= line.indent) {
                end = lines[lj].line_start;
                break;
            }
        }
        covered_until = end;
        std::string_view block = source.substr(line.line_start, end - line.line_start);
        // Drop trailing blank lines and dedented trailing comments.
        std::size_t cut = block.size();
        while (cut > 0) {
            const std::size_t prev_nl = cut >= 2 ? block.rfind('\n', cut - 2) : std::string_view::npos;
            const std::size_t tail_start = prev_nl == std::string_view::npos ? 0 : prev_nl + 1;
            const std::string_view tail = block.substr(tail_start, cut - tail_start);
            const std::size_t first = tail.find_first_not_of(" \t\r\n\f");
            const bool blank = first == std::string_view::npos;
            const bool low_comment = !blank && tail[first] == '#' && first <= line.indent;
            if ((!blank && !low_comment) || tail_start == 0) {
                break;
            }
            cut = tail_start;
        }
        block = block.substr(0, cut);
        std::string text = dedent(block, line.indent);
        if (!is_blank(text)) {
            functions.push_back(std::move(text));
        }
    }
    return functions;
}

std::optional<std::string> extract_prompt(std::string_view function_text) {
    if (!is_valid_utf8(function_text)) {
        return std::nullopt;
    }
    const LexedCode code = lex(function_text);
    const auto& spans = code.spans;
    std::size_t i = 0;
    while (i < spans.size() && !(spans[i].category == Category::keyword && spans[i].text == "def")) {
        ++i;
    }
    if (i == spans.size()) {
        return std::nullopt;
    }
    int brackets = 0;
    std::size_t colon = spans.size();
    for (std::size_t j = i + 1; j < spans.size(); ++j) {
        const TokenSpan& s = spans[j];
        if (s.fstring_depth != 0 || s.category != Category::syntactic_symbol) {
            continue;
        }
        if (s.text == "(" || s.text == "[" || s.text == "{") {
            ++brackets;
        } else if (s.text == ")" || s.text == "]" || s.text == "}") {
            brackets = std::max(0, brackets - 1);
        } else if (s.text == ":" && brackets == 0) {
            colon = j;
            break;
        }
    }
    if (colon == spans.size()) {
        return std::nullopt;
    }
    std::size_t end = spans[colon].end;
    std::size_t j = colon + 1;
    auto skip_ws = [&](std::size_t k) {
        while (k < spans.size() && spans[k].category == Category::whitespace) {
            ++k;
        }
        return k;
    };
    auto is_docstring = [](const TokenSpan& s) {
        if (s.category != Category::literal || s.fstring_depth != 0) {
            return false;
        }
        const std::size_t q = s.text.find_first_of("\"'");
        return q != std::string::npos && q <= 2 &&
               s.text.find_first_not_of("rRuUbB") == q;
    };
    std::size_t k = skip_ws(j);
    if (k < spans.size() && is_docstring(spans[k])) {
        end = spans[k].end;
        j = k + 1;
    } else {
        while (k < spans.size() && spans[k].category == Category::comment) {
            end = spans[k].end;
            j = k + 1;
            k = skip_ws(j);
        }
    }
    // Trailing newline and indentation belong to the prompt.
    if (j < spans.size() && spans[j].category == Category::whitespace) {
        end = spans[j].end;
    }
    return std::string(function_text.substr(0, end));
}

}  // namespace codeprov
