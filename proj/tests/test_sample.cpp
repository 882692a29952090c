#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "codeprov/error.hpp"
#include "codeprov/sample.hpp"

using namespace codeprov;
namespace fs = std::filesystem;

TEST_CASE("dataset round trip is byte identical") {
    const std::string jsonl =
        "{\"id\":\"a\",\"label\":\"human\",\"language\":\"python\",\"text\":\"x = 1\\n\"}\n"
        "{\"id\":\"b\",\"label\":\"machine\",\"language\":\"python\",\"text\":\"y = \\\"é\\\"\\n\","
        "\"prompt\":\"def f():\\n\",\"source_model\":\"m\",\"temperature\":0.2,\"pair\":\"p0\"}\n";
    std::istringstream in(jsonl);
    const DatasetReadResult r = read_dataset(in);
    REQUIRE(r.issues.empty());
    REQUIRE(r.samples.size() == 2);
    CHECK(r.samples[1].label == Label::machine);
    CHECK(r.samples[1].temperature == 0.2);
    CHECK(r.samples[1].text == "y = \"é\"\n");
    std::ostringstream out;
    write_dataset(out, r.samples);
    CHECK(out.str() == jsonl);
}

TEST_CASE("malformed lines are reported with line numbers") {
    std::istringstream in(
        "{\"id\":\"a\",\"label\":\"human\",\"text\":\"x\"}\n"
        "not json\n"
        "\n"
        "{\"id\":\"b\",\"label\":\"robot\",\"text\":\"x\"}\n"
        "{\"id\":\"a\",\"label\":\"human\",\"text\":\"dup\"}\n"
        "{\"id\":\"c\",\"label\":\"human\"}\n"
        "{\"id\":\"d\",\"label\":\"human\",\"text\":\"\\u00ff\",\"language\":\"java\"}\n");
    const DatasetReadResult r = read_dataset(in);
    CHECK(r.samples.size() == 1);
    std::vector<std::size_t> lines;
    for (const DatasetIssue& issue : r.issues) {
        lines.push_back(issue.line);
    }
    CHECK(lines == std::vector<std::size_t>{2, 4, 5, 6, 7});
    CHECK(r.lines_read == 7);
}

TEST_CASE("dataset files and corpora") {
    const fs::path dir = fs::temp_directory_path() / "codeprov_sample_test";
    fs::remove_all(dir);
    fs::create_directories(dir / "pkg");
    std::ofstream(dir / "b.py") << "b = 2\n";
    std::ofstream(dir / "pkg" / "a.py") << "a = 1\n";
    std::ofstream(dir / "notes.txt") << "ignored\n";
    const Corpus c = load_corpus(dir);
    REQUIRE(c.samples.size() == 2);
    CHECK(c.samples[0].text == "b = 2\n");
    CHECK(c.samples[1].text == "a = 1\n");

    CodeSample s;
    s.id = "only";
    s.text = "pass\n";
    write_dataset(dir / "d.jsonl", {s});
    CHECK(read_dataset(dir / "d.jsonl").samples == std::vector<CodeSample>{s});
    CHECK(load_corpus(dir / "d.jsonl").samples.size() == 1);
    CHECK_THROWS_AS(load_corpus(dir / "missing"), Error);
    fs::remove_all(dir);
}

TEST_CASE("function extraction") {
    const std::string source =
        "import os\n"
        "\n"
        "def top(a,\n"
        "        b):\n"
        "    \"\"\"Doc.\"\"\"\n"
        "    def inner():\n"
        "        return 1\n"
        "    return a + b\n"
        "\n"
        "# trailing comment\n"
        "class K:\n"
        "    async def method(self):\n"
        "        s = '''\n"
        "not indented'''\n"
        "        return s\n"
        "\n"
        "x = 3\n";
    const std::vector<std::string> fns = extract_functions(source);
    REQUIRE(fns.size() == 2);
    CHECK(fns[0] ==
          "def top(a,\n        b):\n    \"\"\"Doc.\"\"\"\n    def inner():\n        return 1\n    return a + b\n");
    CHECK(fns[1] == "async def method(self):\n    s = '''\nnot indented'''\n    return s\n");
    CHECK(extract_functions("x = 1\n").empty());
}

TEST_CASE("prompt extraction") {
    CHECK(extract_prompt("def f(a, b):\n    \"\"\"Add.\"\"\"\n    return a + b\n") ==
          "def f(a, b):\n    \"\"\"Add.\"\"\"\n    ");
    CHECK(extract_prompt("def g(x: int) -> dict[str, int]:\n    # one\n    # two\n    return {}\n") ==
          "def g(x: int) -> dict[str, int]:\n    # one\n    # two\n    ");
    CHECK(extract_prompt("def h():\n    return 0\n") == "def h():\n    ");
    CHECK_FALSE(extract_prompt("x = 1\n").has_value());
    CHECK_FALSE(extract_prompt("def broken(\n").has_value());
}

TEST_CASE("labels and blank text") {
    CHECK(parse_label("machine") == Label::machine);
    CHECK_THROWS_AS(parse_label("bot"), Error);
    CHECK(is_blank(" \n\t"));
    CHECK_FALSE(is_blank(" x "));
}
