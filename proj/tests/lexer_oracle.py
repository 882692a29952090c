"""Compares `codeprov lex` spans with the tokens of Python's own tokenizer.

usage: lexer_oracle.py CODEPROV_BINARY PATH...
"""
import io
import keyword
import pathlib
import subprocess
import sys
import tokenize

SKIP = {tokenize.NL, tokenize.NEWLINE, tokenize.INDENT, tokenize.DEDENT, tokenize.ENDMARKER,
        tokenize.ENCODING}
SOFT_KEYWORDS = {"match", "case", "_"}


def char_offsets(text):
    # (row, col) -> character offset; rows are 1-based
    starts = [0]
    for line in io.StringIO(text):
        starts.append(starts[-1] + len(line))
    return lambda row, col: starts[row - 1] + col


def reference_tokens(text):
    at = char_offsets(text)
    tokens = []
    for tok in tokenize.generate_tokens(io.StringIO(text).readline):
        if tok.type in SKIP:
            continue
        tokens.append((at(*tok.start), at(*tok.end), tok.type, tok.string))
    return tokens


def codeprov_spans(binary, path, text):
    out = subprocess.run([binary, "lex", str(path)], check=True, capture_output=True).stdout
    raw = text.encode("utf-8")
    # byte offset -> character offset
    index = {}
    chars = 0
    for i in range(len(raw) + 1):
        if i == len(raw) or (raw[i] & 0xC0) != 0x80:
            index[i] = chars
            chars += 1
    spans = []
    for line in out.decode("utf-8").split("\n")[:-1]:
        start, end, category, _ = line.split("\t", 3)
        spans.append((index[int(start)], index[int(end)], category))
    return spans


def expected_categories(kind, string):
    if kind == tokenize.NAME:
        if string in ("True", "False", "None"):
            return {"literal"}
        if string in SOFT_KEYWORDS:
            return {"keyword", "identifier"}
        return {"keyword"} if keyword.iskeyword(string) else {"identifier"}
    if kind in (tokenize.NUMBER, tokenize.STRING):
        return {"literal"}
    if kind == tokenize.COMMENT:
        return {"comment"}
    if kind == tokenize.OP:
        if string == "...":
            return {"literal"}
        return {"syntactic_symbol"} if string in "()[]{},:." else {"operator"}
    return set()


def check(binary, path):
    text = path.read_text(encoding="utf-8")
    try:
        reference = reference_tokens(text)
    except (tokenize.TokenError, IndentationError, SyntaxError):
        return []
    fstrings = [(s, e) for s, e, kind, string in reference
                if kind == tokenize.STRING and string[:string.find(string[-1])].lower().count("f")]
    inside = lambda s, e: any(fs <= s and e <= fe for fs, fe in fstrings)
    ours = {(s, e): c for s, e, c in codeprov_spans(binary, path, text)
            if c != "whitespace" and not inside(s, e) and text[s:e] != "\\"}
    problems = []
    seen = set()
    for s, e, kind, string in reference:
        if inside(s, e) and (s, e) not in fstrings:
            continue
        if (s, e) in fstrings:
            seen.update(k for k in ours if inside(*k))
            continue
        seen.add((s, e))
        if (s, e) not in ours:
            problems.append(f"{path}: missing span {s}-{e} {string!r}")
        elif ours[(s, e)] not in expected_categories(kind, string):
            problems.append(f"{path}: {string!r} is {ours[(s, e)]}")
    for key in sorted(set(ours) - seen):
        problems.append(f"{path}: extra span {key[0]}-{key[1]} {text[key[0]:key[1]]!r}")
    return problems


def main():
    binary = sys.argv[1]
    files = []
    for root in sys.argv[2:]:
        root = pathlib.Path(root)
        files.extend(sorted(root.rglob("*.py")) if root.is_dir() else [root])
    problems = []
    for path in files:
        try:
            path.read_text(encoding="utf-8")
        except UnicodeDecodeError:
            continue
        problems.extend(check(binary, path))
    for p in problems[:50]:
        print(p)
    print(f"{len(files)} files, {len(problems)} mismatches")
    return 1 if problems or not files else 0


if __name__ == "__main__":
    sys.exit(main())
