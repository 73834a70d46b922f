"""Text analysis: tokenization, token rewrites and light suffix stemming.

Documents and queries go through the same chain. Every job yields two
renderings of its text: *raw* fields (tokenized and lowercased only) and
*analyzed* fields (tokenized, rewritten, stemmed), so a match in either can
carry its own boost.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import DocumentError, RuleError

RAW = "raw"
ANALYZED = "analyzed"

# Index schema: field name -> analysis kind. Order is the canonical field order.
FIELDS: dict[str, str] = {
    "title": RAW,
    "title_analyzed": ANALYZED,
    "description": RAW,
    "description_analyzed": ANALYZED,
    "company": ANALYZED,
    "tags": ANALYZED,
}
TITLE_FIELD = "title_analyzed"

TokenSequence = tuple[str, ...]
RewriteRule = tuple[TokenSequence, TokenSequence]
StemRule = tuple[str, str]


@dataclass(frozen=True)
class AnalyzerConfig:
    rewrite_rules: tuple[RewriteRule, ...] = ()
    stem_rules: tuple[StemRule, ...] = ()
    lowercase: bool = True
    # punctuation characters that are kept inside tokens instead of splitting
    keep_chars: str = ""
    min_stem: int = 3
    _split: re.Pattern = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        keep = "".join(sorted(set(self.keep_chars)))
        if any(c.isspace() for c in keep):
            raise RuleError("whitespace cannot be a kept character")
        body = re.escape(keep)
        if "_" in keep:
            pattern = rf"[^\w{body}]+"
        else:
            pattern = rf"(?:[^\w{body}]|_)+"
        object.__setattr__(self, "_split", re.compile(pattern))
        object.__setattr__(self, "keep_chars", keep)
        _check_stem_rules(self.stem_rules)
        _check_rewrite_rules(self.rewrite_rules)
        if self.min_stem < 1:
            raise RuleError("min_stem must be >= 1")


def _check_stem_rules(rules: Sequence[StemRule]) -> None:
    for suffix, replacement in rules:
        if not suffix:
            raise RuleError("stem rule with empty suffix")
        if len(replacement) >= len(suffix):
            # strictly shortening rules guarantee the stem guard terminates
            raise RuleError(f"stem rule -{suffix} -> {replacement!r} does not shorten tokens")


def _contains(haystack: Sequence[str], needle: Sequence[str]) -> bool:
    n = len(needle)
    return any(tuple(haystack[i:i + n]) == tuple(needle) for i in range(len(haystack) - n + 1))


def _check_rewrite_rules(rules: Sequence[RewriteRule]) -> None:
    for lhs, rhs in rules:
        if not lhs or not rhs:
            raise RuleError(f"rewrite rule with empty side: {lhs!r} -> {rhs!r}")
    # edge i -> j when rule i's replacement contains rule j's pattern
    edges = {
        i: [j for j, (lhs_j, _) in enumerate(rules) if _contains(rules[i][1], lhs_j)]
        for i in range(len(rules))
    }
    state = dict.fromkeys(edges, 0)

    def visit(i: int, path: list[int]) -> None:
        state[i] = 1
        for j in edges[i]:
            if state[j] == 1:
                cyc = path[path.index(j):] + [j] if j in path else [i, j]
                names = " -> ".join(" ".join(rules[c][0]) for c in cyc)
                raise RuleError(f"rewrite rules re-trigger each other: {names}")
            if state[j] == 0:
                visit(j, path + [j])
        state[i] = 2

    for i in edges:
        if state[i] == 0:
            visit(i, [i])


def tokenize(text: str, config: AnalyzerConfig) -> TokenSequence:
    """Split ``text`` into tokens.

    >>> tokenize("Registered Nurse, ICU", AnalyzerConfig())
    ('registered', 'nurse', 'icu')
    """
    text = unicodedata.normalize("NFC", text)
    if config.lowercase:
        text = text.lower()
    return tuple(t for t in config._split.split(text) if t)


def apply_rewrites(tokens: Sequence[str], config: AnalyzerConfig) -> TokenSequence:
    """Single left-to-right pass; at each position the longest matching
    pattern wins (earlier rule on equal length). Replacement tokens are
    emitted as-is and never re-examined."""
    rules = config.rewrite_rules
    if not rules:
        return tuple(tokens)
    out: list[str] = []
    i = 0
    n = len(tokens)
    while i < n:
        best = None
        for lhs, rhs in rules:
            m = len(lhs)
            if (best is None or m > len(best[0])) and tuple(tokens[i:i + m]) == lhs:
                best = (lhs, rhs)
        if best is None:
            out.append(tokens[i])
            i += 1
        else:
            out.extend(best[1])
            i += len(best[0])
    return tuple(out)


@lru_cache(maxsize=200_000)
def _stem(token: str, rules: tuple[StemRule, ...], min_stem: int) -> str:
    for suffix, replacement in rules:
        if not token.endswith(suffix):
            continue
        base = token[: len(token) - len(suffix)]
        if len(base) < min_stem:
            continue
        candidate = base + replacement
        # only accept fixed points so stemming is idempotent
        if _stem(candidate, rules, min_stem) == candidate:
            return candidate
    return token


def stem(token: str, config: AnalyzerConfig) -> str:
    """Apply the first suffix rule whose result is itself a fixed point.

    A rule is skipped when the remaining stem would be shorter than
    ``config.min_stem``.
    """
    return _stem(token, config.stem_rules, config.min_stem)


def analyze(text: str, config: AnalyzerConfig) -> TokenSequence:
    """Full chain: tokenize, rewrite, stem."""
    return tuple(stem(t, config) for t in apply_rewrites(tokenize(text, config), config))


@dataclass(frozen=True)
class Query:
    """A query rendered once per analysis kind."""

    text: str
    raw: TokenSequence
    analyzed: TokenSequence

    def terms(self, kind: str) -> TokenSequence:
        """Deduplicated terms for fields of ``kind``, first-occurrence order."""
        tokens = self.raw if kind == RAW else self.analyzed
        return tuple(dict.fromkeys(tokens))

    def __bool__(self) -> bool:
        return bool(self.raw or self.analyzed)


def analyze_query(text: str, config: AnalyzerConfig) -> Query:
    return Query(text, tokenize(text, config), analyze(text, config))


def as_query(query: Query | str | Iterable[str], config: AnalyzerConfig | None = None) -> Query:
    """Coerce a raw string or a pre-analyzed token list into a ``Query``.

    A token list is used verbatim for both kinds.
    """
    if isinstance(query, Query):
        return query
    if isinstance(query, str):
        return analyze_query(query, config or AnalyzerConfig())
    tokens = tuple(query)
    return Query(" ".join(tokens), tokens, tokens)


def _text(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (list, tuple)):
        return " ".join(_text(v) for v in value)
    raise DocumentError(f"expected text, got {type(value).__name__}")


def analyze_document(job: Mapping, config: AnalyzerConfig) -> dict[str, TokenSequence]:
    """Return one token sequence per schema field for a raw job record."""
    title = _text(job.get("title"))
    ident = job.get("id", "<no id>")
    if not tokenize(title, config):
        raise DocumentError(f"job {ident!r}: missing or empty title")
    description = _text(job.get("description"))
    tags = _text(job.get("tags"))
    return {
        "title": tokenize(title, config),
        "title_analyzed": analyze(title, config),
        "description": tokenize(description, config),
        "description_analyzed": analyze(description, config),
        "company": analyze(_text(job.get("company")), config),
        "tags": analyze(tags, config),
    }


# -- rule files -------------------------------------------------------------

def parse_rules(text: str, source: str = "<rules>") -> AnalyzerConfig:
    """Parse a rule file.

    Lines are ``lhs<TAB>rhs`` rewrites or ``-suffix<TAB>replacement`` stem
    rules; ``@lowercase``, ``@keep`` and ``@min_stem`` set options; ``#``
    starts a comment line. A stem rule without a replacement column strips
    the suffix.
    """
    rewrites: list[RewriteRule] = []
    stems: list[StemRule] = []
    options: dict = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) == 1 and parts[0].startswith("-"):
            parts.append("")
        if len(parts) != 2:
            raise RuleError(f"{source}:{lineno}: expected two tab-separated columns")
        lhs, rhs = parts[0].strip(), parts[1].strip()
        if lhs.startswith("@"):
            name = lhs[1:]
            if name == "lowercase":
                options["lowercase"] = rhs.lower() in ("1", "true", "yes")
            elif name == "keep":
                options["keep_chars"] = parts[1]
            elif name == "min_stem":
                options["min_stem"] = int(rhs)
            else:
                raise RuleError(f"{source}:{lineno}: unknown option {lhs}")
        elif lhs.startswith("-"):
            if not lhs[1:] or " " in lhs or " " in rhs:
                raise RuleError(f"{source}:{lineno}: bad stem rule")
            stems.append((lhs[1:].lower(), rhs.lower()))
        else:
            rewrites.append((tuple(lhs.lower().split()), tuple(rhs.lower().split())))
    try:
        return AnalyzerConfig(tuple(rewrites), tuple(stems), **options)
    except RuleError as exc:
        raise RuleError(f"{source}: {exc}") from None


def format_rules(config: AnalyzerConfig) -> str:
    lines = [f"@lowercase\t{'true' if config.lowercase else 'false'}",
             f"@min_stem\t{config.min_stem}"]
    if config.keep_chars:
        lines.append(f"@keep\t{config.keep_chars}")
    lines += [f"{' '.join(lhs)}\t{' '.join(rhs)}" for lhs, rhs in config.rewrite_rules]
    lines += [f"-{suffix}\t{rep}" for suffix, rep in config.stem_rules]
    return "\n".join(lines) + "\n"


def load_rules(path: str | Path) -> AnalyzerConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise RuleError(f"cannot read rule file {path}: {exc}") from None
    return parse_rules(text, str(path))


def default_analyzer() -> AnalyzerConfig:
    text = resources.files("reltune").joinpath("data/default.rules").read_text(encoding="utf-8")
    return parse_rules(text, "default.rules")
