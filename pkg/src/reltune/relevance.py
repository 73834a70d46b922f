"""The tunable relevance function.

A document's raw score is a combination of boosted per-field BM25 values,
scaled down for every query token the document lacks and scaled up when the
whole query appears in the title::

    raw = base * coverage_penalty_base ** missing * (1 + title_complete_bonus)
    rel_score = raw / (1 + raw)

``base`` is term-centric (per term, best boosted field; summed over terms),
field-centric (per field, boosted sum over terms; summed over fields) or a
fixed mix of the two.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

from .analyzer import ANALYZED, FIELDS, RAW, TITLE_FIELD, AnalyzerConfig, Query, as_query
from .errors import ConfigError, DataError, EmptyQueryError
from .index import Bm25Params, Index, bm25, match_candidates
from .kvformat import format_kv, parse_kv, read_kv

TERM_CENTRIC = "term"
FIELD_CENTRIC = "field"
HYBRID = "hybrid"

DEFAULT_BOOSTS = {
    "title": 2.0,
    "title_analyzed": 1.5,
    "description": 0.3,
    "description_analyzed": 0.3,
    "company": 1.0,
    "tags": 0.5,
}


@dataclass(frozen=True)
class Combiner:
    mode: str = TERM_CENTRIC
    # weight of the term-centric score; only used in hybrid mode
    mix: float = 0.5

    def __post_init__(self):
        if self.mode not in (TERM_CENTRIC, FIELD_CENTRIC, HYBRID):
            raise ConfigError(f"unknown combiner {self.mode!r}")
        if not 0 <= self.mix <= 1:
            raise ConfigError(f"combiner mix must lie in [0, 1], got {self.mix}")

    @classmethod
    def parse(cls, text: str) -> "Combiner":
        mode, _, mix = str(text).strip().lower().partition(":")
        mode = {"term_centric": TERM_CENTRIC, "field_centric": FIELD_CENTRIC}.get(mode, mode)
        if mode == HYBRID:
            return cls(HYBRID, float(mix) if mix else 0.5)
        if mix:
            raise ConfigError(f"combiner {mode!r} takes no mix weight")
        return cls(mode)

    def __str__(self) -> str:
        return f"{HYBRID}:{self.mix!r}" if self.mode == HYBRID else self.mode


@dataclass(frozen=True)
class RelevanceConfig:
    field_boosts: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_BOOSTS))
    default_bm25: Bm25Params = Bm25Params()
    bm25_params: Mapping[str, Bm25Params] = field(default_factory=dict)
    combiner: Combiner = Combiner()
    coverage_penalty_base: float = 0.5
    title_complete_bonus: float = 0.3
    retrieval_fields: tuple[str, ...] = tuple(FIELDS)

    def __post_init__(self):
        object.__setattr__(self, "retrieval_fields", tuple(self.retrieval_fields))
        for name, boost in self.field_boosts.items():
            if name not in FIELDS:
                raise ConfigError(f"boost for unknown field {name!r}")
            if not (boost >= 0 and math.isfinite(boost)):
                raise ConfigError(f"boost.{name} must be a finite non-negative number")
        for name in self.bm25_params:
            if name not in FIELDS:
                raise ConfigError(f"BM25 parameters for unknown field {name!r}")
        if not 0 < self.coverage_penalty_base <= 1:
            raise ConfigError("coverage_penalty_base must lie in (0, 1]")
        if not (self.title_complete_bonus >= 0 and math.isfinite(self.title_complete_bonus)):
            raise ConfigError("title_complete_bonus must be >= 0")
        if not self.retrieval_fields:
            raise ConfigError("at least one retrieval field is required")
        for name in self.retrieval_fields:
            if name not in FIELDS:
                raise ConfigError(f"unknown retrieval field {name!r}")
        # scored fields must be retrievable, otherwise scoreable docs could be missed
        hidden = [f for f, b in self.field_boosts.items() if b > 0 and f not in self.retrieval_fields]
        if hidden:
            raise ConfigError(f"boosted fields not in retrieval_fields: {', '.join(hidden)}")

    def boost(self, name: str) -> float:
        return self.field_boosts.get(name, 0.0)

    def params(self, name: str) -> Bm25Params:
        return self.bm25_params.get(name, self.default_bm25)

    def with_overrides(self, overrides: Mapping[str, object]) -> "RelevanceConfig":
        """Return a copy with ``key -> value`` overrides in config-file key syntax."""
        boosts = dict(self.field_boosts)
        per_field = {f: [p.k, p.b] for f, p in self.bm25_params.items()}
        default = [self.default_bm25.k, self.default_bm25.b]
        changes: dict = {}
        for key, value in overrides.items():
            parts = key.split(".")
            try:
                if parts[0] == "boost" and len(parts) == 2:
                    boosts[parts[1]] = float(value)
                elif parts[0] == "bm25" and len(parts) == 3 and parts[2] in ("k", "b"):
                    slot = 0 if parts[2] == "k" else 1
                    if parts[1] == "default":
                        default[slot] = float(value)
                    else:
                        if parts[1] not in FIELDS:
                            raise ConfigError(f"BM25 parameters for unknown field {parts[1]!r}")
                        per_field.setdefault(parts[1], [None, None])[slot] = float(value)
                elif key == "combiner":
                    changes["combiner"] = Combiner.parse(value)
                elif key == "combiner.mix":
                    changes["combiner"] = Combiner(HYBRID, float(value))
                elif key in ("coverage_penalty_base", "title_complete_bonus"):
                    changes[key] = float(value)
                elif key == "retrieval_fields":
                    if isinstance(value, str):
                        value = [v for v in value.replace(",", " ").split()]
                    changes[key] = tuple(value)
                else:
                    raise ConfigError(f"unknown config key {key!r}")
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key}: {value!r} ({exc})") from None
        try:
            default_params = Bm25Params(*default)
            params = {f: Bm25Params(k if k is not None else default_params.k,
                                    b if b is not None else default_params.b)
                      for f, (k, b) in per_field.items()}
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return replace(self, field_boosts=boosts, default_bm25=default_params, bm25_params=params, **changes)

    def to_kv(self) -> dict:
        items: dict = {f"boost.{f}": float(self.boost(f)) for f in FIELDS if f in self.field_boosts}
        items["bm25.default.k"] = float(self.default_bm25.k)
        items["bm25.default.b"] = float(self.default_bm25.b)
        for f in FIELDS:
            if f in self.bm25_params:
                items[f"bm25.{f}.k"] = float(self.bm25_params[f].k)
                items[f"bm25.{f}.b"] = float(self.bm25_params[f].b)
        items["combiner"] = str(self.combiner)
        items["coverage_penalty_base"] = float(self.coverage_penalty_base)
        items["title_complete_bonus"] = float(self.title_complete_bonus)
        items["retrieval_fields"] = list(self.retrieval_fields)
        return items

    def dumps(self) -> str:
        return format_kv(self.to_kv())

    @classmethod
    def from_kv(cls, items: Mapping[str, object]) -> "RelevanceConfig":
        """Defaults overridden by ``items``. Default boosts of fields left out
        of an explicit ``retrieval_fields`` list are dropped."""
        base = cls()
        if "retrieval_fields" in items:
            fields = items["retrieval_fields"]
            if isinstance(fields, str):
                fields = fields.replace(",", " ").split()
            base = replace(base, field_boosts={f: b for f, b in DEFAULT_BOOSTS.items() if f in fields},
                           retrieval_fields=tuple(fields))
        return base.with_overrides(items)

    @classmethod
    def loads(cls, text: str, source: str = "<config>") -> "RelevanceConfig":
        return cls.from_kv(parse_kv(text, source))

    @classmethod
    def load(cls, path: str | Path) -> "RelevanceConfig":
        return cls.from_kv(read_kv(path))


@dataclass(frozen=True)
class Contribution:
    field: str
    term: str
    boost: float
    bm25: float
    contribution: float


@dataclass(frozen=True)
class ScoreExplanation:
    rows: tuple[Contribution, ...]
    matched_token_count: int
    missing_tokens: tuple[str, ...]
    coverage_factor: float
    title_bonus: float
    base_score: float
    raw_score: float

    def reconstruct(self) -> float:
        return math.fsum(r.contribution for r in self.rows) * self.coverage_factor * self.title_bonus

    def format(self) -> str:
        lines = [f"{'field':<22}{'term':<16}{'boost':>8}{'bm25':>10}{'contrib':>10}"]
        for r in self.rows:
            lines.append(f"{r.field:<22}{r.term:<16}{r.boost:>8.3f}{r.bm25:>10.4f}{r.contribution:>10.4f}")
        lines.append(f"base = {self.base_score:.6f}")
        lines.append(f"matched tokens = {self.matched_token_count}; missing = {list(self.missing_tokens)}")
        lines.append(f"coverage factor = {self.coverage_factor:.6f}; title bonus factor = {self.title_bonus:.6f}")
        lines.append(f"raw = {self.raw_score:.6f}; rel = {self.raw_score / (1 + self.raw_score):.6f}")
        return "\n".join(lines)


@dataclass(frozen=True)
class ScoredResult:
    doc_id: str
    rel_score: float
    raw_score: float
    explanation: ScoreExplanation | None = None


def _kind_fields(config: RelevanceConfig, kind: str) -> list[str]:
    return [f for f in config.retrieval_fields if FIELDS[f] == kind]


def term_centric_score(query: Query | Sequence[str], doc: str, index: Index, config: RelevanceConfig) -> float:
    query = as_query(query, index.analyzer)
    total = 0.0
    for kind in (RAW, ANALYZED):
        fields = _kind_fields(config, kind)
        if not fields:
            continue
        for t in query.terms(kind):
            total += max(config.boost(f) * bm25(index, f, t, doc, config.params(f)) for f in fields)
    return total


def field_centric_score(query: Query | Sequence[str], doc: str, index: Index, config: RelevanceConfig) -> float:
    query = as_query(query, index.analyzer)
    total = 0.0
    for f in config.retrieval_fields:
        s = 0.0
        for t in query.terms(FIELDS[f]):
            s += bm25(index, f, t, doc, config.params(f))
        total += config.boost(f) * s
    return total


def coverage(query: Query, doc: str, index: Index) -> tuple[tuple[str, ...], bool]:
    """Missing analyzed tokens (absent from every analyzed field) and
    whether all tokens occur in the analyzed title."""
    terms = query.terms(ANALYZED)
    analyzed = [f for f, kind in FIELDS.items() if kind == ANALYZED]
    missing = tuple(t for t in terms if not any(index.tf(f, t, doc) for f in analyzed))
    in_title = bool(terms) and all(index.tf(TITLE_FIELD, t, doc) for t in terms)
    return missing, in_title


def combined_score(query: Query | Sequence[str], doc: str, index: Index, config: RelevanceConfig,
                   explain: bool = False) -> ScoredResult:
    query = as_query(query, index.analyzer)
    mode = config.combiner.mode
    w = config.combiner.mix
    if mode == TERM_CENTRIC:
        base = term_centric_score(query, doc, index, config)
    elif mode == FIELD_CENTRIC:
        base = field_centric_score(query, doc, index, config)
    else:
        base = w * term_centric_score(query, doc, index, config) + (1 - w) * field_centric_score(
            query, doc, index, config)
    missing, in_title = coverage(query, doc, index)
    cov = config.coverage_penalty_base ** len(missing)
    bonus = 1 + config.title_complete_bonus if in_title else 1.0
    raw = base * cov * bonus
    explanation = None
    if explain:
        explanation = ScoreExplanation(
            rows=_contributions(query, doc, index, config),
            matched_token_count=len(query.terms(ANALYZED)) - len(missing),
            missing_tokens=missing,
            coverage_factor=cov,
            title_bonus=bonus,
            base_score=base,
            raw_score=raw,
        )
    return ScoredResult(doc, raw / (1 + raw), raw, explanation)


def _contributions(query: Query, doc: str, index: Index, config: RelevanceConfig) -> tuple[Contribution, ...]:
    mode = config.combiner.mode
    w_term = {TERM_CENTRIC: 1.0, FIELD_CENTRIC: 0.0}.get(mode, config.combiner.mix)
    rows = []
    for kind in (RAW, ANALYZED):
        fields = _kind_fields(config, kind)
        for t in query.terms(kind):
            values = [(f, config.boost(f), bm25(index, f, t, doc, config.params(f))) for f in fields]
            if not values:
                continue
            winner = max(range(len(values)), key=lambda i: values[i][1] * values[i][2])
            for i, (f, boost, score) in enumerate(values):
                if score == 0 or boost == 0:
                    continue
                boosted = boost * score
                contrib = w_term * (boosted if i == winner else 0.0) + (1 - w_term) * boosted
                rows.append(Contribution(f, t, boost, score, contrib))
    return tuple(rows)


def in_location(index: Index, doc: str, location: str | None) -> bool:
    return not location or index.meta(doc).location.casefold() == location.casefold()


def score_and_rank(query: str | Query, index: Index, analyzer: AnalyzerConfig | None, config: RelevanceConfig,
                   limit: int | None = None, location: str | None = None,
                   explain: bool = False) -> list[ScoredResult]:
    """Retrieve, score and order candidates; ties go to the smaller doc id."""
    query = as_query(query, analyzer or index.analyzer)
    if not query.terms(ANALYZED) and not query.terms(RAW):
        raise EmptyQueryError(f"query {query.text!r} has no tokens after analysis")
    candidates = [d for d in match_candidates(index, query, config.retrieval_fields)
                  if in_location(index, d, location)]
    results = [combined_score(query, d, index, config, explain=explain) for d in candidates]
    results.sort(key=lambda r: (-r.rel_score, r.doc_id))
    return results if limit is None else results[:limit]


def explain(query: str | Query, doc: str, index: Index, analyzer: AnalyzerConfig | None,
            config: RelevanceConfig) -> ScoreExplanation:
    if doc not in index:
        raise DataError(f"unknown document {doc!r}")
    query = as_query(query, analyzer or index.analyzer)
    return combined_score(query, doc, index, config, explain=True).explanation
