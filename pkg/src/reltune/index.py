"""Frozen in-memory inverted index with per-field BM25 statistics."""

from __future__ import annotations

import hashlib
import json
import math
import zlib
from dataclasses import dataclass
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

from .analyzer import FIELDS, AnalyzerConfig, Query, analyze_document, as_query, format_rules, parse_rules
from .errors import DataError, DocumentError, EmptyQueryError

MAGIC = b"BFIX1\n"


@dataclass(frozen=True)
class Bm25Params:
    k: float = 1.2
    b: float = 0.75

    def __post_init__(self):
        if not (self.k >= 0 and math.isfinite(self.k)):
            raise ValueError(f"BM25 k must be finite and >= 0, got {self.k}")
        if not 0 <= self.b <= 1:
            raise ValueError(f"BM25 b must lie in [0, 1], got {self.b}")


@dataclass(frozen=True)
class FieldStats:
    doc_count: int
    avg_field_length: float
    doc_freq: Mapping[str, int]


@dataclass(frozen=True)
class DocMeta:
    title: str
    company: str
    location: str


def idf(doc_count: int, doc_freq: int) -> float:
    """Smoothed, never-negative inverse document frequency."""
    return math.log(1 + (doc_count - doc_freq + 0.5) / (doc_freq + 0.5))


def bm25_formula(tf: float, length: float, avg_length: float, idf_value: float, k: float, b: float) -> float:
    if tf <= 0:
        return 0.0
    # the saturation ratio is formed first so that k = 0 yields exactly idf
    return idf_value * ((tf * (k + 1)) / (tf + k * (1 - b + b * length / avg_length)))


class Index:
    """Postings, field lengths and statistics for a frozen corpus.

    Construct through :func:`build_index` or :meth:`Index.load`.
    """

    def __init__(self, postings, field_lengths, docs, analyzer: AnalyzerConfig, snapshot_id: str):
        # postings[field][term] -> {doc_id: tf}; field_lengths[field][doc_id] -> tokens
        self._postings = {f: MappingProxyType({t: MappingProxyType(p) for t, p in terms.items()})
                          for f, terms in postings.items()}
        self._lengths = {f: MappingProxyType(lengths) for f, lengths in field_lengths.items()}
        self._docs = MappingProxyType(dict(docs))
        self.doc_ids: tuple[str, ...] = tuple(sorted(docs))
        self.analyzer = analyzer
        self.snapshot_id = snapshot_id
        stats = {}
        for f in FIELDS:
            lengths = [n for n in self._lengths[f].values() if n > 0]
            avg = sum(lengths) / len(lengths) if lengths else 0.0
            df = MappingProxyType({t: len(p) for t, p in self._postings[f].items()})
            stats[f] = FieldStats(len(lengths), avg, df)
        self.stats = MappingProxyType(stats)

    def __len__(self) -> int:
        return len(self._docs)

    def __contains__(self, doc_id) -> bool:
        return doc_id in self._docs

    @property
    def fields(self) -> tuple[str, ...]:
        return tuple(FIELDS)

    def meta(self, doc_id: str) -> DocMeta:
        try:
            return self._docs[doc_id]
        except KeyError:
            raise DataError(f"unknown document {doc_id!r}") from None

    def postings(self, field: str, term: str) -> Mapping[str, int]:
        return self._field(field).get(term, MappingProxyType({}))

    def terms(self, field: str) -> Iterable[str]:
        return self._field(field).keys()

    def field_length(self, field: str, doc_id: str) -> int:
        self._field(field)
        try:
            return self._lengths[field][doc_id]
        except KeyError:
            raise DataError(f"unknown document {doc_id!r}") from None

    def tf(self, field: str, term: str, doc_id: str) -> int:
        return self.postings(field, term).get(doc_id, 0)

    def idf(self, field: str, term: str) -> float:
        st = self.stats[field]
        return idf(st.doc_count, st.doc_freq.get(term, 0))

    def _field(self, field: str):
        try:
            return self._postings[field]
        except KeyError:
            raise DataError(f"unknown field {field!r}; known: {', '.join(FIELDS)}") from None

    # -- serialization ------------------------------------------------------

    def to_bytes(self) -> bytes:
        payload = {
            "snapshot_id": self.snapshot_id,
            "analyzer": format_rules(self.analyzer),
            "docs": {d: [m.title, m.company, m.location] for d, m in sorted(self._docs.items())},
            "lengths": {f: dict(sorted(self._lengths[f].items())) for f in FIELDS},
            "postings": {f: {t: dict(sorted(p.items())) for t, p in sorted(self._postings[f].items())}
                         for f in FIELDS},
        }
        body = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")
        return MAGIC + zlib.compress(body, 9)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Index":
        if not data.startswith(MAGIC):
            raise DataError("not an index file (bad magic header)")
        try:
            payload = json.loads(zlib.decompress(data[len(MAGIC):]))
        except (zlib.error, ValueError) as exc:
            raise DataError(f"corrupt index file: {exc}") from None
        docs = {d: DocMeta(*m) for d, m in payload["docs"].items()}
        return cls(payload["postings"], payload["lengths"], docs,
                   parse_rules(payload["analyzer"], "<index>"), payload["snapshot_id"])

    def save(self, path: str | Path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path: str | Path) -> "Index":
        try:
            data = Path(path).read_bytes()
        except OSError as exc:
            raise DataError(f"cannot read index {path}: {exc}") from None
        return cls.from_bytes(data)


def build_index(corpus: Iterable[Mapping], analyzer: AnalyzerConfig) -> Index:
    postings: dict[str, dict[str, dict[str, int]]] = {f: {} for f in FIELDS}
    lengths: dict[str, dict[str, int]] = {f: {} for f in FIELDS}
    docs: dict[str, DocMeta] = {}
    digest = hashlib.sha256(format_rules(analyzer).encode())
    for n, job in enumerate(corpus, 1):
        doc_id = job.get("id")
        if not isinstance(doc_id, str) or not doc_id:
            raise DocumentError(f"record {n}: missing string id")
        if doc_id in docs:
            raise DocumentError(f"record {n}: duplicate doc id {doc_id!r}")
        analyzed = analyze_document(job, analyzer)
        for f, tokens in analyzed.items():
            lengths[f][doc_id] = len(tokens)
            counts: dict[str, int] = {}
            for t in tokens:
                counts[t] = counts.get(t, 0) + 1
            for t, c in counts.items():
                postings[f].setdefault(t, {})[doc_id] = c
        docs[doc_id] = DocMeta(str(job.get("title") or ""), str(job.get("company") or ""),
                               str(job.get("location") or ""))
        digest.update(json.dumps(job, sort_keys=True).encode())
    if not docs:
        raise DataError("cannot build an index from an empty corpus")
    return Index(postings, lengths, docs, analyzer, digest.hexdigest()[:16])


def read_corpus(path: str | Path) -> Iterable[dict]:
    """Yield job records from a JSON-lines file; blank lines are skipped."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DocumentError(f"{path}:{lineno}: unparseable record: {exc.msg}") from None
            if not isinstance(record, dict):
                raise DocumentError(f"{path}:{lineno}: record is not a JSON object")
            yield record


def bm25(index: Index, field: str, term: str, doc: str, params: Bm25Params = Bm25Params()) -> float:
    """BM25 contribution of ``term`` in ``field`` of ``doc``; 0 when absent."""
    length = index.field_length(field, doc)
    tf = index.tf(field, term, doc)
    if tf == 0:
        return 0.0
    st = index.stats[field]
    return bm25_formula(tf, length, st.avg_field_length, idf(st.doc_count, st.doc_freq[term]),
                        params.k, params.b)


def match_candidates(index: Index, query: Query | Sequence[str], retrieval_fields: Sequence[str]) -> set[str]:
    """Docs containing at least one query token in at least one retrieval field."""
    query = as_query(query, index.analyzer)
    if not query:
        raise EmptyQueryError(f"query {query.text!r} has no tokens after analysis")
    found: set[str] = set()
    for f in retrieval_fields:
        kind = FIELDS.get(f)
        if kind is None:
            raise DataError(f"unknown field {f!r}")
        for t in query.terms(kind):
            found.update(index.postings(f, t))
    return found
