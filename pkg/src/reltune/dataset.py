"""Evaluation-set construction: query segmentation, stratified sampling,
location and result-set filtering."""

from __future__ import annotations

import csv
import random
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import DataError
from .metrics import RELEVANCE_THRESHOLD, binarize

NER_LABELS = frozenset({
    "workplace", "job_type", "job_title", "generic_title_implied_seniority",
    "seniority", "company", "area_of_interest_specialty", "other",
})


def base_label(tag: str) -> tuple[str, str]:
    """Split ``B-job_title`` into ``("B", "job_title")``."""
    prefix, sep, label = tag.partition("-")
    if not sep or prefix not in ("B", "I") or label not in NER_LABELS:
        raise DataError(f"invalid NER tag {tag!r}")
    return prefix, label


@dataclass(frozen=True)
class TaggedQuery:
    text: str
    ner_tags: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "ner_tags", tuple(self.ner_tags))
        if len(self.ner_tags) != self.token_count or self.token_count == 0:
            raise DataError(f"query {self.text!r}: {len(self.ner_tags)} tags for {self.token_count} tokens")
        for tag in self.ner_tags:
            try:
                base_label(tag)
            except DataError as exc:
                raise DataError(f"query {self.text!r}: {exc}") from None

    @property
    def token_count(self) -> int:
        return len(self.text.split())

    def entities(self) -> tuple[str, ...]:
        """Entity labels in order; an ``I-`` tag continues the open entity
        of the same label, otherwise it starts a new one."""
        out: list[str] = []
        open_label = None
        for tag in self.ner_tags:
            prefix, label = base_label(tag)
            if prefix == "B" or label != open_label:
                out.append(label)
            open_label = label
        return tuple(out)


@dataclass(frozen=True, order=True)
class QuerySegment:
    tag_signature: tuple[str, ...]  # sorted multiset of entity labels
    token_count_bucket: str

    @classmethod
    def of(cls, query: TaggedQuery) -> "QuerySegment":
        n = query.token_count
        return cls(tuple(sorted(query.entities())), str(n) if n < 4 else "4+")

    @property
    def label(self) -> str:
        return f"{'+'.join(self.tag_signature)}/{self.token_count_bucket}"

    @classmethod
    def parse(cls, label: str) -> "QuerySegment":
        sig, sep, bucket = label.rpartition("/")
        if not sep or bucket not in ("1", "2", "3", "4+"):
            raise DataError(f"bad segment label {label!r}")
        return cls(tuple(sorted(sig.split("+"))), bucket)


@dataclass(frozen=True)
class LocationRecord:
    name: str
    population: int

    def __post_init__(self):
        if self.population < 0:
            raise DataError(f"location {self.name!r}: negative population")


@dataclass(frozen=True)
class CandidateResult:
    doc_id: str
    title: str
    company: str
    estimated_grade: int


@dataclass(frozen=True)
class ResultSetCandidate:
    query: str
    location: str
    results: tuple[CandidateResult, ...]

    def relevant_fraction(self, threshold: int = RELEVANCE_THRESHOLD) -> float:
        if not self.results:
            return 0.0
        return sum(binarize(r.estimated_grade, threshold) for r in self.results) / len(self.results)

    def duplicate_count(self) -> int:
        """Results beyond the first sharing an identical (title, company) pair."""
        return len(self.results) - len({(r.title, r.company) for r in self.results})


def segment_queries(queries: Iterable[TaggedQuery]) -> dict[QuerySegment, list[TaggedQuery]]:
    segments: dict[QuerySegment, list[TaggedQuery]] = {}
    for q in queries:
        segments.setdefault(QuerySegment.of(q), []).append(q)
    return segments


def stratified_sample(segments: Mapping[QuerySegment, Sequence[TaggedQuery]], per_segment_quota: int,
                      seed: int) -> list[TaggedQuery]:
    """Up to ``per_segment_quota`` queries from every segment, without
    replacement. Segments are visited in sorted order with one seeded
    generator; each segment keeps its input order."""
    if per_segment_quota < 1:
        raise ValueError("per_segment_quota must be >= 1")
    rng = random.Random(seed)
    out: list[TaggedQuery] = []
    for seg in sorted(segments):
        members = list(segments[seg])
        if len(members) <= per_segment_quota:
            out.extend(members)
        else:
            picked = sorted(rng.sample(range(len(members)), per_segment_quota))
            out.extend(members[i] for i in picked)
    return out


def filter_locations(locations: Sequence[LocationRecord], min_pop: int = 10_000, max_pop: int = 30_000,
                     sample_size: int | None = None, seed: int = 42) -> list[LocationRecord]:
    """Seeded uniform sample of locations with ``min_pop <= population <= max_pop``."""
    if min_pop > max_pop:
        raise ValueError("min_pop must not exceed max_pop")
    eligible = [loc for loc in locations if min_pop <= loc.population <= max_pop]
    if not eligible:
        raise DataError(f"no locations with population in [{min_pop}, {max_pop}]")
    if sample_size is None or sample_size >= len(eligible):
        return eligible
    picked = sorted(random.Random(seed).sample(range(len(eligible)), sample_size))
    return [eligible[i] for i in picked]


def filter_result_sets(candidates: Iterable[ResultSetCandidate], min_results: int = 10, max_results: int = 100,
                       balance_band: tuple[float, float] = (0.3, 0.7),
                       threshold: int = RELEVANCE_THRESHOLD) -> list[ResultSetCandidate]:
    lo, hi = balance_band
    return [c for c in candidates
            if min_results <= len(c.results) <= max_results and lo <= c.relevant_fraction(threshold) <= hi]


def pick_location_per_query(accepted: Iterable[ResultSetCandidate]) -> dict[str, ResultSetCandidate]:
    """Per query, the result set with the fewest duplicate jobs; ties go to
    the lexicographically smallest location."""
    best: dict[str, ResultSetCandidate] = {}
    for c in accepted:
        cur = best.get(c.query)
        if cur is None or (c.duplicate_count(), c.location) < (cur.duplicate_count(), cur.location):
            best[c.query] = c
    return best


# -- files ----------------------------------------------------------------

def _rows(path: str | Path) -> Iterable[tuple[int, list[str]]]:
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    with fh:
        for lineno, row in enumerate(csv.reader(fh, delimiter="\t"), 1):
            if row and "".join(row).strip() and not row[0].startswith("#"):
                yield lineno, row


def read_tagged_queries(path: str | Path) -> list[TaggedQuery]:
    out = []
    for lineno, row in _rows(path):
        if lineno == 1 and row[0].strip().lower() == "query":
            continue
        if len(row) != 2:
            raise DataError(f"{path}:{lineno}: expected query<TAB>tags")
        try:
            out.append(TaggedQuery(row[0].strip(), tuple(row[1].split())))
        except DataError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from None
    return out


def write_tagged_queries(path: str | Path, queries: Iterable[TaggedQuery]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for q in queries:
            fh.write(f"{q.text}\t{' '.join(q.ner_tags)}\n")


def read_locations(path: str | Path) -> list[LocationRecord]:
    out = []
    for lineno, row in _rows(path):
        if lineno == 1 and row[0].strip().lower() == "name":
            continue
        if len(row) != 2:
            raise DataError(f"{path}:{lineno}: expected name<TAB>population")
        try:
            out.append(LocationRecord(row[0].strip(), int(row[1])))
        except ValueError:
            raise DataError(f"{path}:{lineno}: population {row[1]!r} is not an integer") from None
    return out


def write_locations(path: str | Path, locations: Iterable[LocationRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for loc in locations:
            fh.write(f"{loc.name}\t{loc.population}\n")


def read_exclusions(path: str | Path) -> set[str]:
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    return {line.strip() for line in lines if line.strip() and not line.startswith("#")}


def segment_lookup(queries: Iterable[TaggedQuery]) -> dict[str, QuerySegment]:
    return {q.text: QuerySegment.of(q) for q in queries}


def segment_counts(queries: Iterable[TaggedQuery]) -> Counter:
    return Counter(QuerySegment.of(q) for q in queries)
