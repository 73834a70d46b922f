"""End-to-end construction of a judgment collection.

Sampled queries are searched in sampled locations with a proxy ("legacy")
config; result sets of the right size and relevance balance are kept, one
location per query is chosen, and the chosen results are graded from a
label pool that stands in for human annotators.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .dataset import (CandidateResult, LocationRecord, ResultSetCandidate, TaggedQuery, filter_locations,
                      filter_result_sets, pick_location_per_query, segment_queries, stratified_sample)
from .errors import DataError, EmptyQueryError
from .index import Index
from .metrics import GRADES, RELEVANCE_THRESHOLD, JudgmentSet
from .relevance import RelevanceConfig, score_and_rank

log = logging.getLogger(__name__)

Labels = Mapping[tuple[str, str], int]


def proxy_grade(rel_score: float) -> int:
    """Map a [0, 1) relevance score onto the 0-4 grade scale in equal bands."""
    return min(4, int(rel_score * 5))


@dataclass
class EvalsetSummary:
    sampled_queries: int = 0
    sampled_locations: int = 0
    candidate_sets: int = 0
    accepted_sets: int = 0
    chosen_sets: int = 0
    unlabeled_results: int = 0
    chosen: list[ResultSetCandidate] = field(default_factory=list)


def candidate_sets(index: Index, queries: Sequence[TaggedQuery], locations: Sequence[LocationRecord],
                   legacy: RelevanceConfig, labels: Labels | None = None) -> list[ResultSetCandidate]:
    """Search every (query, location) pair. Estimated grades come from
    ``labels`` when given, otherwise from the legacy relevance score."""
    out = []
    for q in queries:
        for loc in locations:
            try:
                ranked = score_and_rank(q.text, index, None, legacy, location=loc.name)
            except EmptyQueryError:
                continue
            results = []
            for r in ranked:
                meta = index.meta(r.doc_id)
                grade = labels.get((q.text, r.doc_id), 0) if labels is not None else proxy_grade(r.rel_score)
                results.append(CandidateResult(r.doc_id, meta.title, meta.company, grade))
            out.append(ResultSetCandidate(q.text, loc.name, tuple(results)))
    return out


def build_evalset(index: Index, queries: Sequence[TaggedQuery], locations: Sequence[LocationRecord],
                  labels: Labels, *, legacy: RelevanceConfig | None = None, exclude: set[str] = frozenset(),
                  quota: int = 5, min_pop: int = 10_000, max_pop: int = 30_000,
                  location_sample: int | None = None, min_results: int = 10, max_results: int = 100,
                  balance_band: tuple[float, float] = (0.3, 0.7), threshold: int = RELEVANCE_THRESHOLD,
                  estimate_from_labels: bool = False, seed: int = 42) -> tuple[list[JudgmentSet], EvalsetSummary]:
    summary = EvalsetSummary()
    kept = [q for q in queries if q.text not in exclude]
    sampled = stratified_sample(segment_queries(kept), quota, seed)
    locs = filter_locations(locations, min_pop, max_pop, location_sample, seed)
    summary.sampled_queries, summary.sampled_locations = len(sampled), len(locs)
    cands = candidate_sets(index, sampled, locs, legacy or RelevanceConfig(),
                           labels if estimate_from_labels else None)
    summary.candidate_sets = len(cands)
    accepted = filter_result_sets(cands, min_results, max_results, balance_band, threshold)
    summary.accepted_sets = len(accepted)
    chosen = pick_location_per_query(accepted)
    order = {q.text: i for i, q in enumerate(sampled)}
    sets = []
    for query in sorted(chosen, key=order.__getitem__):
        c = chosen[query]
        graded = {}
        for r in c.results:
            grade = labels.get((query, r.doc_id))
            if grade is None:
                summary.unlabeled_results += 1
                continue
            graded[r.doc_id] = grade
        if graded:
            sets.append(JudgmentSet(query, c.location, graded))
            summary.chosen.append(c)
    summary.chosen_sets = len(sets)
    if summary.unlabeled_results:
        log.warning("%d chosen results had no label and were left unjudged", summary.unlabeled_results)
    return sets, summary


def read_labels(path: str | Path) -> dict[tuple[str, str], int]:
    """Label pool TSV: ``query<TAB>doc_id<TAB>grade`` with a header row."""
    out: dict[tuple[str, str], int] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter="\t")
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["query", "doc_id", "grade"]:
            raise DataError(f"{path}: expected header query doc_id grade")
        for lineno, row in enumerate(reader, 2):
            if not row:
                continue
            if len(row) != 3:
                raise DataError(f"{path}:{lineno}: expected 3 columns")
            try:
                grade = int(row[2])
            except ValueError:
                raise DataError(f"{path}:{lineno}: bad grade {row[2]!r}") from None
            if grade not in GRADES:
                raise DataError(f"{path}:{lineno}: grade {grade} outside 0-4")
            out[row[0], row[1]] = grade
    return out


def write_labels(path: str | Path, labels: Labels) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["query", "doc_id", "grade"])
        for (q, d), g in labels.items():
            w.writerow([q, d, g])
