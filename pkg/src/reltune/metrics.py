"""Graded relevance metrics over judgment sets.

Grades run 0-4. NDCG uses exponential gain ``2**g - 1`` with a
``log2(rank + 1)`` discount; ranked documents without a judgment are dropped
before cutting at ``k`` (condensed lists).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from .errors import DataError

GRADES = range(0, 5)
RELEVANCE_THRESHOLD = 3
JUDGMENT_HEADER = ["query", "location", "doc_id", "grade"]


@dataclass(frozen=True)
class JudgmentSet:
    """All graded documents for one (query, location) result set."""

    query: str
    location: str
    judgments: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.judgments:
            raise DataError(f"judgment set ({self.query!r}, {self.location!r}) is empty")
        for doc, grade in self.judgments.items():
            if grade not in GRADES:
                raise DataError(f"grade {grade!r} for {doc!r} outside 0-4")

    @property
    def key(self) -> tuple[str, str]:
        return self.query, self.location

    def relevant(self, threshold: int = RELEVANCE_THRESHOLD) -> set[str]:
        return {d for d, g in self.judgments.items() if binarize(g, threshold)}


def binarize(grade: int, threshold: int = RELEVANCE_THRESHOLD) -> bool:
    return grade >= threshold


def dcg_at_k(grades: Sequence[int], k: int) -> float:
    if k < 1:
        raise ValueError("k must be >= 1")
    return math.fsum((2 ** g - 1) / math.log2(i + 2) for i, g in enumerate(grades[:k]))


def _judged_grades(ranked: Iterable[str], judgments: Mapping[str, int]) -> list[int]:
    return [judgments[d] for d in ranked if d in judgments]


def ideal_dcg(judgments: JudgmentSet, k: int) -> float:
    return dcg_at_k(sorted(judgments.judgments.values(), reverse=True), k)


def ndcg_at_k(ranked: Sequence[str], judgments: JudgmentSet, k: int = 5) -> float:
    ideal = ideal_dcg(judgments, k)
    if ideal == 0:
        return 0.0
    return dcg_at_k(_judged_grades(ranked, judgments.judgments), k) / ideal


def precision_at_k(ranked: Sequence[str], judgments: JudgmentSet, k: int = 5,
                   threshold: int = RELEVANCE_THRESHOLD) -> float:
    """Fraction of the top ``min(k, n)`` judged results that are relevant."""
    if k < 1:
        raise ValueError("k must be >= 1")
    top = _judged_grades(ranked, judgments.judgments)[:k]
    if not top:
        return 0.0
    return sum(binarize(g, threshold) for g in top) / len(top)


def recall(retrieved: Iterable[str], judgments: JudgmentSet, threshold: int = RELEVANCE_THRESHOLD) -> float:
    relevant = judgments.relevant(threshold)
    if not relevant:
        return 1.0
    return len(relevant.intersection(retrieved)) / len(relevant)


@dataclass
class Objective:
    mean: float
    per_set: list[float]


Engine = Callable[[str, str], Sequence[str]]


def mean_objective(judgment_sets: Sequence[JudgmentSet], engine: Engine, k: int = 5) -> Objective:
    """Unweighted mean NDCG@k over judgment sets; ``engine(query, location)``
    returns ranked doc ids."""
    if not judgment_sets:
        raise DataError("no judgment sets to evaluate")
    values = []
    for js in judgment_sets:
        try:
            ranked = engine(js.query, js.location)
        except Exception as exc:
            raise DataError(f"engine failed on ({js.query!r}, {js.location!r}): {exc}") from exc
        values.append(ndcg_at_k(ranked, js, k))
    return Objective(math.fsum(values) / len(values), values)


# -- judgments file ---------------------------------------------------------

def read_judgments(path: str | Path) -> list[JudgmentSet]:
    """Read the TSV judgments file, preserving first-appearance set order."""
    sets: dict[tuple[str, str], dict[str, int]] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter="\t")
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:4]] != JUDGMENT_HEADER:
            raise DataError(f"{path}: expected header {' '.join(JUDGMENT_HEADER)}")
        for lineno, row in enumerate(reader, 2):
            if not row or not "".join(row).strip():
                continue
            if len(row) < 4:
                raise DataError(f"{path}:{lineno}: expected 4 columns")
            query, location, doc, grade = row[:4]
            try:
                g = int(grade)
            except ValueError:
                raise DataError(f"{path}:{lineno}: grade {grade!r} is not an integer") from None
            if g not in GRADES:
                raise DataError(f"{path}:{lineno}: grade {g} outside 0-4")
            bucket = sets.setdefault((query, location), {})
            if doc in bucket:
                raise DataError(f"{path}:{lineno}: duplicate judgment for {doc!r}")
            bucket[doc] = g
    if not sets:
        raise DataError(f"{path}: no judgments")
    return [JudgmentSet(q, loc, j) for (q, loc), j in sets.items()]


def write_judgments(path: str | Path, judgment_sets: Iterable[JudgmentSet]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
        writer.writerow(JUDGMENT_HEADER)
        for js in judgment_sets:
            for doc, grade in js.judgments.items():
                writer.writerow([js.query, js.location, doc, grade])
