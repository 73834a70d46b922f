"""Per-segment comparison of the tuned config against a baseline."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .dataset import QuerySegment
from .evaluation import Evaluator
from .index import Index
from .metrics import JudgmentSet
from .relevance import RelevanceConfig

UNSEGMENTED = "unsegmented"


@dataclass(frozen=True)
class QueryDelta:
    query: str
    location: str
    segment: str
    ndcg: float
    baseline_ndcg: float
    top_doc: str

    @property
    def delta(self) -> float:
        return self.ndcg - self.baseline_ndcg


@dataclass(frozen=True)
class SegmentSummary:
    segment: str
    n_sets: int
    mean_ndcg: float
    baseline_mean_ndcg: float

    @property
    def delta(self) -> float:
        return self.mean_ndcg - self.baseline_mean_ndcg


@dataclass
class SegmentReport:
    overall: float
    baseline_overall: float
    segments: list[SegmentSummary]
    queries: list[QueryDelta]  # sorted by delta ascending (biggest losses first)

    def losers(self, n: int) -> list[QueryDelta]:
        return self.queries[:n]

    def segments_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["segment", "n_sets", "mean_ndcg@5", "baseline_mean_ndcg@5", "delta"])
        for s in self.segments:
            w.writerow([s.segment, s.n_sets, repr(s.mean_ndcg), repr(s.baseline_mean_ndcg), repr(s.delta)])
        w.writerow(["ALL", sum(s.n_sets for s in self.segments), repr(self.overall),
                    repr(self.baseline_overall), repr(self.overall - self.baseline_overall)])
        return buf.getvalue()

    def queries_csv(self, limit: int | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["query", "location", "segment", "ndcg@5", "baseline_ndcg@5", "delta", "top_doc"])
        for q in self.queries[:limit]:
            w.writerow([q.query, q.location, q.segment, repr(q.ndcg), repr(q.baseline_ndcg),
                        repr(q.delta), q.top_doc])
        return buf.getvalue()


def segment_report(config: RelevanceConfig, baseline: RelevanceConfig, judgment_sets: Sequence[JudgmentSet],
                   index: Index, segments: Mapping[str, QuerySegment] | None = None,
                   evaluator: Evaluator | None = None) -> SegmentReport:
    """Compare ``config`` (usually a tuning run's incumbent) with ``baseline``.

    ``segments`` maps query text to its segment; unmapped queries are
    reported as ``unsegmented``.
    """
    evaluator = evaluator or Evaluator(index, judgment_sets)
    segments = segments or {}
    prepared = evaluator._prepare(config.retrieval_fields)
    best = evaluator.evaluate(config).per_set
    base = evaluator.evaluate(baseline).per_set
    rows = []
    for p, v, b in zip(prepared, best, base):
        seg = segments.get(p.js.query)
        ranked = evaluator.rank(p, config)
        rows.append(QueryDelta(p.js.query, p.js.location, seg.label if seg else UNSEGMENTED, v, b,
                               ranked[0] if ranked else ""))
    groups: dict[str, list[QueryDelta]] = {}
    for r in rows:
        groups.setdefault(r.segment, []).append(r)
    summaries = [SegmentSummary(name, len(g), math.fsum(r.ndcg for r in g) / len(g),
                                math.fsum(r.baseline_ndcg for r in g) / len(g))
                 for name, g in sorted(groups.items())]
    rows.sort(key=lambda r: (r.delta, r.query, r.location))
    n = len(best)
    return SegmentReport(math.fsum(best) / n, math.fsum(base) / n, summaries, rows)

