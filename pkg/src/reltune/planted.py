"""Synthetic tuning problems whose best assignment is known in advance.

Every judgment set holds two documents that share one query token. One
document matches through a tuned field (or is hit by the coverage penalty),
the other through the title with a pinned boost of 1. The pair swaps order
exactly when the tuned value crosses a threshold computed from BM25. Grid
values are placed between consecutive thresholds, and the grading of each
pair is chosen so that only the planted grid value ranks every pair
correctly. Moving a parameter one grid step away breaks exactly one more
pair, so the objective falls off monotonically around the optimum.

All fields use ``b = 0`` and a large ``k``, which makes a field's BM25
nearly proportional to term frequency and independent of length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .analyzer import FIELDS, AnalyzerConfig
from .index import Bm25Params, bm25_formula, idf
from .metrics import JudgmentSet
from .relevance import Combiner, RelevanceConfig
from .tuner import ParameterSpace

BOOSTED = ("description", "company", "tags")
PENALTY = "coverage_penalty_base"
K = 1000.0
MAX_TF = 60


@dataclass(frozen=True)
class PlantedProblem:
    corpus: list[dict]
    judgment_sets: list[JudgmentSet]
    space: ParameterSpace
    base_config: RelevanceConfig
    optimum: dict[str, float]
    analyzer: AnalyzerConfig


def _g(tf: int, idf_value: float) -> float:
    return bm25_formula(tf, 1, 1, idf_value, K, 0.0)


def _closest(target: float, ratio, used: set) -> tuple[float, tuple[int, int]]:
    best = None
    for a in range(1, MAX_TF + 1):
        for b in range(1, MAX_TF + 1):
            r = ratio(a, b)
            if r in used:
                continue
            err = abs(math.log(r / target))
            if best is None or err < best[0]:
                best = (err, r, (a, b))
    return best[1], best[2]


def _grid(thresholds: list[float], lo: float, hi: float) -> list[float]:
    """One value below the first threshold, one between each pair, one above
    the last, each placed at the geometric midpoint and rounded."""
    edges = [lo, *thresholds, hi]
    values = []
    for left, right in zip(edges, edges[1:]):
        v = math.sqrt(left * right)
        r = float(f"{v:.4g}")
        values.append(r if left < r < right else v)
    return values


def planted_problem(levels: int = 10, optimum: tuple[int, ...] = (6, 2, 8, 3)) -> PlantedProblem:
    """Build a problem with ``levels`` grid values for each of four
    parameters (three field boosts and the coverage penalty base).
    ``optimum`` gives the planted grid index of each parameter."""
    if len(optimum) != 4 or not all(0 <= i < levels for i in optimum):
        raise ValueError("optimum needs one index in [0, levels) per parameter")
    n_thresholds = levels - 1
    pen_docs = 2 * n_thresholds
    n_docs = 2 * len(BOOSTED) * n_thresholds + pen_docs
    # every document has a title; each boosted field is filled only by its own pairs
    idf_title_1 = idf(n_docs, 1)
    idf_title_2 = idf(n_docs, 2)
    idf_field = idf(n_thresholds, 1)

    corpus: list[dict] = []
    sets: list[JudgmentSet] = []
    tunable: dict[str, list[float]] = {}
    planted: dict[str, float] = {}

    for p, name in enumerate(BOOSTED):
        # threshold boost at which the field doc ties the title doc
        def ratio(tf_field, tf_title):
            return _g(tf_title, idf_title_1) / _g(tf_field, idf_field)
        targets = [0.15 * 1.7 ** j for j in range(n_thresholds)]
        used: set = set()
        pairs = []
        for t in targets:
            r, ab = _closest(t, ratio, used)
            used.add(r)
            pairs.append((r, ab))
        pairs.sort()
        thresholds = [r for r, _ in pairs]
        values = _grid(thresholds, thresholds[0] / 1.7, thresholds[-1] * 1.7)
        key = f"boost.{name}"
        tunable[key] = values
        planted[key] = values[optimum[p]]
        for j, (r, (tf_field, tf_title)) in enumerate(pairs):
            token = f"q{name[0]}{j}"
            field_doc = {"id": f"{name}-{j}-f", "title": f"filler{name[0]}{j}"}
            field_doc[name] = [token] * tf_field if name == "tags" else " ".join([token] * tf_field)
            title_doc = {"id": f"{name}-{j}-t", "title": " ".join([token] * tf_title)}
            corpus += [field_doc, title_doc]
            # planted value above the threshold: the field doc must win
            field_wins = j < optimum[p]
            sets.append(JudgmentSet(token, "", {field_doc["id"]: 4 if field_wins else 0,
                                                  title_doc["id"]: 0 if field_wins else 4}))

    # coverage pairs: the penalized doc repeats token a; the complete doc has
    # a (m times) and b once
    def pen_ratio(tf_a, m):
        return (_g(m, idf_title_2) + _g(1, idf_title_1)) / _g(tf_a, idf_title_2)
    used = set()
    pairs = []
    for t in [0.1 + 0.8 * j / max(1, n_thresholds - 1) for j in range(n_thresholds)]:
        r, ab = _closest(t, pen_ratio, used)
        used.add(r)
        pairs.append((r, ab))
    pairs.sort()
    thresholds = [r for r, _ in pairs]
    if thresholds[-1] >= 1:
        raise ValueError("coverage thresholds must stay below 1")
    values = _grid(thresholds, thresholds[0] / 2, 1.0)
    tunable[PENALTY] = values
    planted[PENALTY] = values[optimum[3]]
    for j, (r, (tf_a, m)) in enumerate(pairs):
        a, b = f"pa{j}", f"pb{j}"
        partial = {"id": f"pen-{j}-p", "title": " ".join([a] * tf_a)}
        full = {"id": f"pen-{j}-c", "title": " ".join([a] * m + [b])}
        corpus += [partial, full]
        partial_wins = j < optimum[3]
        sets.append(JudgmentSet(f"{a} {b}", "", {partial["id"]: 4 if partial_wins else 0,
                                                  full["id"]: 0 if partial_wins else 4}))

    boosts = {f: 0.0 for f in FIELDS}
    boosts["title"] = 1.0
    base = RelevanceConfig(field_boosts=boosts, default_bm25=Bm25Params(K, 0.0), combiner=Combiner("field"),
                           coverage_penalty_base=1.0, title_complete_bonus=0.0)
    fixed = {f"boost.{f}": 0.0 for f in FIELDS if f not in BOOSTED}
    fixed["boost.title"] = 1.0
    space = ParameterSpace(tunable, fixed)
    return PlantedProblem(corpus, sets, space, base, planted, AnalyzerConfig())
