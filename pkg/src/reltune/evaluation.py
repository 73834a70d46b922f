"""Fast repeated evaluation of relevance configs over a judgment collection.

Tuning evaluates the same queries under hundreds of configs, so per-set
candidate lists, term frequencies and field lengths are gathered once and
scored as numpy arrays. Arithmetic is done in the same order as the scalar
scorer in :mod:`reltune.relevance`, so both produce identical scores.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .analyzer import ANALYZED, FIELDS, RAW, TITLE_FIELD, Query, analyze_query
from .index import Index, match_candidates
from .metrics import (RELEVANCE_THRESHOLD, JudgmentSet, Objective, dcg_at_k, ideal_dcg, mean_objective,
                      precision_at_k, recall)
from .relevance import FIELD_CENTRIC, TERM_CENTRIC, RelevanceConfig, in_location, score_and_rank


@dataclass
class _Prepared:
    js: JudgmentSet
    query: Query
    docs: list[str]
    lengths: dict[str, np.ndarray]
    tfs: dict[tuple[str, str], np.ndarray]
    idfs: dict[tuple[str, str], float]
    missing: np.ndarray
    in_title: np.ndarray
    ideal: float
    cache: dict


@dataclass(frozen=True)
class SetResult:
    query: str
    location: str
    ndcg: float
    precision: float
    recall: float
    retrieved: int


class Evaluator:
    """Mean NDCG@k of a config over fixed judgment sets and a fixed index."""

    def __init__(self, index: Index, judgment_sets: Sequence[JudgmentSet], k: int = 5,
                 threshold: int = RELEVANCE_THRESHOLD):
        self.index = index
        self.judgment_sets = list(judgment_sets)
        self.k = k
        self.threshold = threshold
        self._prepared: dict[tuple[str, ...], list[_Prepared]] = {}

    def _prepare(self, retrieval_fields: tuple[str, ...]) -> list[_Prepared]:
        if retrieval_fields in self._prepared:
            return self._prepared[retrieval_fields]
        index = self.index
        analyzed_fields = [f for f, kind in FIELDS.items() if kind == ANALYZED]
        out = []
        for js in self.judgment_sets:
            query = analyze_query(js.query, index.analyzer)
            docs = sorted(d for d in match_candidates(index, query, retrieval_fields)
                          if in_location(index, d, js.location))
            lengths, tfs, idfs = {}, {}, {}
            for f in retrieval_fields:
                lengths[f] = np.array([index.field_length(f, d) for d in docs], dtype=float)
                for t in query.terms(FIELDS[f]):
                    post = index.postings(f, t)
                    tfs[f, t] = np.array([post.get(d, 0) for d in docs], dtype=float)
                    idfs[f, t] = index.idf(f, t) if post else 0.0
            terms = query.terms(ANALYZED)
            missing = np.array([sum(not any(index.tf(f, t, d) for f in analyzed_fields) for t in terms)
                                for d in docs], dtype=int)
            in_title = np.array([bool(terms) and all(index.tf(TITLE_FIELD, t, d) for t in terms)
                                 for d in docs], dtype=bool)
            out.append(_Prepared(js, query, docs, lengths, tfs, idfs, missing, in_title,
                                 ideal_dcg(js, self.k), {}))
        self._prepared[retrieval_fields] = out
        return out

    def _bm25(self, p: _Prepared, field: str, term: str, config: RelevanceConfig) -> np.ndarray:
        params = config.params(field)
        key = (field, term, params.k, params.b)
        hit = p.cache.get(key)
        if hit is not None:
            return hit
        tf = p.tfs[field, term]
        st = self.index.stats[field]
        k, b = params.k, params.b
        if st.doc_count == 0 or not tf.any():
            value = np.zeros_like(tf)
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                value = p.idfs[field, term] * ((tf * (k + 1)) / (tf + k * (1 - b + b * p.lengths[field] / st.avg_field_length)))
            value = np.where(tf > 0, value, 0.0)
        p.cache[key] = value
        return value

    def raw_scores(self, p: _Prepared, config: RelevanceConfig) -> np.ndarray:
        n = len(p.docs)
        mode = config.combiner.mode
        tc = fc = None
        if mode != FIELD_CENTRIC:
            tc = np.zeros(n)
            for kind in (RAW, ANALYZED):
                fields = [f for f in config.retrieval_fields if FIELDS[f] == kind]
                if not fields:
                    continue
                for t in p.query.terms(kind):
                    best = None
                    for f in fields:
                        v = config.boost(f) * self._bm25(p, f, t, config)
                        best = v if best is None else np.maximum(best, v)
                    tc = tc + best
        if mode != TERM_CENTRIC:
            fc = np.zeros(n)
            for f in config.retrieval_fields:
                s = np.zeros(n)
                for t in p.query.terms(FIELDS[f]):
                    s = s + self._bm25(p, f, t, config)
                fc = fc + config.boost(f) * s
        if mode == TERM_CENTRIC:
            base = tc
        elif mode == FIELD_CENTRIC:
            base = fc
        else:
            w = config.combiner.mix
            base = w * tc + (1 - w) * fc
        pen = config.coverage_penalty_base
        cov = np.array([pen ** int(m) for m in p.missing], dtype=float)
        bonus = np.where(p.in_title, 1 + config.title_complete_bonus, 1.0)
        return base * cov * bonus

    def rank(self, p: _Prepared, config: RelevanceConfig) -> list[str]:
        raw = self.raw_scores(p, config)
        rel = raw / (1 + raw)
        # candidates are in ascending id order, so a stable sort breaks ties by id
        order = np.argsort(-rel, kind="stable")
        return [p.docs[i] for i in order]

    def _ndcg(self, p: _Prepared, ranked: list[str]) -> float:
        if p.ideal == 0:
            return 0.0
        judged = p.js.judgments
        grades = [judged[d] for d in ranked if d in judged]
        return dcg_at_k(grades, self.k) / p.ideal

    def evaluate(self, config: RelevanceConfig) -> Objective:
        values = [self._ndcg(p, self.rank(p, config)) for p in self._prepare(config.retrieval_fields)]
        if not values:
            return Objective(0.0, [])
        return Objective(math.fsum(values) / len(values), values)

    def __call__(self, config: RelevanceConfig) -> float:
        return self.evaluate(config).mean

    def details(self, config: RelevanceConfig) -> list[SetResult]:
        out = []
        for p in self._prepare(config.retrieval_fields):
            ranked = self.rank(p, config)
            out.append(SetResult(p.js.query, p.js.location, self._ndcg(p, ranked),
                                 precision_at_k(ranked, p.js, self.k, self.threshold),
                                 recall(ranked, p.js, self.threshold), len(ranked)))
        return out


def make_engine(index: Index, config: RelevanceConfig, limit: int | None = None):
    """Scalar reference engine: ``(query, location) -> ranked doc ids``."""
    def engine(query: str, location: str) -> list[str]:
        return [r.doc_id for r in score_and_rank(query, index, None, config, limit=limit, location=location)]
    return engine


def evaluate_scalar(index: Index, judgment_sets: Sequence[JudgmentSet], config: RelevanceConfig,
                    k: int = 5) -> Objective:
    return mean_objective(judgment_sets, make_engine(index, config), k)
