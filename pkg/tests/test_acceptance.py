"""Acceptance criteria; a PASS/FAIL line per criterion is printed at the end of the run."""

import itertools
import json
import math
import random
import subprocess
import sys
import time

import numpy as np
import pytest

from reltune import fixtures
from reltune.analyzer import FIELDS, AnalyzerConfig, analyze_query
from reltune.dataset import (CandidateResult, LocationRecord, QuerySegment, ResultSetCandidate, filter_locations,
                             filter_result_sets, read_exclusions, read_locations, read_tagged_queries,
                             segment_queries, stratified_sample)
from reltune.evaluation import Evaluator, evaluate_scalar
from reltune.evalset import build_evalset, read_labels
from reltune.index import Bm25Params, bm25, build_index, idf, match_candidates
from reltune.metrics import JudgmentSet, ndcg_at_k
from reltune.planted import planted_problem
from reltune.relevance import Combiner, RelevanceConfig, combined_score, score_and_rank
from reltune.tuner import ParameterSpace, heatmap_csv, optimize, read_heatmap, run_optimization, sweep_bm25


def brute_ndcg(grades_in_rank_order, all_grades, k=5):
    def dcg(gs):
        return sum((2 ** g - 1) / math.log2(i + 2) for i, g in enumerate(gs[:k]))
    ideal = dcg(sorted(all_grades, reverse=True))
    return 0.0 if ideal == 0 else dcg(grades_in_rank_order) / ideal


def test_criterion_1_ndcg_oracle_equivalence():
    start = time.perf_counter()
    rng = random.Random(2024)
    checked = 0
    for _ in range(200):
        n = rng.randint(1, 6)
        grades = [rng.randint(0, 4) for _ in range(n)]
        js = JudgmentSet("q", "", {f"d{i}": g for i, g in enumerate(grades)})
        for order in itertools.permutations(range(n)):
            got = ndcg_at_k([f"d{i}" for i in order], js, 5)
            assert abs(got - brute_ndcg([grades[i] for i in order], grades)) <= 1e-12
            checked += 1
            if any(grades) and all(grades[a] >= grades[b] for a, b in zip(order, order[1:])):
                assert got == 1.0
    assert checked > 200
    assert time.perf_counter() - start < 10


def test_criterion_2_bm25_analytic_checks():
    start = time.perf_counter()
    rng = random.Random(5)
    corpus = []
    for i in range(100):
        tf = 1 + i % 10
        filler = ["f%d" % rng.randint(0, 30) for _ in range(rng.randint(0, 25))]
        corpus.append({"id": f"d{i:03d}", "title": " ".join(["nurse"] * tf + filler)})
    idx = build_index(corpus, AnalyzerConfig())
    st = idx.stats["title"]
    idf_nurse = idf(st.doc_count, st.doc_freq["nurse"])
    by_tf = {}
    for doc in sorted(idx.doc_ids):
        by_tf.setdefault(idx.tf("title", "nurse", doc), []).append(doc)
    # b = 0: equal tf gives equal score whatever the length
    for tf, docs in by_tf.items():
        lengths = {idx.field_length("title", d) for d in docs}
        assert len(lengths) > 1
        for k in (0.5, 1.2, 2.0):
            scores = {bm25(idx, "title", "nurse", d, Bm25Params(k, 0.0)) for d in docs}
            assert len(scores) == 1
    # k -> 0: score equals idf for every tf >= 1
    for doc in idx.doc_ids:
        for b in (0.0, 0.75, 1.0):
            assert bm25(idx, "title", "nurse", doc, Bm25Params(0.0, b)) == idf_nurse
            assert math.isclose(bm25(idx, "title", "nurse", doc, Bm25Params(1e-9, b)), idf_nurse, rel_tol=1e-8)
    # strictly increasing in tf at fixed length, k = 1.2, b = 0.75
    for length in (5, 12, 30):
        values = []
        for tf in range(1, 11):
            docs = corpus + [{"id": "probe", "title": " ".join(["nurse"] * tf + ["pad"] * (length - tf))}]
            probe_idx = build_index(docs, AnalyzerConfig())
            values.append(bm25(probe_idx, "title", "nurse", "probe", Bm25Params(1.2, 0.75)))
        assert all(b > a for a, b in zip(values, values[1:]))
    assert time.perf_counter() - start < 5


def _random_config(rng):
    fields = [f for f in FIELDS if rng.random() < 0.7] or ["title"]
    boosts = {f: rng.choice([0.0, 0.1, 0.5, 1.0, 3.0]) for f in fields}
    params = {f: Bm25Params(rng.choice([0.0, 0.6, 1.2, 3.0]), rng.random()) for f in fields if rng.random() < 0.5}
    combiner = rng.choice([Combiner("term"), Combiner("field"), Combiner("hybrid", rng.random())])
    return RelevanceConfig(field_boosts=boosts, bm25_params=params, combiner=combiner,
                           coverage_penalty_base=rng.choice([0.1, 0.5, 1.0]),
                           title_complete_bonus=rng.choice([0.0, 0.3, 2.0]), retrieval_fields=tuple(fields))


def test_criterion_3_recall_parity(index):
    rng = random.Random(3)
    texts = [q.text for q in read_tagged_queries(fixtures.QUERIES)]
    vocab = sorted({t for f in FIELDS for t in index.terms(f)})
    docs = sorted(index.doc_ids)
    violations = 0
    positives = 0
    for _ in range(1000):
        if rng.random() < 0.5:
            text = rng.choice(texts)
        else:
            text = " ".join(rng.sample(vocab, rng.randint(1, 4)) + (["zzunseen"] if rng.random() < 0.2 else []))
        query = analyze_query(text, index.analyzer)
        cfg = _random_config(rng)
        candidates = match_candidates(index, query, cfg.retrieval_fields)
        for doc in docs:
            if combined_score(query, doc, index, cfg).raw_score > 0:
                positives += 1
                violations += doc not in candidates
    assert positives > 1000
    assert violations == 0


@pytest.mark.parametrize("pen", [0.25, 0.5, 0.75])
@pytest.mark.parametrize("bonus", [0.1, 0.3, 1.0])
def test_criterion_4_penalty_and_bonus_ordering(pen, bonus):
    plain = AnalyzerConfig()
    # the two docs match the query equally except that "a-missing" lacks
    # beta; beta sits in the zero-boost tags field of the other doc, so only
    # the coverage penalty separates them
    corpus = [{"id": "a-missing", "title": "alpha", "tags": ["other"]},
              {"id": "b-complete", "title": "alpha", "tags": ["beta"]},
              {"id": "c", "title": "unrelated"}]
    idx = build_index(corpus, plain)
    cfg = RelevanceConfig(coverage_penalty_base=pen, title_complete_bonus=bonus).with_overrides({"boost.tags": 0})
    ranked = score_and_rank("alpha beta", idx, plain, cfg)
    assert [r.doc_id for r in ranked[:2]] == ["b-complete", "a-missing"]
    assert math.isclose(ranked[1].raw_score, ranked[0].raw_score * pen, rel_tol=1e-12)
    # full title coverage: the same company match, only one title holds every token
    corpus = [{"id": "a-partial", "title": "nurse clerk", "company": "nurse aide"},
              {"id": "b-full", "title": "nurse aide", "company": "nurse aide"},
              {"id": "c", "title": "unrelated"}]
    idx = build_index(corpus, plain)
    cfg = RelevanceConfig(coverage_penalty_base=pen, title_complete_bonus=bonus,
                          field_boosts={"company": 1.0, "title": 0.0, "title_analyzed": 0.0})
    ranked = score_and_rank("nurse aide", idx, plain, cfg)
    assert [r.doc_id for r in ranked[:2]] == ["b-full", "a-partial"]
    assert math.isclose(ranked[0].raw_score, ranked[1].raw_score * (1 + bonus), rel_tol=1e-12)
    # with default boosts the adjustments still order the pairs the same way
    for default_corpus, query, winner in [
        ([{"id": "a", "title": "alpha", "description": "gamma"}, {"id": "b", "title": "alpha", "description": "beta"}],
         "alpha beta", "b"),
        ([{"id": "a", "title": "nurse", "description": "aide"}, {"id": "b", "title": "nurse aide"}],
         "nurse aide", "b"),
    ]:
        idx = build_index(default_corpus, plain)
        ranked = score_and_rank(query, idx, plain, RelevanceConfig(coverage_penalty_base=pen,
                                                                   title_complete_bonus=bonus))
        assert ranked[0].doc_id == winner


@pytest.mark.slow
def test_criterion_5_planted_optimum_recovery():
    start = time.perf_counter()
    pp = planted_problem()
    idx = build_index(pp.corpus, pp.analyzer)
    ev = Evaluator(idx, pp.judgment_sets)
    assert pp.space.size <= 10_000
    grid = {tuple(i): ev(pp.space.materialize(pp.base_config, pp.space.assignment(i)))
            for i in pp.space.all_indices()}
    best = max(grid.values())
    maximizers = [i for i, v in grid.items() if v == best]
    assert maximizers == [pp.space.indices(pp.optimum)]
    hits = 0
    for seed in range(5):
        log = run_optimization(pp.space, pp.judgment_sets, idx, pp.base_config, 100, seed, evaluator=ev)
        assert len(log) == 100
        hits += log.best_trial.objective >= best * 0.99
    assert hits >= 4
    assert time.perf_counter() - start < 300


def test_criterion_6_optimizer_contract(index, judgments, tmp_path):
    space = ParameterSpace.load(fixtures.SPACE)
    base = RelevanceConfig.load(fixtures.CONFIG)
    ev = Evaluator(index, judgments)
    logs = []
    for run in ("a", "b"):
        path = tmp_path / f"{run}.csv"
        log = run_optimization(space, judgments, index, base, 40, 17, log_path=path, evaluator=ev)
        keys = [space.indices(t.assignment) for t in log.trials]
        assert len(set(keys)) == len(keys)
        inc = log.incumbent()
        assert all(b >= a for a, b in zip(inc, inc[1:]))
        logs.append(path.read_bytes())
    assert logs[0] == logs[1]
    # to exhaustion on a small space: every assignment once, none twice
    small = ParameterSpace({"boost.title": (1.0, 2.0, 4.0), "boost.company": (0.5, 1.0),
                            "coverage_penalty_base": (0.5, 1.0)})
    log = run_optimization(small, judgments, index, base, small.size, 1, evaluator=ev)
    assert sorted(small.indices(t.assignment) for t in log.trials) == sorted(map(tuple, small.all_indices()))


def test_criterion_7_sweep_consistency(index, judgments, fixture_config):
    b_values = [0.0, 0.25, 0.5, 0.75, 1.0]
    k_values = [0.0, 0.6, 1.2, 2.0, 3.0]
    matrix = sweep_bm25("title", b_values, k_values, fixture_config, judgments, index)
    assert matrix.shape == (5, 5)
    for i, b in enumerate(b_values):
        for j, k in enumerate(k_values):
            cfg = fixture_config.with_overrides({"bm25.title.b": b, "bm25.title.k": k})
            assert abs(matrix[i, j] - evaluate_scalar(index, judgments, cfg).mean) <= 1e-12
    text = heatmap_csv(matrix, b_values, k_values)
    back, bs, ks = read_heatmap(text)
    assert bs == b_values and ks == k_values and np.array_equal(back, matrix)
    assert heatmap_csv(back, bs, ks) == text


def test_criterion_8_dataset_pipeline(index):
    queries = read_tagged_queries(fixtures.QUERIES)
    assert len(queries) == 60
    segments = segment_queries(queries)
    flat = [q for group in segments.values() for q in group]
    assert sorted(q.text for q in flat) == sorted(q.text for q in queries) and len(flat) == 60
    assert all(QuerySegment.of(q) == seg for seg, group in segments.items() for q in group)

    locations = read_locations(fixtures.LOCATIONS)
    admitted = filter_locations(locations)
    assert admitted == [l for l in locations if 10_000 <= l.population <= 30_000]
    pops = {l.population for l in admitted}
    assert {10_000, 30_000} <= pops and not {9_999, 30_001} & pops
    assert filter_locations([LocationRecord("edge", 10_000)]) == [LocationRecord("edge", 10_000)]

    def cand(n):
        return ResultSetCandidate("q", "L", tuple(CandidateResult(f"d{i}", f"t{i}", "c", 4 * (i % 2))
                                                  for i in range(n)))
    kept = filter_result_sets([cand(n) for n in (9, 10, 55, 100, 101)])
    assert [len(c.results) for c in kept] == [10, 55, 100]

    assert stratified_sample(segments, 2, 99) == stratified_sample(segments, 2, 99)
    assert filter_locations(locations, sample_size=6, seed=4) == filter_locations(locations, sample_size=6, seed=4)
    labels = read_labels(fixtures.LABELS)
    runs = [build_evalset(index, queries, locations, labels, exclude=read_exclusions(fixtures.EXCLUDE), seed=11)[0]
            for _ in range(2)]
    assert runs[0] and runs[0] == runs[1]


def test_criterion_9_end_to_end_smoke(tmp_path):
    start = time.perf_counter()
    F = fixtures

    def cli(*args):
        proc = subprocess.run([sys.executable, "-m", "reltune", *map(str, args)], capture_output=True, text=True,
                              cwd=tmp_path)
        assert proc.returncode == 0, proc.stderr
        return proc

    cli("build-index", "--corpus", F.CORPUS, "--out", tmp_path / "index.bfix")
    cli("build-evalset", "--index", tmp_path / "index.bfix", "--queries", F.QUERIES, "--locations", F.LOCATIONS,
        "--labels", F.LABELS, "--exclude", F.EXCLUDE, "--out", tmp_path / "judgments.tsv")
    cli("evaluate", "--index", tmp_path / "index.bfix", "--config", F.CONFIG, "--judgments",
        tmp_path / "judgments.tsv", "--out", tmp_path / "evaluate.csv")
    cli("tune", "--index", tmp_path / "index.bfix", "--judgments", tmp_path / "judgments.tsv", "--space", F.SPACE,
        "--config", F.CONFIG, "--budget", 20, "--out", tmp_path / "tune")
    cli("report", "--log", tmp_path / "tune/trials.csv", "--baseline", F.CONFIG, "--queries", F.QUERIES,
        "--out", tmp_path / "report")
    for path in ["index.bfix", "judgments.tsv", "evaluate.csv", "tune/trials.csv", "tune/best.kv",
                 "report/segments.csv", "report/queries.csv"]:
        assert (tmp_path / path).stat().st_size > 0
    for manifest in ["manifest-build-index.json", "manifest-build-evalset.json", "manifest-evaluate.json",
                     "tune/manifest-tune.json", "report/manifest-report.json"]:
        data = json.loads((tmp_path / manifest).read_text())
        assert data["seed"] == 42 and data["config_hash"] and data["finished"]
    assert len((tmp_path / "tune/trials.csv").read_text().splitlines()) == 21
    assert time.perf_counter() - start < 120
