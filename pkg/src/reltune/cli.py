"""Command-line entry point: ``reltune <subcommand> ...``.

Exit status is 0 on success, 1 on usage errors and 2 on data errors. Data
goes to files or standard output, diagnostics to standard error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .analyzer import default_analyzer, load_rules
from .dataset import (QuerySegment, filter_locations, read_exclusions, read_locations, read_tagged_queries,
                      segment_lookup, segment_queries, stratified_sample, write_locations, write_tagged_queries)
from .errors import DataError, ReltuneError, UsageError
from .evalset import build_evalset, read_labels
from .evaluation import Evaluator
from .index import Index, build_index, read_corpus
from .manifest import RunManifest, file_sha256
from .metrics import read_judgments, write_judgments
from .relevance import RelevanceConfig, explain, score_and_rank
from .reports import segment_report
from .tuner import (ParameterSpace, TrialLog, best_config, heatmap_csv, n_init, run_optimization, sweep_bm25)

log = logging.getLogger("reltune")

DEFAULT_SEED = 42


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a list of numbers, got {text!r}") from None


def _band(text: str) -> tuple[float, float]:
    values = _floats(text)
    if len(values) != 2 or values[0] > values[1]:
        raise argparse.ArgumentTypeError(f"expected LOW,HIGH, got {text!r}")
    return values[0], values[1]


def _config(path: str | None) -> RelevanceConfig:
    return RelevanceConfig.load(path) if path else RelevanceConfig()


def _write(path: str | Path, text: str) -> Path:
    path = Path(path)
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc.strerror or exc}") from None
    return path


def _out_dir(path: str | Path) -> Path:
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataError(f"cannot create {path}: {exc.strerror or exc}") from None
    return path


def _seed(args) -> int:
    return DEFAULT_SEED if getattr(args, "seed", None) is None else args.seed


def _params(args, skip=("func", "command", "out", "verbose")) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


# -- subcommands ------------------------------------------------------------

def cmd_build_index(args) -> None:
    manifest = RunManifest.start("build-index", {"corpus": args.corpus, "analyzer": args.analyzer},
                                 _params(args), _seed(args))
    analyzer = load_rules(args.analyzer) if args.analyzer else default_analyzer()
    index = build_index(read_corpus(args.corpus), analyzer)
    out = Path(args.out)
    try:
        index.save(out)
    except OSError as exc:
        raise DataError(f"cannot write {out}: {exc.strerror or exc}") from None
    manifest.finish(out.parent, [out])
    log.info("indexed %d documents into %s", len(index), out)


def cmd_search(args) -> None:
    index = Index.load(args.index)
    results = score_and_rank(args.query, index, None, _config(args.config), limit=args.limit,
                             location=args.location, explain=args.explain)
    out = sys.stdout
    for rank, r in enumerate(results, 1):
        meta = index.meta(r.doc_id)
        out.write(f"{rank}\t{r.doc_id}\t{r.rel_score:.6f}\t{meta.title}\t{meta.company}\n")
        if args.explain:
            out.write("".join(f"    {line}\n" for line in r.explanation.format().splitlines()))


def cmd_explain(args) -> None:
    index = Index.load(args.index)
    sys.stdout.write(explain(args.query, args.doc, index, None, _config(args.config)).format() + "\n")


def cmd_evaluate(args) -> None:
    manifest = RunManifest.start("evaluate", {"index": args.index, "config": args.config,
                                              "judgments": args.judgments}, _params(args), _seed(args))
    index = Index.load(args.index)
    sets = read_judgments(args.judgments)
    if not sets:
        raise DataError(f"{args.judgments}: no judgment sets")
    details = Evaluator(index, sets, k=args.k, threshold=args.threshold).details(_config(args.config))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["query", "location", f"ndcg@{args.k}", f"precision@{args.k}", "recall", "retrieved"])
    for d in details:
        w.writerow([d.query, d.location, repr(d.ndcg), repr(d.precision), repr(d.recall), d.retrieved])
    n = len(details)
    w.writerow(["MEAN", "", *(repr(math.fsum(getattr(d, m) for d in details) / n)
                              for m in ("ndcg", "precision", "recall")), ""])
    if args.out:
        out = _write(args.out, buf.getvalue())
        manifest.finish(out.parent, [out])
    else:
        sys.stdout.write(buf.getvalue())


def cmd_sample_queries(args) -> None:
    seed = _seed(args)
    manifest = RunManifest.start("sample-queries", {"queries": args.queries, "exclude": args.exclude},
                                 _params(args), seed)
    queries = read_tagged_queries(args.queries)
    exclude = read_exclusions(args.exclude) if args.exclude else set()
    kept = [q for q in queries if q.text not in exclude]
    sample = stratified_sample(segment_queries(kept), args.quota, seed)
    out = Path(args.out)
    try:
        write_tagged_queries(out, sample)
    except OSError as exc:
        raise DataError(f"cannot write {out}: {exc.strerror or exc}") from None
    manifest.finish(out.parent, [out])
    log.info("sampled %d of %d queries", len(sample), len(kept))


def cmd_filter_locations(args) -> None:
    seed = _seed(args)
    manifest = RunManifest.start("filter-locations", {"locations": args.locations}, _params(args), seed)
    chosen = filter_locations(read_locations(args.locations), args.min_pop, args.max_pop, args.sample_size, seed)
    out = Path(args.out)
    try:
        write_locations(out, chosen)
    except OSError as exc:
        raise DataError(f"cannot write {out}: {exc.strerror or exc}") from None
    manifest.finish(out.parent, [out])
    log.info("kept %d locations", len(chosen))


def cmd_build_evalset(args) -> None:
    seed = _seed(args)
    manifest = RunManifest.start("build-evalset", {
        "index": args.index, "queries": args.queries, "locations": args.locations, "labels": args.labels,
        "exclude": args.exclude, "legacy_config": args.legacy_config}, _params(args), seed)
    index = Index.load(args.index)
    sets, summary = build_evalset(
        index, read_tagged_queries(args.queries), read_locations(args.locations), read_labels(args.labels),
        legacy=_config(args.legacy_config), exclude=read_exclusions(args.exclude) if args.exclude else set(),
        quota=args.quota, min_pop=args.min_pop, max_pop=args.max_pop, location_sample=args.location_sample,
        min_results=args.min_results, max_results=args.max_results, balance_band=args.balance,
        threshold=args.threshold, estimate_from_labels=args.estimate == "labels", seed=seed)
    if not sets:
        raise DataError("no result set passed the size and balance filters")
    out = Path(args.out)
    try:
        write_judgments(out, sets)
    except OSError as exc:
        raise DataError(f"cannot write {out}: {exc.strerror or exc}") from None
    manifest.finish(out.parent, [out])
    log.info("queries=%d locations=%d candidate_sets=%d accepted=%d judgment_sets=%d",
             summary.sampled_queries, summary.sampled_locations, summary.candidate_sets,
             summary.accepted_sets, summary.chosen_sets)


def _segment_filter(sets, queries_path: str | None, segments: str | None):
    if not segments:
        return sets
    if not queries_path:
        raise UsageError("--segments needs --queries to look up each query's segment")
    try:
        wanted = {QuerySegment.parse(s.strip()) for s in segments.split(",") if s.strip()}
    except (ValueError, ReltuneError) as exc:
        raise UsageError(f"bad --segments value: {exc}") from None
    lookup = segment_lookup(read_tagged_queries(queries_path))
    kept = [js for js in sets if lookup.get(js.query) in wanted]
    if not kept:
        raise DataError(f"no judgment set belongs to segments {segments}")
    return kept


def cmd_tune(args) -> None:
    seed = _seed(args)
    if args.budget < 1:
        raise UsageError("--budget must be a positive integer")
    space = ParameterSpace.load(args.space)
    if args.budget < n_init(space):
        raise UsageError(f"--budget {args.budget} is below the {n_init(space)} initial random trials")
    inputs = {"index": args.index, "judgments": args.judgments, "space": args.space, "config": args.config,
              "queries": args.queries}
    manifest = RunManifest.start("tune", inputs, _params(args), seed)
    index = Index.load(args.index)
    base = _config(args.config)
    sets = _segment_filter(read_judgments(args.judgments), args.queries, args.segments)
    out = _out_dir(args.out)
    meta = {"index": str(Path(args.index).resolve()), "judgments": str(Path(args.judgments).resolve()),
            "inputs_sha256": {k: file_sha256(v) for k, v in sorted(inputs.items()) if v},
            "segments": args.segments or "", "queries": str(Path(args.queries).resolve()) if args.queries else ""}

    def progress(trial):
        log.info("trial %d [%s] ndcg@5=%.6f", trial.trial_index, trial.phase, trial.objective)

    trials_path = out / "trials.csv"
    try:
        trial_log = run_optimization(space, sets, index, base, args.budget, seed, log_path=trials_path,
                                     meta=meta, on_trial=progress if args.verbose else None)
    except OSError as exc:
        raise DataError(f"cannot write {trials_path}: {exc.strerror or exc}") from None
    best = _write(out / "best.kv", best_config(trial_log, base).dumps())
    manifest.finish(out, [trials_path, trials_path.with_suffix(".json"), best])
    t = trial_log.best_trial
    log.info("best trial %d: ndcg@5=%.6f", t.trial_index, t.objective)


def cmd_sweep_bm25(args) -> None:
    manifest = RunManifest.start("sweep-bm25", {"index": args.index, "judgments": args.judgments,
                                                "config": args.config}, _params(args), _seed(args))
    index = Index.load(args.index)
    matrix = sweep_bm25(args.field, args.b, args.k, _config(args.config), read_judgments(args.judgments), index)
    out = _write(args.out, heatmap_csv(matrix, args.b, args.k))
    manifest.finish(out.parent, [out])


def cmd_report(args) -> None:
    log_path = Path(args.log)
    meta_path = log_path.with_suffix(".json")
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DataError(f"{meta_path}: run metadata next to the trial log is missing") from None
    index_path = args.index or meta.get("index")
    judgments_path = args.judgments or meta.get("judgments")
    queries_path = args.queries or meta.get("queries") or None
    manifest = RunManifest.start("report", {"log": log_path, "meta": meta_path, "baseline": args.baseline,
                                            "index": index_path, "judgments": judgments_path,
                                            "queries": queries_path}, _params(args), int(meta["seed"]))
    space = ParameterSpace.loads(meta["space"])
    trial_log = TrialLog.read(log_path, space, int(meta["seed"]))
    base = RelevanceConfig.loads(meta["base_config"])
    tuned = best_config(trial_log, base)
    index = Index.load(index_path)
    sets = _segment_filter(read_judgments(judgments_path), queries_path, meta.get("segments"))
    segments = segment_lookup(read_tagged_queries(queries_path)) if queries_path else None
    report = segment_report(tuned, _config(args.baseline), sets, index, segments)
    out = _out_dir(args.out)
    files = [_write(out / "segments.csv", report.segments_csv()), _write(out / "queries.csv", report.queries_csv())]
    manifest.finish(out, files)
    sys.stdout.write(f"mean ndcg@5: tuned {report.overall:.6f} baseline {report.baseline_overall:.6f}\n")
    for q in report.losers(args.bottom):
        sys.stdout.write(f"{q.delta:+.6f}\t{q.segment}\t{q.query}\t{q.location}\n")


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="reltune", description="Offline relevance tuning for lexical job search.")
    p.add_argument("--version", action="version", version=f"reltune {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to standard error")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    def add(name, func, help):
        s = sub.add_parser(name, help=help, description=help)
        s.set_defaults(func=func)
        s.add_argument("--seed", type=int, default=None, help=f"random seed (default {DEFAULT_SEED})")
        s.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS,
                       help="log progress to standard error")
        return s

    s = add("build-index", cmd_build_index, "Build a serialized index from a JSON-lines corpus.")
    s.add_argument("--corpus", required=True)
    s.add_argument("--analyzer", help="rule file (default: bundled rules)")
    s.add_argument("--out", required=True)

    s = add("search", cmd_search, "Rank documents for one query.")
    s.add_argument("--index", required=True)
    s.add_argument("--config")
    s.add_argument("--query", required=True)
    s.add_argument("--location")
    s.add_argument("--limit", type=int, default=10)
    s.add_argument("--explain", action="store_true")

    s = add("explain", cmd_explain, "Show the score breakdown for one document.")
    s.add_argument("--index", required=True)
    s.add_argument("--config")
    s.add_argument("--query", required=True)
    s.add_argument("--doc", required=True)

    s = add("evaluate", cmd_evaluate, "Per-set and mean NDCG, precision and recall as CSV.")
    s.add_argument("--index", required=True)
    s.add_argument("--config")
    s.add_argument("--judgments", required=True)
    s.add_argument("--k", type=int, default=5)
    s.add_argument("--threshold", type=int, default=3)
    s.add_argument("--out", help="CSV path (default: standard output)")

    s = add("sample-queries", cmd_sample_queries, "Stratified sample of tagged queries by segment.")
    s.add_argument("--queries", required=True)
    s.add_argument("--exclude")
    s.add_argument("--quota", type=int, default=5, help="queries per segment")
    s.add_argument("--out", required=True)

    s = add("filter-locations", cmd_filter_locations, "Keep locations inside a population band.")
    s.add_argument("--locations", required=True)
    s.add_argument("--min-pop", type=int, default=10_000)
    s.add_argument("--max-pop", type=int, default=30_000)
    s.add_argument("--sample-size", type=int)
    s.add_argument("--out", required=True)

    s = add("build-evalset", cmd_build_evalset, "Assemble a judgment file from queries, locations and labels.")
    s.add_argument("--index", required=True)
    s.add_argument("--queries", required=True)
    s.add_argument("--locations", required=True)
    s.add_argument("--labels", required=True, help="label pool TSV: query, doc_id, grade")
    s.add_argument("--exclude")
    s.add_argument("--legacy-config", help="config used to retrieve candidate result sets")
    s.add_argument("--quota", type=int, default=5)
    s.add_argument("--min-pop", type=int, default=10_000)
    s.add_argument("--max-pop", type=int, default=30_000)
    s.add_argument("--location-sample", type=int)
    s.add_argument("--min-results", type=int, default=10)
    s.add_argument("--max-results", type=int, default=100)
    s.add_argument("--balance", type=_band, default=(0.3, 0.7), help="LOW,HIGH relevant fraction band")
    s.add_argument("--threshold", type=int, default=3)
    s.add_argument("--estimate", choices=("proxy", "labels"), default="proxy",
                   help="grade estimate used by the balance filter")
    s.add_argument("--out", required=True)

    s = add("tune", cmd_tune, "Bayesian optimization of a relevance config.")
    s.add_argument("--index", required=True)
    s.add_argument("--judgments", required=True)
    s.add_argument("--space", required=True)
    s.add_argument("--config", help="base config; pinned and tuned keys override it")
    s.add_argument("--budget", type=int, required=True)
    s.add_argument("--segments", help="comma-separated segment labels, e.g. job_title/1,company+job_title/2")
    s.add_argument("--queries", help="tagged-query file used to resolve segments")
    s.add_argument("--out", required=True, help="output directory")

    s = add("sweep-bm25", cmd_sweep_bm25, "Grid of mean NDCG@5 over BM25 b and k for one field.")
    s.add_argument("--index", required=True)
    s.add_argument("--judgments", required=True)
    s.add_argument("--config")
    s.add_argument("--field", required=True)
    s.add_argument("--b", type=_floats, required=True)
    s.add_argument("--k", type=_floats, required=True)
    s.add_argument("--out", required=True)

    s = add("report", cmd_report, "Per-segment comparison of a tuning run against a baseline.")
    s.add_argument("--log", required=True, help="trials.csv written by tune")
    s.add_argument("--baseline", help="baseline config (default: built-in defaults)")
    s.add_argument("--index")
    s.add_argument("--judgments")
    s.add_argument("--queries")
    s.add_argument("--bottom", type=int, default=10)
    s.add_argument("--out", required=True, help="output directory")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="reltune: %(message)s", stream=sys.stderr)
        if not args.command:
            parser.print_usage(sys.stderr)
            raise UsageError("a subcommand is required")
        args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ReltuneError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
