import csv
import json
import subprocess
import sys

import pytest

from reltune import fixtures
from reltune.cli import main
from reltune.evaluation import Evaluator
from reltune.relevance import RelevanceConfig

F = fixtures


@pytest.fixture(scope="module")
def built(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert main(["build-index", "--corpus", str(F.CORPUS), "--out", str(d / "idx.bfix")]) == 0
    return d


def run(*argv):
    return main([str(a) for a in argv])


def test_no_arguments_prints_usage(capsys):
    assert main([]) == 1
    assert "usage" in capsys.readouterr().err


def test_module_entry_point_without_arguments():
    proc = subprocess.run([sys.executable, "-m", "reltune"], capture_output=True, text=True)
    assert proc.returncode == 1
    assert "usage" in proc.stderr and proc.stdout == ""


def test_unknown_subcommand_and_flag(capsys):
    assert main(["frobnicate"]) == 1
    assert main(["evaluate", "--bogus"]) == 1
    assert "usage" in capsys.readouterr().err


def test_tune_budget_zero_is_usage_error(built, tmp_path, capsys):
    code = run("tune", "--index", built / "idx.bfix", "--judgments", F.JUDGMENTS, "--space", F.SPACE,
               "--budget", 0, "--out", tmp_path / "run")
    assert code == 1
    assert "budget" in capsys.readouterr().err


def test_missing_input_is_data_error(tmp_path, capsys):
    assert run("build-index", "--corpus", tmp_path / "nope.jsonl", "--out", tmp_path / "i.bfix") == 2


def test_corrupt_corpus_is_data_error(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"id": "a", "title": "x"}\n{oops\n')
    assert run("build-index", "--corpus", bad, "--out", tmp_path / "i.bfix") == 2
    assert ":2:" in capsys.readouterr().err


def test_unwritable_output_is_data_error(built, tmp_path):
    target = tmp_path / "missing-dir" / "eval.csv"
    assert run("evaluate", "--index", built / "idx.bfix", "--judgments", F.JUDGMENTS, "--out", target) == 2


def test_evaluate_matches_metric_values(built, index, judgments, capsys):
    assert run("evaluate", "--index", built / "idx.bfix", "--config", F.CONFIG, "--judgments", F.JUDGMENTS,
               "--k", 5, "--threshold", 3) == 0
    rows = list(csv.reader(capsys.readouterr().out.splitlines()))
    assert rows[0][:3] == ["query", "location", "ndcg@5"]
    assert len(rows) == len(judgments) + 2
    ev = Evaluator(index, judgments)
    details = ev.details(RelevanceConfig.load(F.CONFIG))
    for row, d in zip(rows[1:-1], details):
        assert (row[0], row[1]) == (d.query, d.location)
        assert float(row[2]) == d.ndcg
    assert rows[-1][0] == "MEAN"
    assert float(rows[-1][2]) == ev(RelevanceConfig.load(F.CONFIG))


def test_search_and_explain(built, capsys):
    assert run("search", "--index", built / "idx.bfix", "--query", "registered nurse", "--limit", 3,
               "--location", "Maplewood", "--explain") == 0
    out = capsys.readouterr().out
    first = out.splitlines()[0].split("\t")
    assert first[0] == "1" and len([l for l in out.splitlines() if not l.startswith(" ")]) == 3
    assert run("explain", "--index", built / "idx.bfix", "--query", "registered nurse", "--doc", first[1]) == 0
    assert "raw =" in capsys.readouterr().out


def test_search_empty_query_is_data_error(built):
    assert run("search", "--index", built / "idx.bfix", "--query", "  ,, ") == 2


def test_sampling_commands_are_reproducible(tmp_path):
    for name in ("a", "b"):
        d = tmp_path / name
        d.mkdir()
        assert run("sample-queries", "--queries", F.QUERIES, "--exclude", F.EXCLUDE, "--quota", 2,
                   "--seed", 7, "--out", d / "q.tsv") == 0
        assert run("filter-locations", "--locations", F.LOCATIONS, "--sample-size", 4, "--out", d / "l.tsv") == 0
    assert (tmp_path / "a/q.tsv").read_bytes() == (tmp_path / "b/q.tsv").read_bytes()
    assert (tmp_path / "a/l.tsv").read_bytes() == (tmp_path / "b/l.tsv").read_bytes()
    manifest = json.loads((tmp_path / "a/manifest-filter-locations.json").read_text())
    assert manifest["seed"] == 42


def test_manifest_hash_tracks_input_bytes(tmp_path):
    corpus = tmp_path / "c.jsonl"
    corpus.write_text(F.CORPUS.read_text())

    def hash_of():
        assert run("build-index", "--corpus", corpus, "--out", tmp_path / "i.bfix") == 0
        return json.loads((tmp_path / "manifest-build-index.json").read_text())["config_hash"]

    first = hash_of()
    assert hash_of() == first
    corpus.write_text(F.CORPUS.read_text().replace("Nurse", "Nurse ", 1))
    assert hash_of() != first


def test_sweep_two_by_two(built, tmp_path):
    out = tmp_path / "heat.csv"
    assert run("sweep-bm25", "--index", built / "idx.bfix", "--judgments", F.JUDGMENTS, "--field", "title",
               "--b", "0,0.75", "--k", "1.2,2", "--out", out) == 0
    rows = list(csv.reader(out.read_text().splitlines()))
    assert rows[0] == ["b\\k", "1.2", "2.0"]
    assert [r[0] for r in rows[1:]] == ["0.0", "0.75"]
    assert all(len(r) == 3 for r in rows)
    assert (tmp_path / "manifest-sweep-bm25.json").exists()


def test_tune_and_report_are_byte_stable(built, tmp_path):
    logs = []
    for name in ("one", "two"):
        d = tmp_path / name
        assert run("tune", "--index", built / "idx.bfix", "--judgments", F.JUDGMENTS, "--space", F.SPACE,
                   "--config", F.CONFIG, "--budget", 13, "--seed", 3, "--out", d) == 0
        logs.append((d / "trials.csv").read_bytes())
        assert {p.name for p in d.iterdir()} >= {"trials.csv", "trials.json", "best.kv", "manifest-tune.json"}
    assert logs[0] == logs[1]
    assert len(logs[0].decode().splitlines()) == 14
    reports = []
    for _ in range(2):
        out = tmp_path / "rep"
        assert run("report", "--log", tmp_path / "one/trials.csv", "--baseline", F.CONFIG, "--queries", F.QUERIES,
                   "--out", out) == 0
        reports.append(((out / "segments.csv").read_bytes(), (out / "queries.csv").read_bytes()))
    assert reports[0] == reports[1]
    assert (tmp_path / "rep/manifest-report.json").exists()


def test_tune_segment_filter(built, tmp_path, capsys):
    common = ["tune", "--index", built / "idx.bfix", "--judgments", F.JUDGMENTS, "--space", F.SPACE,
              "--budget", 12, "--out", tmp_path / "seg"]
    assert run(*common, "--segments", "job_title/1") == 1  # needs --queries
    assert run(*common, "--segments", "job_title/1", "--queries", F.QUERIES) == 0
    meta = json.loads((tmp_path / "seg/trials.json").read_text())
    assert meta["segments"] == "job_title/1"
