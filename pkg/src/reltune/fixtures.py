"""Paths of the small bundled job-search fixture."""

from pathlib import Path

ROOT = Path(__file__).resolve().parent / "data" / "fixture"

CORPUS = ROOT / "corpus.jsonl"
QUERIES = ROOT / "queries.tsv"
EXCLUDE = ROOT / "exclude.txt"
LOCATIONS = ROOT / "locations.tsv"
LABELS = ROOT / "labels.tsv"
JUDGMENTS = ROOT / "judgments.tsv"
SPACE = ROOT / "space.kv"
CONFIG = ROOT / "config.kv"
