"""Run the full workflow on the bundled fixture through the command line.

index -> judgment set construction -> baseline evaluation -> tuning ->
segment report -> BM25 sweep on the title field. Everything lands in
``--out`` together with one manifest per step.

    python scripts/run_pipeline.py --out runs/demo --budget 40
"""

import argparse
import subprocess
import sys
from pathlib import Path

from reltune import fixtures as F


def step(*args) -> None:
    cmd = [sys.executable, "-m", "reltune", "-v", *map(str, args)]
    print("$ reltune", " ".join(map(str, args)), flush=True)
    subprocess.run(cmd, check=True)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("runs/fixture"))
    ap.add_argument("--budget", type=int, default=40)
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args()
    out = args.out
    out.mkdir(parents=True, exist_ok=True)

    step("build-index", "--corpus", F.CORPUS, "--out", out / "index.bfix")
    step("build-evalset", "--index", out / "index.bfix", "--queries", F.QUERIES, "--locations", F.LOCATIONS,
         "--labels", F.LABELS, "--exclude", F.EXCLUDE, "--seed", args.seed, "--out", out / "judgments.tsv")
    step("evaluate", "--index", out / "index.bfix", "--config", F.CONFIG, "--judgments", out / "judgments.tsv",
         "--out", out / "baseline.csv")
    step("tune", "--index", out / "index.bfix", "--judgments", out / "judgments.tsv", "--space", F.SPACE,
         "--config", F.CONFIG, "--budget", args.budget, "--seed", args.seed, "--out", out / "tune")
    step("evaluate", "--index", out / "index.bfix", "--config", out / "tune" / "best.kv",
         "--judgments", out / "judgments.tsv", "--out", out / "tuned.csv")
    step("report", "--log", out / "tune" / "trials.csv", "--baseline", F.CONFIG, "--queries", F.QUERIES,
         "--out", out / "report")
    step("sweep-bm25", "--index", out / "index.bfix", "--judgments", out / "judgments.tsv",
         "--config", out / "tune" / "best.kv", "--field", "title",
         "--b", "0,0.25,0.5,0.75,1", "--k", "0.3,0.6,1.2,2,3", "--out", out / "title_heatmap.csv")
    print(f"outputs in {out}")


if __name__ == "__main__":
    main()
