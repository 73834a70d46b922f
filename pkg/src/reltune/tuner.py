"""Bayesian optimization of relevance configs over discrete parameter spaces.

A tuning run evaluates ``budget`` assignments of the tunable parameters.
The first trials come from a scrambled Sobol sequence; afterwards a GP fit
to all (one-hot assignment, objective) pairs scores every unevaluated
assignment by expected improvement and the best one is tried next.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.stats import qmc

from .analyzer import FIELDS
from .errors import ConfigError, DataError
from .evaluation import Evaluator
from .index import Index
from .kvformat import Scalar, format_kv, format_scalar, parse_kv, parse_scalar, read_kv
from .metrics import JudgmentSet
from .relevance import RelevanceConfig
from .surrogate import GaussianProcess

RANDOM_INIT = "RANDOM_INIT"
MODEL_GUIDED = "MODEL_GUIDED"
MAX_CANDIDATES = 10
# larger spaces are scored on a seeded random subset of unevaluated points
ENUMERATION_LIMIT = 200_000
SUBSET_SIZE = 20_000

Assignment = dict[str, Scalar]


def _valid_key(key: str) -> bool:
    parts = key.split(".")
    if parts[0] == "boost":
        return len(parts) == 2 and parts[1] in FIELDS
    if parts[0] == "bm25":
        return len(parts) == 3 and (parts[1] in FIELDS or parts[1] == "default") and parts[2] in ("k", "b")
    return key in ("combiner", "combiner.mix", "coverage_penalty_base", "title_complete_bonus")


@dataclass(frozen=True)
class ParameterSpace:
    tunable: Mapping[str, tuple[Scalar, ...]]
    fixed: Mapping[str, Scalar] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "tunable", {k: tuple(v) for k, v in self.tunable.items()})
        object.__setattr__(self, "fixed", dict(self.fixed))
        if not self.tunable:
            raise ConfigError("parameter space has no tunable parameters")
        overlap = set(self.tunable) & set(self.fixed)
        if overlap:
            raise ConfigError(f"parameters both tunable and fixed: {', '.join(sorted(overlap))}")
        for key in [*self.tunable, *self.fixed]:
            if not _valid_key(key):
                raise ConfigError(f"{key!r} is not a tunable relevance parameter")
        for key, values in self.tunable.items():
            if not values:
                raise ConfigError(f"{key}: empty candidate list")
            if len(values) > MAX_CANDIDATES:
                raise ConfigError(f"{key}: {len(values)} candidates, at most {MAX_CANDIDATES} allowed")
            if len(set(values)) != len(values):
                raise ConfigError(f"{key}: duplicate candidate values")
            for v in values:
                # every candidate must yield a valid config on its own
                RelevanceConfig().with_overrides({key: v})
        RelevanceConfig().with_overrides(self.fixed)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self.tunable)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(v) for v in self.tunable.values())

    @property
    def size(self) -> int:
        return math.prod(self.sizes)

    @property
    def dimension(self) -> int:
        return sum(self.sizes)

    def indices(self, assignment: Mapping[str, Scalar]) -> tuple[int, ...]:
        if set(assignment) != set(self.tunable):
            raise ConfigError(f"assignment keys {sorted(assignment)} do not match {sorted(self.tunable)}")
        out = []
        for name, values in self.tunable.items():
            try:
                out.append(values.index(assignment[name]))
            except ValueError:
                raise ConfigError(f"{name}: {assignment[name]!r} is not a candidate value") from None
        return tuple(out)

    def assignment(self, indices: Sequence[int]) -> Assignment:
        return {name: values[i] for (name, values), i in zip(self.tunable.items(), indices)}

    def encode(self, assignment: Mapping[str, Scalar]) -> np.ndarray:
        return self.encode_indices(np.array([self.indices(assignment)]))[0]

    def encode_indices(self, idx: np.ndarray) -> np.ndarray:
        """One-hot rows for an (n, n_params) array of candidate indices."""
        idx = np.asarray(idx, dtype=int).reshape(-1, len(self.sizes))
        out = np.zeros((len(idx), self.dimension))
        offset = 0
        for j, n in enumerate(self.sizes):
            out[np.arange(len(idx)), offset + idx[:, j]] = 1.0
            offset += n
        return out

    def decode(self, vector: Sequence[float]) -> Assignment:
        vector = np.asarray(vector)
        idx, offset = [], 0
        for n in self.sizes:
            block = vector[offset:offset + n]
            if block.sum() != 1 or set(np.unique(block)) - {0.0, 1.0}:
                raise ConfigError("vector is not a valid one-hot encoding")
            idx.append(int(np.argmax(block)))
            offset += n
        return self.assignment(idx)

    def all_indices(self) -> np.ndarray:
        return np.array(list(itertools.product(*[range(n) for n in self.sizes])), dtype=int)

    def materialize(self, base: RelevanceConfig, assignment: Mapping[str, Scalar]) -> RelevanceConfig:
        return base.with_overrides({**self.fixed, **assignment})

    def to_kv(self) -> dict:
        return {**{k: list(v) for k, v in self.tunable.items()}, **self.fixed}

    def dumps(self) -> str:
        return format_kv(self.to_kv())

    @classmethod
    def from_kv(cls, items: Mapping[str, object]) -> "ParameterSpace":
        tunable = {k: tuple(v) for k, v in items.items() if isinstance(v, (list, tuple))}
        fixed = {k: v for k, v in items.items() if not isinstance(v, (list, tuple))}
        return cls(tunable, fixed)

    @classmethod
    def loads(cls, text: str) -> "ParameterSpace":
        return cls.from_kv(parse_kv(text, "<space>"))

    @classmethod
    def load(cls, path: str | Path) -> "ParameterSpace":
        return cls.from_kv(read_kv(path))


@dataclass(frozen=True)
class Trial:
    trial_index: int
    assignment: Assignment
    objective: float
    phase: str


@dataclass
class TrialLog:
    space: ParameterSpace
    seed: int
    trials: list[Trial] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.trials)

    @property
    def best(self) -> int:
        """Index of the best trial; the earliest wins ties."""
        if not self.trials:
            raise DataError("empty trial log")
        top = max(t.objective for t in self.trials)
        return next(i for i, t in enumerate(self.trials) if t.objective == top)

    @property
    def best_trial(self) -> Trial:
        return self.trials[self.best]

    def incumbent(self) -> list[float]:
        return list(itertools.accumulate((t.objective for t in self.trials), max))

    def evaluated(self) -> set[tuple[int, ...]]:
        return {self.space.indices(t.assignment) for t in self.trials}

    def header(self) -> list[str]:
        return ["trial_index", "phase", *self.space.names, "objective"]

    @staticmethod
    def row(trial: Trial, names: Sequence[str]) -> list[str]:
        return [str(trial.trial_index), trial.phase,
                *(format_scalar(trial.assignment[n]) for n in names), repr(float(trial.objective))]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.header())
        for t in self.trials:
            writer.writerow(self.row(t, self.space.names))
        return buf.getvalue()

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv(), encoding="utf-8")

    @classmethod
    def read(cls, path: str | Path, space: ParameterSpace, seed: int) -> "TrialLog":
        log = cls(space, seed)
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != log.header():
                raise DataError(f"{path}: header does not match the parameter space")
            for lineno, row in enumerate(reader, 2):
                if not row:
                    continue
                if len(row) != len(header):
                    # a torn final row from an interrupted run is dropped
                    break
                values = {}
                for name, text in zip(space.names, row[2:-1]):
                    match = [v for v in space.tunable[name] if format_scalar(v) == text
                             or v == parse_scalar(text)]
                    if not match:
                        raise DataError(f"{path}:{lineno}: {name}={text} is not a candidate value")
                    values[name] = match[0]
                log.trials.append(Trial(int(row[0]), values, float(row[-1]), row[1]))
        return log


def n_init(space: ParameterSpace) -> int:
    return min(space.size, max(8, 2 * len(space.names)))


def _init_point(log: TrialLog, space: ParameterSpace, seed: int) -> tuple[int, ...]:
    evaluated = log.evaluated()
    m = max(16, 4 * n_init(space))
    sobol = qmc.Sobol(d=len(space.sizes), scramble=True, seed=seed)
    points = sobol.random_base2(int(math.ceil(math.log2(m))))
    sizes = np.array(space.sizes)
    for u in points:
        idx = tuple(int(i) for i in np.minimum((u * sizes).astype(int), sizes - 1))
        if idx not in evaluated:
            return idx
    rng = np.random.default_rng([seed, len(log)])
    while True:
        idx = tuple(int(rng.integers(n)) for n in space.sizes)
        if idx not in evaluated:
            return idx


def _candidates(space: ParameterSpace, evaluated: set, seed: int, step: int) -> np.ndarray:
    if space.size <= ENUMERATION_LIMIT:
        allidx = space.all_indices()
        mask = np.array([tuple(r) not in evaluated for r in allidx])
        return allidx[mask]
    rng = np.random.default_rng([seed, step])
    draws = np.stack([rng.integers(n, size=SUBSET_SIZE) for n in space.sizes], axis=1)
    draws = np.unique(draws, axis=0)
    mask = np.array([tuple(r) not in evaluated for r in draws])
    return draws[mask]


def suggest(log: TrialLog, space: ParameterSpace, seed: int) -> tuple[Assignment, str]:
    """Next assignment to evaluate and the phase it belongs to."""
    if len(log) < n_init(space):
        return space.assignment(_init_point(log, space, seed)), RANDOM_INIT
    evaluated = log.evaluated()
    if len(evaluated) >= space.size:
        return dict(log.best_trial.assignment), MODEL_GUIDED
    X = space.encode_indices(np.array([space.indices(t.assignment) for t in log.trials]))
    y = np.array([t.objective for t in log.trials])
    gp = GaussianProcess().fit(X, y)
    cand = _candidates(space, evaluated, seed, len(log))
    if len(cand) == 0:
        return space.assignment(_init_point(log, space, seed)), MODEL_GUIDED
    enc = space.encode_indices(cand)
    ei = gp.expected_improvement(enc)
    tied = enc[ei == ei.max()]
    # lexicographically smallest encoding among the maximizers
    order = np.lexsort(tied.T[::-1])
    return space.decode(tied[order[0]]), MODEL_GUIDED


Objective = Callable[[Assignment], float]


def _meta(space: ParameterSpace, seed: int, extra: Mapping | None) -> dict:
    return {"seed": seed, "space": space.dumps(), **(extra or {})}


def optimize(space: ParameterSpace, objective: Objective, budget: int, seed: int,
             log_path: str | Path | None = None, meta: Mapping | None = None,
             on_trial: Callable[[Trial], None] | None = None) -> TrialLog:
    """Run sequential optimization of ``objective`` over ``space``.

    With ``log_path`` each trial is appended to a CSV as soon as it finishes
    and an existing log for the same space and seed is resumed.
    """
    if budget < 1:
        raise ConfigError("budget must be >= 1")
    log = TrialLog(space, seed)
    fh = None
    if log_path is not None:
        log_path = Path(log_path)
        meta_path = log_path.with_suffix(".json")
        info = _meta(space, seed, meta)
        if log_path.exists() and meta_path.exists():
            old = json.loads(meta_path.read_text(encoding="utf-8"))
            if old != info:
                raise DataError(f"{log_path} was written by a different run setup; refusing to resume")
            log = TrialLog.read(log_path, space, seed)
            log_path.write_text(log.to_csv(), encoding="utf-8")
        else:
            log_path.write_text(",".join(log.header()) + "\n", encoding="utf-8")
        meta_path.write_text(json.dumps(info, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        fh = open(log_path, "a", encoding="utf-8", newline="")
    try:
        writer = csv.writer(fh, lineterminator="\n") if fh else None
        while len(log) < budget and len(log.evaluated()) < space.size:
            assignment, phase = suggest(log, space, seed)
            value = float(objective(assignment))
            if not math.isfinite(value):
                raise DataError(f"objective returned {value} for {assignment}")
            trial = Trial(len(log), assignment, value, phase)
            log.trials.append(trial)
            if writer:
                writer.writerow(TrialLog.row(trial, space.names))
                fh.flush()
            if on_trial:
                on_trial(trial)
    finally:
        if fh:
            fh.close()
    return log


def run_optimization(space: ParameterSpace, judgment_sets: Sequence[JudgmentSet], index: Index,
                     base_config: RelevanceConfig, budget: int, seed: int,
                     log_path: str | Path | None = None, evaluator: Evaluator | None = None,
                     meta: Mapping | None = None, on_trial=None) -> TrialLog:
    """Tune ``base_config`` to maximize mean NDCG@5 over ``judgment_sets``."""
    if not judgment_sets:
        raise DataError("no judgment sets to tune on")
    if budget < n_init(space):
        raise ConfigError(f"budget {budget} is smaller than the {n_init(space)} initial random trials")
    evaluator = evaluator or Evaluator(index, judgment_sets)
    meta = {"base_config": base_config.dumps(), **(meta or {})}

    def objective(assignment: Assignment) -> float:
        return evaluator(space.materialize(base_config, assignment))

    return optimize(space, objective, budget, seed, log_path, meta, on_trial)


def best_config(log: TrialLog, base_config: RelevanceConfig) -> RelevanceConfig:
    return log.space.materialize(base_config, log.best_trial.assignment)


# -- BM25 sweeps ------------------------------------------------------------

def sweep_bm25(field_name: str, b_values: Sequence[float], k_values: Sequence[float],
               base_config: RelevanceConfig, judgment_sets: Sequence[JudgmentSet], index: Index,
               evaluator: Evaluator | None = None) -> np.ndarray:
    """Mean NDCG@5 for every (b, k) pair on one field; rows follow ``b_values``."""
    if field_name not in FIELDS:
        raise ConfigError(f"unknown field {field_name!r}")
    if not b_values or not k_values:
        raise ConfigError("b and k value lists must be non-empty")
    evaluator = evaluator or Evaluator(index, judgment_sets)
    out = np.empty((len(b_values), len(k_values)))
    for i, b in enumerate(b_values):
        for j, k in enumerate(k_values):
            cfg = base_config.with_overrides({f"bm25.{field_name}.b": b, f"bm25.{field_name}.k": k})
            out[i, j] = evaluator(cfg)
    return out


def heatmap_csv(matrix: np.ndarray, b_values: Sequence[float], k_values: Sequence[float]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["b\\k", *(repr(float(k)) for k in k_values)])
    for b, row in zip(b_values, matrix):
        writer.writerow([repr(float(b)), *(repr(float(v)) for v in row)])
    return buf.getvalue()


def read_heatmap(text: str) -> tuple[np.ndarray, list[float], list[float]]:
    rows = list(csv.reader(io.StringIO(text)))
    k_values = [float(v) for v in rows[0][1:]]
    b_values = [float(r[0]) for r in rows[1:]]
    matrix = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    return matrix, b_values, k_values
