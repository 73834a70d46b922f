"""Run manifests written next to every output artifact."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping

from . import __version__


def file_sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    subcommand: str
    inputs: dict[str, str]  # resolved path -> sha256
    parameters: dict[str, object]
    seed: int
    outputs: list[str] = field(default_factory=list)
    tool_version: str = __version__
    started: str = field(default_factory=now)
    finished: str = ""

    @classmethod
    def start(cls, subcommand: str, inputs: Mapping[str, str | Path | None], parameters: Mapping[str, object],
              seed: int) -> "RunManifest":
        resolved = {}
        for path in inputs.values():
            if path is not None:
                p = Path(path).resolve()
                resolved[str(p)] = file_sha256(p)
        # inputs are identified by content, not by the path they were given under
        params = {k: v for k, v in parameters.items() if k not in inputs and k != "seed"}
        return cls(subcommand, resolved, params, seed)

    @property
    def config_hash(self) -> str:
        """Changes iff an input file byte, a parameter, or the seed changes."""
        blob = json.dumps({"inputs": sorted(self.inputs.values()), "parameters": self.parameters,
                           "seed": self.seed, "subcommand": self.subcommand}, sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()

    def finish(self, out_dir: str | Path, outputs: list[str | Path]) -> Path:
        self.outputs = [str(Path(o).resolve()) for o in outputs]
        self.finished = now()
        data = {**asdict(self), "config_hash": self.config_hash}
        path = Path(out_dir) / f"manifest-{self.subcommand}.json"
        path.write_text(json.dumps(data, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")
        return path
