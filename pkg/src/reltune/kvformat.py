"""Flat ``key = value`` text format shared by config and space files.

Values are numbers, bare strings, or ``[a, b, c]`` lists of those.
"""

from __future__ import annotations

from pathlib import Path
from typing import Union

from .errors import ConfigError

Scalar = Union[int, float, str]


def parse_scalar(text: str) -> Scalar:
    text = text.strip()
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        return text[1:-1]
    return text


def format_scalar(value: Scalar) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_kv(text: str, source: str = "<kv>") -> dict[str, Scalar | list[Scalar]]:
    out: dict = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        if value.startswith("["):
            if not value.endswith("]"):
                raise ConfigError(f"{source}:{lineno}: unterminated list")
            inner = value[1:-1].strip()
            out[key] = [parse_scalar(v) for v in inner.split(",")] if inner else []
        else:
            out[key] = parse_scalar(value)
    return out


def format_kv(items: dict) -> str:
    lines = []
    for key, value in items.items():
        if isinstance(value, (list, tuple)):
            lines.append(f"{key} = [{', '.join(format_scalar(v) for v in value)}]")
        else:
            lines.append(f"{key} = {format_scalar(value)}")
    return "\n".join(lines) + "\n"


def read_kv(path: str | Path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_kv(text, str(path))
