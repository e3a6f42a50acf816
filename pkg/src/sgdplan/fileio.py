"""Atomic, deterministic file output and strict delimited input.

Numbers are rendered as decimal text with a '.' radix via ``repr``, which is
the shortest round-trip form, so rewriting identical data yields identical
bytes.  Writes go to a temporary file in the target directory followed by an
atomic rename; readers never observe a partial file.
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from .errors import InputError


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        if "," in value or "\n" in value:
            raise ValueError(f"cell text may not contain delimiters: {value!r}")
        return value
    return repr(float(value))


def atomic_write_text(path, text: str) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_csv(path, expected_header):
    """Return [(lineno, cells), ...]; malformed lines are reported by number."""
    try:
        with open(path, "r", newline="") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from exc
    if not lines:
        raise InputError(f"{path}:1: empty file")
    expected = list(expected_header)
    if lines[0].split(",") != expected:
        raise InputError(
            f"{path}:1: expected header {','.join(expected)!r}, got {lines[0]!r}"
        )
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != len(expected):
            raise InputError(
                f"{path}:{lineno}: expected {len(expected)} fields, got {len(cells)}"
            )
        rows.append((lineno, cells))
    return rows


def parse_float(path, lineno, name, text) -> float:
    try:
        return float(text)
    except ValueError:
        raise InputError(f"{path}:{lineno}: bad {name} value {text!r}") from None


def parse_int(path, lineno, name, text) -> int:
    try:
        return int(text)
    except ValueError:
        raise InputError(f"{path}:{lineno}: bad {name} value {text!r}") from None


def parse_bool(path, lineno, name, text) -> bool:
    low = text.strip().lower()
    if low in ("true", "1"):
        return True
    if low in ("false", "0"):
        return False
    raise InputError(f"{path}:{lineno}: bad {name} value {text!r}")


def write_json(path, payload) -> None:
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_json(path):
    try:
        with open(path, "r") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}: {exc.msg}") from exc
