"""Versioned file headers shared by the toolkit's on-disk formats.

Every artifact file (embedding table, feature dataset, model, reports)
starts with a single header line::

    #sessionseg <kind> v<version> <json-metadata>

so that each pipeline stage can refuse inputs of the wrong kind or
version before doing any work.  Floats are serialized with ``repr``,
which in Python 3 is the shortest string that round-trips the exact
float64 value.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import IO, Any

MAGIC = "#sessionseg"


class FileFormatError(ValueError):
    """Raised when a file is missing, truncated, or version-mismatched."""


def write_header(fh: IO[str], kind: str, version: int, meta: dict[str, Any]) -> None:
    fh.write(f"{MAGIC} {kind} v{version} {json.dumps(meta, sort_keys=True)}\n")


def read_header(fh: IO[str], kind: str, version: int) -> dict[str, Any]:
    """Read and validate the header line, returning its metadata dict."""
    line = fh.readline()
    if not line:
        raise FileFormatError(f"empty file, expected a '{kind}' header")
    parts = line.rstrip("\n").split(" ", 3)
    if len(parts) != 4 or parts[0] != MAGIC:
        raise FileFormatError(f"not a sessionseg file (bad header: {line[:60]!r})")
    if parts[1] != kind:
        raise FileFormatError(f"expected kind '{kind}', found '{parts[1]}'")
    if parts[2] != f"v{version}":
        raise FileFormatError(
            f"unsupported {kind} version {parts[2]} (this build reads v{version})"
        )
    try:
        meta = json.loads(parts[3])
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"corrupt header metadata: {exc}") from exc
    if not isinstance(meta, dict):
        raise FileFormatError("header metadata must be a JSON object")
    return meta


def format_float(value: float) -> str:
    """Shortest decimal string that round-trips the exact float64 value."""
    return repr(float(value))


def read_jsonl(path: str | Path) -> list[dict[str, Any]]:
    """Read line-delimited JSON records; blank lines are skipped."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FileFormatError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if not isinstance(rec, dict):
                raise FileFormatError(f"{path}:{lineno}: record is not an object")
            records.append(rec)
    return records


def write_jsonl(path: str | Path, records: list[dict[str, Any]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
