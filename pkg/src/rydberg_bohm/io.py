"""Delimited series files and run manifests.

A series file is UTF-8 CSV: ``#``-prefixed ``key = value`` metadata lines
(values JSON-encoded), one column-name row, then data rows written with 17
significant digits so that floats round-trip exactly. No timestamps are
written, so identical inputs give byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

import numpy as np

from . import __version__


class SeriesError(ValueError):
    """Malformed series data or unreadable file."""


def _fmt(x) -> str:
    if isinstance(x, (str, bytes)):
        return str(x)
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_series(path, columns, rows, metadata=None) -> Path:
    """Write a rectangular table with a metadata header.

    Raises
    ------
    SeriesError
        If any row has a different length than ``columns`` or the path
        cannot be written.
    """
    path = Path(path)
    columns = [str(c) for c in columns]
    if any("," in c for c in columns):
        raise SeriesError("column names must not contain commas")
    ncol = len(columns)
    lines = []
    meta = {"code_version": __version__}
    meta.update(metadata or {})
    for key in meta:
        lines.append(f"# {key} = {json.dumps(_jsonable(meta[key]), sort_keys=True)}")
    lines.append(",".join(columns))
    for i, row in enumerate(rows):
        row = list(row)
        if len(row) != ncol:
            raise SeriesError(f"row {i} has {len(row)} fields, expected {ncol}")
        lines.append(",".join(_fmt(x) for x in row))
    text = "\n".join(lines) + "\n"
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise SeriesError(f"cannot write {path}: {exc}") from exc
    return path


def write_columns(path, data: dict, metadata=None) -> Path:
    """Write equal-length 1-d arrays keyed by column name."""
    cols = list(data)
    arrays = [np.asarray(data[c]) for c in cols]
    n = {a.shape[0] for a in arrays}
    if len(n) > 1:
        raise SeriesError(f"columns have unequal lengths: {sorted(n)}")
    return write_series(path, cols, zip(*arrays), metadata)


def read_series(path):
    """Read a file written by :func:`write_series`.

    Returns
    -------
    metadata : dict
    columns : list of str
    data : ndarray, shape (rows, columns)
        Non-numeric fields become NaN.
    """
    meta = {}
    columns = None
    rows = []
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise SeriesError(f"cannot read {path}: {exc}") from exc
    with fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                key, _, val = line[1:].partition("=")
                try:
                    meta[key.strip()] = json.loads(val.strip())
                except json.JSONDecodeError:
                    meta[key.strip()] = val.strip()
                continue
            if columns is None:
                columns = line.split(",") if line else []
                continue
            if line:
                rows.append([_parse(x) for x in line.split(",")])
    if columns is None:
        raise SeriesError(f"{path}: missing column header")
    data = np.array(rows, dtype=float).reshape(len(rows), len(columns))
    return meta, columns, data


def _parse(x: str) -> float:
    try:
        return float(x)
    except ValueError:
        return float("nan")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, os.PathLike):
        return os.fspath(obj)
    return obj


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(path, payload: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
