"""CSV and JSON plumbing for the command-line interface."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Any

import numpy as np


class CSVFormatError(ValueError):
    pass


def _parse_row(row: list[str]) -> list[float] | None:
    try:
        return [float(c) for c in row]
    except ValueError:
        return None


def read_csv(path: str | Path) -> np.ndarray:
    """Read a numeric CSV into a ``(rows, cols)`` float matrix.

    A first line that does not parse as numbers is treated as a header.
    Ragged rows, non-numeric cells and non-finite values raise
    ``CSVFormatError`` naming the offending line.
    """
    rows: list[list[float]] = []
    width = None
    with open(path, newline="") as fh:
        for lineno, raw in enumerate(csv.reader(fh), start=1):
            cells = [c.strip() for c in raw]
            if not cells or all(c == "" for c in cells):
                continue
            vals = _parse_row(cells)
            if vals is None:
                if lineno == 1:
                    continue
                raise CSVFormatError(f"{path}: line {lineno}: non-numeric cell in {raw!r}")
            if not all(math.isfinite(v) for v in vals):
                raise CSVFormatError(f"{path}: line {lineno}: non-finite value")
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise CSVFormatError(f"{path}: line {lineno}: expected {width} columns, got {len(vals)}")
            rows.append(vals)
    if not rows:
        raise CSVFormatError(f"{path}: no data rows")
    return np.array(rows, dtype=float)


def write_csv(X: np.ndarray, path: str | Path, header: list[str] | None = None) -> None:
    """Write a matrix with shortest round-trip float formatting."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if header:
            w.writerow(header)
        for row in X:
            w.writerow([repr(float(v)) for v in row])


def _jsonable(obj: Any) -> Any:
    if hasattr(obj, "to_dict"):
        return _jsonable(obj.to_dict())
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def write_json(obj: Any, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2)
        fh.write("\n")


def read_json(path: str | Path) -> Any:
    with open(path) as fh:
        return json.load(fh)


def write_report(result: Any, path: str | Path) -> None:
    """Write a report or result table; ``.csv`` paths get a flat table."""
    path = Path(path)
    if path.suffix.lower() != ".csv":
        write_json(result, path)
        return
    rows = _jsonable(result)
    if isinstance(rows, dict):
        rows = [rows]
    keys: list[str] = []
    for r in rows:
        keys.extend(k for k in r if k not in keys)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys)
        w.writeheader()
        for r in rows:
            w.writerow({k: (json.dumps(v) if isinstance(v, (list, dict)) else v) for k, v in r.items()})
