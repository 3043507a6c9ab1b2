"""Delimited numeric tables."""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class DataError(ValueError):
    """Unreadable or non-numeric dataset."""


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...]
    target_name: str
    path: str

    @property
    def n_rows(self) -> int:
        return len(self.X)

    @property
    def n_features(self) -> int:
        return self.X.shape[1]


def _splitter(line: str, delimiter):
    if delimiter is None:
        if "," in line:
            return lambda s: [c.strip() for c in s.split(",")]
        if "\t" in line:
            return lambda s: [c.strip() for c in s.split("\t")]
        return lambda s: s.split()
    if delimiter in ("whitespace", " "):
        return lambda s: s.split()
    return lambda s: [c.strip() for c in s.split(delimiter)]


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def read_rows(path, delimiter=None, header=None):
    """Parse a delimited file into ``(column_names or None, float matrix)``.

    ``delimiter=None`` picks comma, tab or whitespace from the first line.
    ``header=None`` treats the first line as a header if any of its cells is
    not a number. Blank lines and lines starting with ``#`` are skipped.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    lines = [(i + 1, ln) for i, ln in enumerate(text.splitlines())
             if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise DataError(f"{path}: no data")
    split = _splitter(lines[0][1], delimiter)
    names = None
    first = split(lines[0][1])
    if header is None:
        header = not all(_is_number(c) for c in first)
    if header:
        names = [re.sub(r"\s+", " ", c.strip().strip('"')) for c in first]
        lines = lines[1:]
    width = len(names) if names else len(first)
    rows = []
    for lineno, ln in lines:
        cells = split(ln)
        if len(cells) != width:
            raise DataError(f"{path}:{lineno}: expected {width} columns, found {len(cells)}")
        try:
            rows.append([float(c) for c in cells])
        except ValueError:
            bad = next(c for c in cells if not _is_number(c))
            raise DataError(f"{path}:{lineno}: non-numeric cell {bad!r}") from None
    M = np.asarray(rows, dtype=float).reshape(len(rows), width)
    if not np.all(np.isfinite(M)):
        r, _ = np.argwhere(~np.isfinite(M))[0]
        raise DataError(f"{path}:{lines[r][0]}: missing or non-finite value")
    return names, M


def ingest_table(path, delimiter=None, target=-1, header=None, min_rows: int = 10) -> Dataset:
    """Load a regression table; ``target`` is a column name or index."""
    names, M = read_rows(path, delimiter, header)
    ncol = M.shape[1]
    if names is None:
        names = [f"x{i}" for i in range(ncol)]
    if isinstance(target, str):
        if target not in names:
            raise DataError(f"target column {target!r} not found; columns are {names}")
        t = names.index(target)
    else:
        if not -ncol <= int(target) < ncol:
            raise DataError(f"target index {target} out of range for {ncol} columns")
        t = int(target) % ncol
    if ncol < 2:
        raise DataError("need at least one feature column and a target")
    if len(M) < min_rows:
        raise DataError(f"{path}: {len(M)} rows, need at least {min_rows}")
    feats = [i for i in range(ncol) if i != t]
    return Dataset(M[:, feats], M[:, t], tuple(names[i] for i in feats), names[t], str(path))
