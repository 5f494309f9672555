"""Plain-text file formats: dense matrices and paired-view CSV datasets."""
from __future__ import annotations

import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch


def format_float(x: float) -> str:
    return f"{float(x):.17g}"


def atomic_write_text(path, text: str) -> None:
    """Write ``text`` to ``path`` via a temp file and rename (UTF-8, LF)."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps_matrix(m) -> str:
    m = np.atleast_2d(np.asarray(m, dtype=np.float64))
    rows, cols = m.shape
    lines = [f"{rows} {cols}"]
    lines.extend(" ".join(format_float(x) for x in row) for row in m)
    return "\n".join(lines) + "\n"


def loads_matrix(text: str) -> np.ndarray:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty matrix file")
    header = lines[0].split()
    if len(header) != 2:
        raise ValueError(f"bad matrix header {lines[0]!r}")
    rows, cols = int(header[0]), int(header[1])
    if len(lines) - 1 != rows:
        raise DimensionMismatch(f"header says {rows} rows, found {len(lines) - 1}")
    out = np.empty((rows, cols))
    for i, ln in enumerate(lines[1:]):
        vals = ln.split()
        if len(vals) != cols:
            raise DimensionMismatch(f"row {i} has {len(vals)} entries, expected {cols}")
        out[i] = [float(x) for x in vals]
    return out


def write_matrix(path, m) -> None:
    atomic_write_text(path, dumps_matrix(m))


def read_matrix(path) -> np.ndarray:
    return loads_matrix(Path(path).read_text(encoding="utf-8"))


def write_paired_csv(path, X, Y=None) -> None:
    """Write one sample per row under a ``x0,..,y0,..`` header."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    cols = [f"x{i}" for i in range(X.shape[1])]
    data = X
    if Y is not None:
        Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
        if Y.shape[0] != X.shape[0]:
            raise DimensionMismatch("X and Y must have the same number of rows")
        cols += [f"y{i}" for i in range(Y.shape[1])]
        data = np.hstack([X, Y])
    lines = [",".join(cols)]
    lines.extend(",".join(format_float(x) for x in row) for row in data)
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_paired_csv(path, dx: int | None = None) -> tuple[np.ndarray, np.ndarray | None]:
    """Read a dataset CSV; split into (X, Y) after ``dx`` columns if given."""
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    header = lines[0].split(",")
    data = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]], dtype=np.float64)
    data = data.reshape(len(lines) - 1, len(header))
    if dx is None:
        dx = sum(1 for h in header if h.startswith("x"))
    if not 0 < dx <= data.shape[1]:
        raise DimensionMismatch(f"dx={dx} incompatible with {data.shape[1]} columns")
    X = data[:, :dx]
    Y = data[:, dx:] if dx < data.shape[1] else None
    return X, Y
