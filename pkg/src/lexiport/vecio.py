"""Embedding I/O: .vec text tables, raw float32 matrices, Gaussian fits.

The .vec format is a UTF-8 text file whose first line is "count dim" and
whose remaining lines are a token followed by dim decimal floats, all
space-separated. Values are stored as float32 and printed with %.9g, which
round-trips float32 exactly. Raw matrices are little-endian float32
row-major blobs described by a JSON sidecar {"rows": ..., "dim": ...}.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmbeddingError, FormatError


@dataclass
class VectorTable:
    """Token-to-row embedding table backed by a float32 matrix."""

    tokens: list[str]
    matrix: np.ndarray  # (len(tokens), dim) float32
    _ids: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        if self.matrix.ndim != 2:
            raise FormatError(f"matrix must be 2-D, got shape {self.matrix.shape}")
        if self.matrix.shape[0] != len(self.tokens):
            raise FormatError(
                f"matrix has {self.matrix.shape[0]} rows for "
                f"{len(self.tokens)} tokens")
        if self.matrix.dtype != np.float32:
            self.matrix = self.matrix.astype(np.float32)
        if not np.all(np.isfinite(self.matrix)):
            raise FormatError("non-finite value in embedding matrix")
        self._ids = {}
        for i, tok in enumerate(self.tokens):
            if not tok:
                raise FormatError(f"empty token at row {i}")
            if tok in self._ids:
                raise FormatError(f"duplicate token {tok!r} at rows "
                                  f"{self._ids[tok]} and {i}")
            self._ids[tok] = i

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._ids

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def id_of(self, token: str) -> int:
        return self._ids[token]

    def row(self, token: str) -> np.ndarray:
        return self.matrix[self._ids[token]]

    def apply_linear(self, matrix: np.ndarray) -> "VectorTable":
        """New table with every row v replaced by v @ matrix (float64 math)."""
        mapped = self.matrix.astype(np.float64) @ matrix
        return VectorTable(list(self.tokens), mapped.astype(np.float32))


@dataclass
class GaussianInit:
    """Per-dimension mean and population variance of an embedding matrix."""

    mean: np.ndarray  # (dim,) float64
    var: np.ndarray   # (dim,) float64, >= 0
    source_row_count: int = 0

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.var = np.asarray(self.var, dtype=np.float64)
        if self.mean.shape != self.var.shape or self.mean.ndim != 1:
            raise EmbeddingError(
                f"mean shape {self.mean.shape} and var shape {self.var.shape} "
                f"must be equal 1-D shapes")
        if not (np.all(np.isfinite(self.mean)) and np.all(np.isfinite(self.var))):
            raise EmbeddingError("non-finite Gaussian statistics")
        if np.any(self.var < 0):
            raise EmbeddingError("negative variance")

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def load_vec(path: str | os.PathLike) -> VectorTable:
    """Parse a .vec file, reporting the 1-based line of any malformation."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        if not header:
            raise FormatError(f"{path}: empty file")
        fields = header.rstrip("\r\n").split(" ")
        if len(fields) != 2:
            raise FormatError(
                f"{path}: line 1: header must be 'count dim', got {len(fields)} "
                f"fields")
        try:
            count, dim = int(fields[0]), int(fields[1])
        except ValueError:
            raise FormatError(
                f"{path}: line 1: header must be two integers") from None
        if count < 0 or dim < 1:
            raise FormatError(f"{path}: line 1: bad header {count} {dim}")
        tokens: list[str] = []
        seen: dict[str, int] = {}
        matrix = np.empty((count, dim), dtype=np.float32)
        n = 0
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\r\n")
            if not line:
                continue
            fields = line.split(" ")
            if len(fields) != dim + 1:
                raise FormatError(
                    f"{path}: line {lineno}: expected token plus {dim} values, "
                    f"got {len(fields)} fields")
            tok = fields[0]
            if not tok:
                raise FormatError(f"{path}: line {lineno}: empty token")
            if tok in seen:
                raise FormatError(
                    f"{path}: line {lineno}: duplicate token {tok!r} "
                    f"(first on line {seen[tok]})")
            if n >= count:
                raise FormatError(
                    f"{path}: line {lineno}: more rows than the declared {count}")
            try:
                matrix[n] = [float(v) for v in fields[1:]]
            except ValueError:
                raise FormatError(
                    f"{path}: line {lineno}: unparsable float value") from None
            seen[tok] = lineno
            tokens.append(tok)
            n += 1
    if n != count:
        raise FormatError(f"{path}: declared {count} rows but found {n}")
    return VectorTable(tokens, matrix)


def save_vec(table: VectorTable, path: str | os.PathLike) -> None:
    """Write a VectorTable in .vec format with %.9g values."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(table)} {table.dim}\n")
        for tok, row in zip(table.tokens, table.matrix):
            fh.write(tok)
            for v in row:
                fh.write(" %.9g" % float(v))
            fh.write("\n")


def save_matrix(matrix: np.ndarray, path: str | os.PathLike) -> None:
    """Write a 2-D matrix as little-endian float32 plus a JSON sidecar."""
    path = Path(path)
    if matrix.ndim != 2:
        raise FormatError(f"matrix must be 2-D, got shape {matrix.shape}")
    data = np.ascontiguousarray(matrix, dtype="<f4")
    data.tofile(path)
    sidecar = {"rows": int(matrix.shape[0]), "dim": int(matrix.shape[1])}
    path.with_suffix(".json").write_text(
        json.dumps(sidecar, sort_keys=True) + "\n", encoding="utf-8")


def load_matrix(path: str | os.PathLike) -> np.ndarray:
    """Read a raw float32 matrix, shaped by its JSON sidecar."""
    path = Path(path)
    sidecar_path = path.with_suffix(".json")
    if not sidecar_path.exists():
        raise FormatError(f"missing matrix sidecar {sidecar_path}")
    try:
        sidecar = json.loads(sidecar_path.read_text(encoding="utf-8"))
        rows, dim = int(sidecar["rows"]), int(sidecar["dim"])
    except (ValueError, KeyError, TypeError):
        raise FormatError(f"{sidecar_path}: sidecar must carry integer "
                          f"'rows' and 'dim'") from None
    expected = rows * dim * 4
    actual = path.stat().st_size
    if actual != expected:
        raise FormatError(
            f"{path}: {actual} bytes but sidecar implies {expected} "
            f"({rows}x{dim} float32)")
    return np.fromfile(path, dtype="<f4").reshape(rows, dim)


def fit_gaussian(matrix: np.ndarray) -> GaussianInit:
    """Per-dimension mean and population variance (ddof=0) in float64."""
    if matrix.ndim != 2 or matrix.shape[0] < 2:
        raise EmbeddingError(
            f"need a 2-D matrix with at least 2 rows to fit, "
            f"got shape {matrix.shape}")
    m = matrix.astype(np.float64)
    return GaussianInit(m.mean(axis=0), m.var(axis=0, ddof=0),
                        source_row_count=matrix.shape[0])


def sample_gaussian(init: GaussianInit, rng: np.random.Generator) -> np.ndarray:
    """Draw one diagonal-Gaussian vector; deterministic given the generator.

    Zero-variance dimensions come out exactly at the mean.
    """
    draws = rng.standard_normal(init.dim)
    return init.mean + np.sqrt(init.var) * draws
