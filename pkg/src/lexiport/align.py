"""Bilingual lexicons and orthogonal Procrustes alignment.

A lexicon file holds one "source target" pair per line (tab- or
space-separated); blank lines and '#' comments are skipped. Fitting solves
argmin over orthogonal W of ||X W - Y||_F, where X stacks target-language
vectors and Y the paired source-language vectors, so the resulting map
carries target-space vectors into the source space. Closed form per
Schoenemann: W* = U V^T from the SVD of X^T Y.
"""

from __future__ import annotations

import os
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import AlignmentError, FormatError
from .vecio import load_matrix, save_matrix


@dataclass
class Lexicon:
    """Deduplicated (source_word, target_word) translation pairs."""

    pairs: list[tuple[str, str]]
    language_pair: tuple[str, str] = ("src", "tgt")

    def __post_init__(self):
        seen = set()
        for src, tgt in self.pairs:
            if not src or not tgt:
                raise AlignmentError(f"empty word in pair {(src, tgt)!r}")
            if (src, tgt) in seen:
                raise AlignmentError(f"duplicate pair {(src, tgt)!r}")
            seen.add((src, tgt))

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass
class OrthogonalMap:
    """d x d orthogonal matrix applied to row vectors as v @ matrix."""

    matrix: np.ndarray
    fit_stats: tuple[int, float] | None = None  # (pairs used, residual norm)

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise AlignmentError(f"map must be square, got {self.matrix.shape}")
        defect = np.max(np.abs(self.matrix.T @ self.matrix
                               - np.eye(self.matrix.shape[0])))
        if defect >= 1e-6:
            raise AlignmentError(f"map is not orthogonal (defect {defect:.3g})")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def parse_lexicon(path: str | os.PathLike,
                  language_pair: tuple[str, str] = ("src", "tgt")) -> Lexicon:
    """Read a lexicon file, keeping the first occurrence of each pair."""
    path = Path(path)
    pairs: list[tuple[str, str]] = []
    seen: set[tuple[str, str]] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split()
            if len(fields) != 2:
                raise FormatError(
                    f"{path}: line {lineno}: expected 2 fields, "
                    f"got {len(fields)}")
            pair = (fields[0], fields[1])
            if pair not in seen:
                seen.add(pair)
                pairs.append(pair)
    return Lexicon(pairs, language_pair)


def _word_vector(model, word: str) -> np.ndarray:
    if hasattr(model, "vector"):
        return model.vector(word)
    return model.row(word)


def fit_alignment(lexicon: Lexicon, source, target,
                  normalize: bool = False) -> OrthogonalMap:
    """Fit the orthogonal map sending target vectors onto source vectors.

    Uses every pair whose two words both have vectors. Below 3 usable
    pairs fitting fails; below `dim` pairs it proceeds with a warning.
    `normalize` scales each row to unit length before fitting.
    """
    if source.dim != target.dim:
        raise AlignmentError(
            f"dimension mismatch: source {source.dim}, target {target.dim}")
    xs, ys = [], []
    for src_word, tgt_word in lexicon.pairs:
        if src_word in source and tgt_word in target:
            xs.append(_word_vector(target, tgt_word))
            ys.append(_word_vector(source, src_word))
    if len(xs) < 3:
        raise AlignmentError(
            f"only {len(xs)} lexicon pairs have vectors on both sides "
            f"(need at least 3)")
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if len(xs) < source.dim:
        warnings.warn(
            f"only {len(xs)} usable pairs for dimension {source.dim}; "
            f"the fitted map may be under-determined", stacklevel=2)
    if not np.any(x):
        raise AlignmentError("degenerate fit: all target vectors are zero")
    if normalize:
        for m in (x, y):
            norms = np.linalg.norm(m, axis=1, keepdims=True)
            np.divide(m, norms, out=m, where=norms > 0)
    u, _, vt = np.linalg.svd(x.T @ y)
    w = u @ vt
    residual = float(np.linalg.norm(x @ w - y))
    return OrthogonalMap(w, fit_stats=(len(xs), residual))


def apply_map(omap: OrthogonalMap, model):
    """Return a copy of `model` with every vector v replaced by v @ matrix.

    Works on any table type exposing apply_linear; word vectors and n-gram
    bucket vectors are both mapped, so norms and cosines are preserved.
    """
    if model.dim != omap.dim:
        raise AlignmentError(
            f"dimension mismatch: model {model.dim}, map {omap.dim}")
    return model.apply_linear(omap.matrix)


def save_map(omap: OrthogonalMap, path: str | os.PathLike) -> None:
    """Export the map as a raw float32 matrix with JSON sidecar."""
    save_matrix(omap.matrix, path)


def load_map(path: str | os.PathLike) -> OrthogonalMap:
    return OrthogonalMap(load_matrix(path))
