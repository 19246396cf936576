"""Vocabulary transplant: neighbor retrieval, weighted init, export.

Cross-lingual similarities are cosines between static-space tables (U_s for
the screened source tokens, U_t for the new vocabulary). The initialization
of an appended token is a temperature-softmax weighted average of the
BASE-MODEL rows of its top-k source neighbors; similarity happens in the
static space, averaging in the base-model space. Tokens without a usable
static vector (zero-masked) and tokens whose weighted row comes out exactly
zero fall back to a diagonal Gaussian fitted on the screened base rows,
with an RNG keyed by (seed, token text) so each token's draw is stable.
Base-vocabulary rows are never touched.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import TransplantError
from .synth import VocabEmbeddingTable
from .vecio import fit_gaussian, sample_gaussian, save_matrix
from .vocab import SourceVocabSet, Vocabulary, merge_vocab

_TARGET_CHUNK = 1024


@dataclass
class TransplantConfig:
    k: int = 10
    tau: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise TransplantError(f"k must be >= 1, got {self.k}")
        if not self.tau > 0:
            raise TransplantError(f"tau must be > 0, got {self.tau}")
        if self.seed < 0:
            raise TransplantError(f"seed must be >= 0, got {self.seed}")


@dataclass
class SimilarityView:
    """Top-k source neighbors (token, cosine) per non-masked target token."""

    neighbors: dict[str, list[tuple[str, float]]]
    k: int

    def __post_init__(self):
        for tok, lst in self.neighbors.items():
            if not 1 <= len(lst) <= self.k:
                raise TransplantError(
                    f"{tok!r}: {len(lst)} neighbors for k={self.k}")
            sims = [s for _, s in lst]
            if any(not -1.0 <= s <= 1.0 for s in sims):
                raise TransplantError(f"{tok!r}: cosine outside [-1, 1]")
            if any(a < b for a, b in zip(sims, sims[1:])):
                raise TransplantError(f"{tok!r}: neighbors not sorted")


@dataclass
class ProvenanceRecord:
    token: str
    id: int
    kind: str  # "weighted" | "fallback_sampled" | "overlap_copied"
    neighbors: list[tuple[str, float, float]] | None = None  # (src, sim, w)


@dataclass
class TransplantResult:
    merged_vocab: Vocabulary
    matrix: np.ndarray  # (len(merged_vocab), d_model) float32
    provenance: dict[str, ProvenanceRecord]
    appended: list[str]
    overlap: set[str]
    manifest: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.matrix.shape[0] != len(self.merged_vocab):
            raise TransplantError(
                f"matrix has {self.matrix.shape[0]} rows for a "
                f"{len(self.merged_vocab)}-token vocabulary")
        for tok in self.appended:
            if tok not in self.provenance:
                raise TransplantError(f"appended token {tok!r} lacks provenance")


def top_k_similar(u_s: VocabEmbeddingTable, u_t: VocabEmbeddingTable,
                  k: int) -> SimilarityView:
    """Per non-masked target token, the k highest-cosine source tokens.

    Masked rows on either side are excluded; ties prefer the earlier
    source token (lower source id).
    """
    if u_s.dim != u_t.dim:
        raise TransplantError(
            f"dimension mismatch: source {u_s.dim}, target {u_t.dim}")
    src_keep = np.flatnonzero(~u_s.zero_mask)
    if src_keep.size == 0:
        raise TransplantError("every source row is zero-masked")
    if k > src_keep.size:
        raise TransplantError(
            f"k={k} exceeds the {src_keep.size} non-masked source rows")
    src_tokens = [u_s.tokens[i] for i in src_keep]
    s = u_s.vectors[src_keep].astype(np.float64)
    s /= np.linalg.norm(s, axis=1, keepdims=True)
    tgt_keep = np.flatnonzero(~u_t.zero_mask)
    neighbors: dict[str, list[tuple[str, float]]] = {}
    for a in range(0, tgt_keep.size, _TARGET_CHUNK):
        idx = tgt_keep[a:a + _TARGET_CHUNK]
        t = u_t.vectors[idx].astype(np.float64)
        t /= np.linalg.norm(t, axis=1, keepdims=True)
        sims = np.clip(t @ s.T, -1.0, 1.0)
        for row, ti in enumerate(idx):
            order = np.argsort(-sims[row], kind="stable")[:k]
            neighbors[u_t.tokens[ti]] = [
                (src_tokens[j], float(sims[row, j])) for j in order]
    return SimilarityView(neighbors, k)


def softmax_weights(sims, tau: float) -> np.ndarray:
    """Softmax of sims/tau with max subtraction; sums to 1."""
    if not tau > 0:
        raise TransplantError(f"tau must be > 0, got {tau}")
    a = np.asarray(sims, dtype=np.float64) / tau
    a = a - a.max()
    w = np.exp(a)
    return w / w.sum()


def weighted_init(neighbors: list[tuple[float, np.ndarray]],
                  tau: float) -> np.ndarray:
    """Convex combination of neighbor rows, softmax-weighted by sim/tau."""
    if not neighbors:
        raise TransplantError("weighted_init needs at least one neighbor")
    w = softmax_weights([s for s, _ in neighbors], tau)
    rows = np.asarray([r for _, r in neighbors], dtype=np.float64)
    return w @ rows


def _token_rng(seed: int, token: str) -> np.random.Generator:
    digest = hashlib.sha256(token.encode("utf-8")).digest()
    words = [int.from_bytes(digest[i:i + 4], "little") for i in range(0, 32, 4)]
    return np.random.default_rng(np.random.SeedSequence([seed] + words))


def run_transplant(base_vocab: Vocabulary, base_matrix: np.ndarray,
                   source_set: SourceVocabSet, u_s: VocabEmbeddingTable,
                   u_t: VocabEmbeddingTable, new_vocab: Vocabulary,
                   config: TransplantConfig | None = None,
                   input_digests: dict[str, str] | None = None
                   ) -> TransplantResult:
    """Expand the base embedding matrix with rows for the new vocabulary.

    Appended tokens get a weighted init over the base rows of their top-k
    static-space neighbors, or a per-token Gaussian fallback when no static
    vector exists. Overlapping and base tokens keep their base rows.
    """
    config = config or TransplantConfig()
    if base_matrix.ndim != 2 or base_matrix.shape[0] != len(base_vocab):
        raise TransplantError(
            f"base matrix shape {base_matrix.shape} does not match the "
            f"{len(base_vocab)}-token base vocabulary")
    if base_matrix.shape[1] != source_set.dim:
        raise TransplantError(
            f"base matrix dimension {base_matrix.shape[1]} != screened row "
            f"dimension {source_set.dim}")
    if list(u_s.tokens) != list(source_set.tokens):
        raise TransplantError("U_s rows do not correspond to the screened set")
    if list(u_t.tokens) != list(new_vocab.tokens):
        raise TransplantError("U_t rows do not correspond to the new vocabulary")

    base = np.ascontiguousarray(base_matrix, dtype=np.float32)
    merged, overlap, appended = merge_vocab(base_vocab, new_vocab)
    n_base = len(base_vocab)
    matrix = np.empty((len(merged), base.shape[1]), dtype=np.float32)
    matrix[:n_base] = base

    gauss = fit_gaussian(source_set.rows)
    view = top_k_similar(u_s, u_t, config.k) if appended else \
        SimilarityView({}, config.k)
    src_row = {tok: source_set.rows[i]
               for i, tok in enumerate(source_set.tokens)}

    provenance: dict[str, ProvenanceRecord] = {}
    n_weighted = n_fallback = 0
    for pos, tok in enumerate(appended):
        row_id = n_base + pos
        pairs = view.neighbors.get(tok)
        if pairs:
            sims = [s for _, s in pairs]
            w = softmax_weights(sims, config.tau)
            rows = np.asarray([src_row[s] for s, _ in pairs], dtype=np.float64)
            new_row = w @ rows
        else:
            new_row = None
        if new_row is None or not new_row.any():
            rng = _token_rng(config.seed, tok)
            matrix[row_id] = sample_gaussian(gauss, rng).astype(np.float32)
            provenance[tok] = ProvenanceRecord(tok, row_id, "fallback_sampled")
            n_fallback += 1
        else:
            matrix[row_id] = new_row.astype(np.float32)
            provenance[tok] = ProvenanceRecord(
                tok, row_id, "weighted",
                [(s, float(sim), float(wx))
                 for (s, sim), wx in zip(pairs, w)])
            n_weighted += 1
    for tok in sorted(overlap):
        provenance[tok] = ProvenanceRecord(
            tok, base_vocab.id_of(tok), "overlap_copied")

    manifest = {
        "version": __version__,
        "config": {"k": config.k, "tau": config.tau, "seed": config.seed},
        "inputs": dict(input_digests or {}),
        "counts": {
            "base": n_base,
            "overlap": len(overlap),
            "appended": len(appended),
            "weighted": n_weighted,
            "fallback_sampled": n_fallback,
        },
    }
    return TransplantResult(merged, matrix, provenance, appended, overlap,
                            manifest)


def export_result(result: TransplantResult, out_dir: str | os.PathLike) -> None:
    """Write vocab.txt, matrix.bin (+sidecar), provenance.jsonl, manifest.json.

    The provenance file carries one record per appended token, in appended
    order. All outputs are byte-deterministic for a given result.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result.merged_vocab.save(out / "vocab.txt")
    save_matrix(result.matrix, out / "matrix.bin")
    with open(out / "provenance.jsonl", "w", encoding="utf-8") as fh:
        for tok in result.appended:
            rec = result.provenance[tok]
            obj = {
                "token": rec.token,
                "id": rec.id,
                "provenance": rec.kind,
                "neighbors": [
                    {"src": s, "sim": sim, "weight": w}
                    for s, sim, w in rec.neighbors or []],
            }
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")
    (out / "manifest.json").write_text(
        json.dumps(result.manifest, indent=2, sort_keys=True,
                   ensure_ascii=False) + "\n", encoding="utf-8")


def sha256_file(path: str | os.PathLike) -> str:
    """Hex SHA-256 of a file, for run manifests."""
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
