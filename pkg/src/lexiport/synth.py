"""Static embedding synthesis for whole vocabularies.

A token present in the model as a full word keeps that word's vector.
Anything else is synthesized as the sum of its character n-gram vectors:
bucket rows for a trained model with a bucket table, or the n-grams that
happen to be full words for a plain vector table. A token with no usable
n-gram falls back to an exact zero row, which the table records in its
zero mask. Special tokens are always zero-masked.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import EmbeddingError
from .ngrams import extract_ngrams, fnv1a
from .vecio import VectorTable
from .vocab import SPECIAL_TOKENS, Vocabulary

_SPECIALS_SET = frozenset(SPECIAL_TOKENS)


@dataclass
class SynthConfig:
    """N-gram synthesis knobs.

    A trained model's own n-gram range wins over n_min/n_max here; the
    range in the config only drives plain vector tables. ngram_mean
    divides the n-gram sum by the number of contributing vectors;
    ngram_markers toggles boundary-marker wrapping.
    """

    n_min: int = 3
    n_max: int = 6
    ngram_mean: bool = False
    ngram_markers: bool = True
    continuation_prefix: str = "##"

    def __post_init__(self):
        if self.n_min < 1 or self.n_min > self.n_max:
            raise EmbeddingError(
                f"bad n-gram range [{self.n_min}, {self.n_max}]")


@dataclass
class VocabEmbeddingTable:
    """Per-token static vectors for a vocabulary, with a zero-row mask."""

    tokens: list[str]
    vectors: np.ndarray   # (len(tokens), d) float32
    zero_mask: np.ndarray  # (len(tokens),) bool
    _ids: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        if self.vectors.ndim != 2 or self.vectors.shape[0] != len(self.tokens):
            raise EmbeddingError(
                f"vector matrix shape {self.vectors.shape} does not match "
                f"{len(self.tokens)} tokens")
        if self.zero_mask.shape != (len(self.tokens),):
            raise EmbeddingError(
                f"zero_mask shape {self.zero_mask.shape} does not match "
                f"{len(self.tokens)} tokens")
        if not np.all(np.isfinite(self.vectors)):
            raise EmbeddingError("non-finite row in embedding table")
        row_is_zero = ~np.any(self.vectors, axis=1)
        if not np.array_equal(row_is_zero, self.zero_mask):
            raise EmbeddingError("zero_mask disagrees with exact-zero rows")
        self._ids = {tok: i for i, tok in enumerate(self.tokens)}
        if len(self._ids) != len(self.tokens):
            raise EmbeddingError("duplicate token in embedding table")

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._ids

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def id_of(self, token: str) -> int:
        return self._ids[token]

    def row(self, token: str) -> np.ndarray:
        return self.vectors[self._ids[token]]

    def as_vector_table(self) -> VectorTable:
        """Copy into a plain VectorTable, e.g. for .vec export."""
        return VectorTable(list(self.tokens), self.vectors.copy())

    @classmethod
    def from_vectors(cls, tokens: Sequence[str],
                     vectors: np.ndarray) -> "VocabEmbeddingTable":
        """Rebuild a table (e.g. from a .vec file); mask = exact-zero rows."""
        vectors = np.asarray(vectors, dtype=np.float32)
        return cls(list(tokens), vectors, ~np.any(vectors, axis=1))


def _word_vector(model, word: str) -> np.ndarray:
    if hasattr(model, "vector"):
        return model.vector(word)
    return model.row(word)


def synthesize_embedding(token: str, model,
                         config: SynthConfig | None = None) -> np.ndarray:
    """Static vector for one token: word lookup, n-gram sum, or zeros.

    The prefix-stripped token short-circuits to its word vector when the
    model knows it as a full word. Otherwise its n-grams are summed
    (bucket rows when the model has a bucket table, full-word vectors
    in a plain table); no usable n-gram yields an exact zero vector.
    """
    config = config or SynthConfig()
    if not token:
        raise ValueError("token must be non-empty")
    prefix = config.continuation_prefix
    if prefix and token.startswith(prefix) and len(token) > len(prefix):
        core = token[len(prefix):]
    else:
        core = token
    if core in model:
        return np.asarray(_word_vector(model, core), dtype=np.float32).copy()
    n_min = getattr(model, "n_min", config.n_min)
    n_max = getattr(model, "n_max", config.n_max)
    grams = extract_ngrams(token, n_min, n_max, prefix,
                           markers=config.ngram_markers)
    if hasattr(model, "bucket_vectors"):
        if grams:
            idx = [fnv1a(g.encode("utf-8")) % model.bucket_count
                   for g in grams]
            rows = model.bucket_vectors[np.asarray(idx)]
        else:
            rows = np.empty((0, model.dim), dtype=np.float32)
    else:
        hits = [g for g in grams if g in model]
        if hits:
            rows = np.stack([_word_vector(model, g) for g in hits])
        else:
            rows = np.empty((0, model.dim), dtype=np.float32)
    if rows.shape[0] == 0:
        return np.zeros(model.dim, dtype=np.float32)
    acc = np.sum(rows.astype(np.float64), axis=0)
    if config.ngram_mean:
        acc /= rows.shape[0]
    return acc.astype(np.float32)


def build_table(vocab: Vocabulary | Sequence[str], model,
                config: SynthConfig | None = None) -> VocabEmbeddingTable:
    """Synthesize a vector for every token; specials are zero-masked."""
    config = config or SynthConfig()
    if isinstance(vocab, Vocabulary):
        tokens = list(vocab.tokens)
        if vocab.continuation_prefix != config.continuation_prefix:
            config = SynthConfig(config.n_min, config.n_max,
                                 config.ngram_mean, config.ngram_markers,
                                 vocab.continuation_prefix)
    else:
        tokens = list(vocab)
    vectors = np.zeros((len(tokens), model.dim), dtype=np.float32)
    for i, tok in enumerate(tokens):
        if tok in _SPECIALS_SET:
            continue
        vectors[i] = synthesize_embedding(tok, model, config)
    zero_mask = ~np.any(vectors, axis=1)
    return VocabEmbeddingTable(tokens, vectors, zero_mask)
