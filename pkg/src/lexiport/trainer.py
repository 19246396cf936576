"""CBOW negative-sampling trainer over hashed character n-gram inputs.

Each corpus word owns one input row plus the bucket rows of its character
n-grams; a context word contributes all of its rows to the averaged hidden
vector. The output side is a per-word matrix trained against 1 positive and
`negatives` noise draws (noise distribution proportional to unigram^0.75).
The learning rate decays linearly to a 1e-4 floor over the planned token
count. With workers=1 and a fixed seed, training is bit-reproducible;
multi-worker training updates shared matrices without locks, so it is only
statistically reproducible.
"""

from __future__ import annotations

import json
import os
import struct
import threading
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .corpus import CorpusStream
from .errors import EmbeddingError, FormatError
from . import kernels
from .ngrams import bucket_indices
from .vecio import VectorTable

MODEL_MAGIC = b"LEXIPORT-EMB\x01"
NOISE_TABLE_SIZE = 1_000_000
_CHUNK_ROWS = 1 << 17


@dataclass
class TrainerConfig:
    dim: int = 300
    epochs: int = 20
    negatives: int = 10
    window: int = 5
    min_count: int = 5
    initial_lr: float = 0.05
    seed: int = 1
    workers: int = 1
    bucket_count: int = 2_000_000
    n_min: int = 3
    n_max: int = 6

    def __post_init__(self):
        if self.dim < 1:
            raise EmbeddingError(f"dim must be >= 1, got {self.dim}")
        if self.epochs < 1:
            raise EmbeddingError(f"epochs must be >= 1, got {self.epochs}")
        if self.negatives < 1:
            raise EmbeddingError(f"negatives must be >= 1, got {self.negatives}")
        if self.window < 1:
            raise EmbeddingError(f"window must be >= 1, got {self.window}")
        if self.min_count < 1:
            raise EmbeddingError(f"min_count must be >= 1, got {self.min_count}")
        if self.initial_lr <= 0:
            raise EmbeddingError(f"initial_lr must be > 0, got {self.initial_lr}")
        if self.workers < 1:
            raise EmbeddingError(f"workers must be >= 1, got {self.workers}")
        if self.bucket_count < 1:
            raise EmbeddingError(
                f"bucket_count must be >= 1, got {self.bucket_count}")
        if self.n_min < 1 or self.n_min > self.n_max:
            raise EmbeddingError(
                f"bad n-gram range [{self.n_min}, {self.n_max}]")


@dataclass
class EmbeddingModel:
    """Trained word vectors plus the shared n-gram bucket table.

    word_vectors holds each word's own input row; the reported vector of a
    word is the mean of that row and its n-gram bucket rows, matching the
    composition used for context words during training.
    """

    tokens: list[str]
    word_vectors: np.ndarray    # (V, dim) float32, own input rows
    bucket_vectors: np.ndarray  # (bucket_count, dim) float32
    n_min: int = 3
    n_max: int = 6
    counts: np.ndarray | None = None
    config: TrainerConfig | None = None
    epoch_losses: list[float] = field(default_factory=list)
    continuation_prefix: str = "##"
    _ids: dict[str, int] = field(init=False, repr=False)
    _reported: np.ndarray | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if not self.tokens:
            raise EmbeddingError("model has no words")
        if (self.word_vectors.ndim != 2 or self.bucket_vectors.ndim != 2
                or self.word_vectors.shape[0] != len(self.tokens)
                or self.word_vectors.shape[1] != self.bucket_vectors.shape[1]):
            raise EmbeddingError(
                f"inconsistent matrix shapes {self.word_vectors.shape} / "
                f"{self.bucket_vectors.shape} for {len(self.tokens)} words")
        if not (np.all(np.isfinite(self.word_vectors))
                and np.all(np.isfinite(self.bucket_vectors))):
            raise EmbeddingError("non-finite value in model matrices")
        if self.n_min < 1 or self.n_min > self.n_max:
            raise EmbeddingError(f"bad n-gram range [{self.n_min}, {self.n_max}]")
        self._ids = {}
        for i, tok in enumerate(self.tokens):
            if not tok or tok in self._ids:
                raise EmbeddingError(f"empty or duplicate word at id {i}")
            self._ids[tok] = i

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, word: str) -> bool:
        return word in self._ids

    @property
    def dim(self) -> int:
        return self.word_vectors.shape[1]

    @property
    def bucket_count(self) -> int:
        return self.bucket_vectors.shape[0]

    def id_of(self, word: str) -> int:
        return self._ids[word]

    def _gram_rows(self, word: str) -> list[int]:
        return bucket_indices(word, self.n_min, self.n_max, self.bucket_count,
                              self.continuation_prefix)

    def vector(self, word: str) -> np.ndarray:
        """Reported vector: (own row + n-gram bucket rows) / (1 + n)."""
        i = self._ids[word]
        grams = self._gram_rows(word)
        acc = self.word_vectors[i].astype(np.float64)
        if grams:
            acc = acc + self.bucket_vectors[np.asarray(grams)].astype(
                np.float64).sum(axis=0)
        return (acc / (1 + len(grams))).astype(np.float32)

    @property
    def reported_matrix(self) -> np.ndarray:
        """(V, dim) float32 matrix of reported vectors, built once."""
        if self._reported is None:
            out = np.empty_like(self.word_vectors)
            for i, tok in enumerate(self.tokens):
                out[i] = self.vector(tok)
            self._reported = out
        return self._reported

    def as_vector_table(self) -> VectorTable:
        return VectorTable(list(self.tokens), self.reported_matrix.copy())

    def apply_linear(self, matrix: np.ndarray) -> "EmbeddingModel":
        """New model with every word and bucket row v replaced by v @ matrix."""
        m = np.asarray(matrix, dtype=np.float64)

        def _mapped(arr: np.ndarray) -> np.ndarray:
            out = np.empty_like(arr)
            for a in range(0, arr.shape[0], _CHUNK_ROWS):
                b = min(a + _CHUNK_ROWS, arr.shape[0])
                out[a:b] = arr[a:b].astype(np.float64) @ m
            return out

        counts = None if self.counts is None else self.counts.copy()
        return EmbeddingModel(
            list(self.tokens), _mapped(self.word_vectors),
            _mapped(self.bucket_vectors), self.n_min, self.n_max, counts,
            self.config, list(self.epoch_losses), self.continuation_prefix)


def train_cbow_subword(stream: CorpusStream,
                       config: TrainerConfig | None = None) -> EmbeddingModel:
    """Train a subword-aware CBOW model on a one-sentence-per-line corpus."""
    config = config or TrainerConfig()
    counts = Counter(stream.tokens())
    if not counts:
        raise EmbeddingError(f"empty corpus: {stream.source}")
    kept = [(tok, c) for tok, c in counts.items() if c >= config.min_count]
    if not kept:
        raise EmbeddingError(
            f"no word occurs at least min_count={config.min_count} times")
    kept.sort(key=lambda kv: (-kv[1], kv[0]))
    tokens = [tok for tok, _ in kept]
    freq = np.array([c for _, c in kept], dtype=np.float64)
    ids = {tok: i for i, tok in enumerate(tokens)}
    vocab_size = len(tokens)

    # input-row unit of each word: its own row, then its bucket rows
    unit_lists = []
    for i, tok in enumerate(tokens):
        grams = bucket_indices(tok, config.n_min, config.n_max,
                               config.bucket_count)
        unit_lists.append([i] + [vocab_size + g for g in grams])
    unit_off = np.zeros(vocab_size + 1, dtype=np.int64)
    for i, unit in enumerate(unit_lists):
        unit_off[i + 1] = unit_off[i] + len(unit)
    unit_idx = np.fromiter((r for unit in unit_lists for r in unit),
                           dtype=np.int64, count=int(unit_off[-1]))

    sentences = []
    for line in stream.lines():
        sent = [ids[w] for w in line.split(" ") if w in ids]
        if sent:
            sentences.append(sent)
    total_tokens = sum(len(s) for s in sentences)
    sent_ids = np.fromiter((w for s in sentences for w in s),
                           dtype=np.int32, count=total_tokens)
    sent_offsets = np.zeros(len(sentences) + 1, dtype=np.int64)
    for i, sent in enumerate(sentences):
        sent_offsets[i + 1] = sent_offsets[i] + len(sent)

    probs = freq ** 0.75
    cum = np.cumsum(probs)
    cum /= cum[-1]
    noise = np.searchsorted(
        cum, (np.arange(NOISE_TABLE_SIZE) + 0.5) / NOISE_TABLE_SIZE
    ).astype(np.int32)

    rng = np.random.default_rng(config.seed)
    bound = 1.0 / config.dim
    rows = vocab_size + config.bucket_count
    syn0 = np.empty((rows, config.dim), dtype=np.float32)
    for a in range(0, rows, _CHUNK_ROWS):
        b = min(a + _CHUNK_ROWS, rows)
        syn0[a:b] = rng.uniform(-bound, bound, (b - a, config.dim))
    syn1 = np.zeros((vocab_size, config.dim), dtype=np.float32)

    total_planned = config.epochs * total_tokens
    processed_cum = 0
    epoch_losses = []
    n_sent = len(sentences)
    for epoch in range(config.epochs):
        if config.workers == 1:
            state = _worker_state(config.seed, epoch, 0)
            loss, n_examples, processed, _ = kernels.train_epoch(
                sent_ids, sent_offsets, unit_idx, unit_off, syn0, syn1,
                noise, config.window, config.negatives, config.initial_lr,
                processed_cum, total_planned, state)
            processed_cum += processed
        else:
            bounds = [n_sent * w // config.workers
                      for w in range(config.workers + 1)]
            results: list[tuple] = [(0.0, 0, 0, 0)] * config.workers
            epoch_start = processed_cum

            def run_shard(widx: int) -> None:
                a, b = bounds[widx], bounds[widx + 1]
                if a == b:
                    return
                results[widx] = kernels.train_epoch(
                    sent_ids, sent_offsets[a:b + 1], unit_idx, unit_off,
                    syn0, syn1, noise, config.window, config.negatives,
                    config.initial_lr, epoch_start + int(sent_offsets[a]),
                    total_planned, _worker_state(config.seed, epoch, widx))

            threads = [threading.Thread(target=run_shard, args=(w,))
                       for w in range(config.workers)]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
            loss = sum(r[0] for r in results)
            n_examples = sum(r[1] for r in results)
            processed_cum += sum(r[2] for r in results)
        epoch_losses.append(loss / max(n_examples, 1))

    return EmbeddingModel(
        tokens, syn0[:vocab_size], syn0[vocab_size:], config.n_min,
        config.n_max, counts=freq.astype(np.int64), config=config,
        epoch_losses=epoch_losses)


def _worker_state(seed: int, epoch: int, worker: int) -> int:
    seq = np.random.SeedSequence([seed, epoch, worker])
    return int(seq.generate_state(1, np.uint64)[0])


def nearest_words(model: EmbeddingModel, query: np.ndarray,
                  k: int) -> list[tuple[str, float]]:
    """k words with the highest cosine to `query`; ties keep word order."""
    q = np.asarray(query, dtype=np.float64)
    if q.shape != (model.dim,):
        raise EmbeddingError(
            f"query shape {q.shape} does not match dimension {model.dim}")
    q_norm = np.linalg.norm(q)
    if q_norm == 0:
        raise EmbeddingError("zero-norm query")
    if not 1 <= k <= len(model):
        raise EmbeddingError(f"k={k} outside [1, {len(model)}]")
    m = model.reported_matrix.astype(np.float64)
    norms = np.linalg.norm(m, axis=1)
    sims = np.zeros(len(model))
    nz = norms > 0
    sims[nz] = (m[nz] @ q) / (norms[nz] * q_norm)
    order = np.argsort(-sims, kind="stable")[:k]
    return [(model.tokens[i], float(sims[i])) for i in order]


def save_model(model: EmbeddingModel, path: str | os.PathLike) -> None:
    """Serialize words, both matrices, and config under a magic header."""
    header = {
        "dim": model.dim,
        "n_min": model.n_min,
        "n_max": model.n_max,
        "bucket_count": model.bucket_count,
        "continuation_prefix": model.continuation_prefix,
        "words": model.tokens,
        "counts": None if model.counts is None else
                  [int(c) for c in model.counts],
        "epoch_losses": model.epoch_losses,
        "config": None if model.config is None else asdict(model.config),
    }
    blob = json.dumps(header, ensure_ascii=False, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(model.word_vectors.astype("<f4", copy=False).tobytes())
        fh.write(model.bucket_vectors.astype("<f4", copy=False).tobytes())


def load_model(path: str | os.PathLike) -> EmbeddingModel:
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(len(MODEL_MAGIC))
        if magic != MODEL_MAGIC:
            raise FormatError(f"{path}: not a model dump (bad magic)")
        (header_len,) = struct.unpack("<I", fh.read(4))
        try:
            header = json.loads(fh.read(header_len).decode("utf-8"))
            dim = int(header["dim"])
            words = list(header["words"])
            bucket_count = int(header["bucket_count"])
        except (ValueError, KeyError, UnicodeDecodeError):
            raise FormatError(f"{path}: malformed model header") from None
        payload = fh.read()
    expected = (len(words) + bucket_count) * dim * 4
    if len(payload) != expected:
        raise FormatError(
            f"{path}: {len(payload)} matrix bytes, expected {expected}")
    data = np.frombuffer(payload, dtype="<f4").reshape(-1, dim)
    counts = header.get("counts")
    config = header.get("config")
    return EmbeddingModel(
        words, data[:len(words)].copy(), data[len(words):].copy(),
        int(header.get("n_min", 3)), int(header.get("n_max", 6)),
        counts=None if counts is None else np.asarray(counts, dtype=np.int64),
        config=None if config is None else TrainerConfig(**config),
        epoch_losses=[float(x) for x in header.get("epoch_losses", [])],
        continuation_prefix=header.get("continuation_prefix", "##"))
