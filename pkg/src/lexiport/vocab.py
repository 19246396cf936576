"""Vocabularies: WordPiece induction, greedy segmentation, screening, merging.

A Vocabulary is an ordered, duplicate-free token list; token id = position.
Non-initial subword pieces carry a continuation prefix ("##"). Induced
vocabularies start with the five reserved specials at the lowest ids.
Screening intersects a monolingual vocabulary with the base model's and
collects the base embedding rows of the shared tokens.
"""

from __future__ import annotations

import os
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import CorpusStream
from .errors import VocabError

SPECIAL_TOKENS = ("[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]")
UNK_TOKEN = "[UNK]"
_SPECIALS_SET = frozenset(SPECIAL_TOKENS)


@dataclass
class Vocabulary:
    """Ordered token list with id lookup and a continuation-prefix convention."""

    tokens: list[str]
    continuation_prefix: str = "##"
    _ids: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self._ids = {}
        for i, tok in enumerate(self.tokens):
            if not tok:
                raise VocabError(f"empty token at id {i}")
            if tok == self.continuation_prefix:
                raise VocabError(f"bare continuation prefix at id {i}")
            if tok in self._ids:
                raise VocabError(f"duplicate token {tok!r} at ids "
                                 f"{self._ids[tok]} and {i}")
            self._ids[tok] = i

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._ids

    def id_of(self, token: str) -> int:
        return self._ids[token]

    @property
    def specials(self) -> set[str]:
        return {t for t in SPECIAL_TOKENS if t in self._ids}

    @classmethod
    def build(cls, tokens: Iterable[str],
              continuation_prefix: str = "##") -> "Vocabulary":
        """Construct with the specials prepended at ids 0..4, in fixed order."""
        ordered = list(SPECIAL_TOKENS)
        seen = set(ordered)
        for tok in tokens:
            if tok not in seen:
                ordered.append(tok)
                seen.add(tok)
        return cls(ordered, continuation_prefix)

    @classmethod
    def load(cls, path: str | os.PathLike,
             continuation_prefix: str = "##") -> "Vocabulary":
        """Read a vocab.txt file: one token per line, line number = id."""
        text = Path(path).read_text(encoding="utf-8")
        tokens = text.split("\n")
        if tokens and tokens[-1] == "":
            tokens.pop()
        return cls(tokens, continuation_prefix)

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for tok in self.tokens:
                fh.write(tok + "\n")


@dataclass
class SourceVocabSet:
    """Screened source-language tokens with their base-model embedding rows."""

    tokens: list[str]
    rows: np.ndarray  # (len(tokens), d_model)

    def __post_init__(self):
        if self.rows.ndim != 2 or self.rows.shape[0] != len(self.tokens):
            raise VocabError(
                f"row count {self.rows.shape[0]} != token count {len(self.tokens)}")
        if not np.all(np.isfinite(self.rows)):
            raise VocabError("non-finite base embedding row in screened set")

    @property
    def dim(self) -> int:
        return self.rows.shape[1]


def induce_wordpiece_vocab(stream: CorpusStream, target_size: int,
                           min_frequency: int = 1,
                           continuation_prefix: str = "##") -> Vocabulary:
    """Train a WordPiece vocabulary of at most `target_size` tokens.

    Starts from the character alphabet (each character that occurs at least
    `min_frequency` times contributes its word-initial and continuation
    forms) and repeatedly merges the adjacent symbol pair with the highest
    score freq(pair) / (freq(left) * freq(right)). Ties break toward the
    more frequent pair, then the lexicographically smaller one. Merging
    stops at `target_size` or when no pair reaches `min_frequency`.
    """
    if min_frequency < 1:
        raise VocabError(f"min_frequency must be >= 1, got {min_frequency}")
    word_freq = Counter(stream.tokens())
    if not word_freq:
        raise VocabError(f"cannot induce a vocabulary from an empty corpus: "
                         f"{stream.source}")
    char_freq: Counter[str] = Counter()
    for word, freq in word_freq.items():
        for ch in word:
            char_freq[ch] += freq
    alphabet = sorted(ch for ch, f in char_freq.items() if f >= min_frequency)
    if not alphabet:
        raise VocabError("no character reaches min_frequency")
    capacity_needed = len(SPECIAL_TOKENS) + 2 * len(alphabet)
    if target_size < capacity_needed:
        raise VocabError(
            f"target_size {target_size} cannot hold the {len(alphabet)}-character "
            f"alphabet ({capacity_needed} tokens needed)")

    vocab_tokens = list(SPECIAL_TOKENS)
    vocab_tokens.extend(alphabet)
    vocab_tokens.extend(continuation_prefix + ch for ch in alphabet)

    alpha_set = set(alphabet)
    segmentations: list[list[str]] = []
    freqs: list[int] = []
    for word, freq in word_freq.items():
        if all(ch in alpha_set for ch in word):
            segmentations.append(
                [word[0]] + [continuation_prefix + ch for ch in word[1:]])
            freqs.append(freq)

    sym_freq: Counter[str] = Counter()
    pair_freq: Counter[tuple[str, str]] = Counter()
    pair_words: dict[tuple[str, str], set[int]] = defaultdict(set)
    for wi, segs in enumerate(segmentations):
        f = freqs[wi]
        for s in segs:
            sym_freq[s] += f
        for pair in zip(segs, segs[1:]):
            pair_freq[pair] += f
            pair_words[pair].add(wi)

    plen = len(continuation_prefix)
    while len(vocab_tokens) < target_size and pair_freq:
        best_pair = None
        best_num = best_den = best_freq = 0
        for pair, pf in pair_freq.items():
            if pf < min_frequency:
                continue
            den = sym_freq[pair[0]] * sym_freq[pair[1]]
            # exact fraction comparison: pf/den vs best_num/best_den
            if best_pair is None:
                better = True
            else:
                lhs, rhs = pf * best_den, best_num * den
                better = lhs > rhs or (lhs == rhs and (
                    pf > best_freq or (pf == best_freq and pair < best_pair)))
            if better:
                best_pair, best_num, best_den, best_freq = pair, pf, den, pf
        if best_pair is None:
            break
        merged_sym = best_pair[0] + best_pair[1][plen:]
        vocab_tokens.append(merged_sym)
        for wi in sorted(pair_words[best_pair]):
            segs = segmentations[wi]
            f = freqs[wi]
            for s in segs:
                sym_freq[s] -= f
            for pair in zip(segs, segs[1:]):
                pair_freq[pair] -= f
                if pair_freq[pair] == 0:
                    del pair_freq[pair]
                pair_words[pair].discard(wi)
            new_segs = []
            i = 0
            while i < len(segs):
                if (i + 1 < len(segs) and segs[i] == best_pair[0]
                        and segs[i + 1] == best_pair[1]):
                    new_segs.append(merged_sym)
                    i += 2
                else:
                    new_segs.append(segs[i])
                    i += 1
            segmentations[wi] = new_segs
            for s in new_segs:
                sym_freq[s] += f
            for pair in zip(new_segs, new_segs[1:]):
                pair_freq[pair] += f
                pair_words[pair].add(wi)

    return Vocabulary(vocab_tokens, continuation_prefix)


def tokenize(vocab: Vocabulary, word: str) -> list[str]:
    """Greedy longest-match-first WordPiece segmentation of a single word.

    Returns [UNK] as the whole segmentation when some position cannot be
    matched by any vocabulary piece.
    """
    if not word or word.split() != [word]:
        raise ValueError(f"expected a single whitespace-free word, got {word!r}")
    prefix = vocab.continuation_prefix
    pieces = []
    start = 0
    n = len(word)
    while start < n:
        end = n
        match = None
        while start < end:
            piece = word[start:end]
            if start > 0:
                piece = prefix + piece
            if piece in vocab:
                match = piece
                break
            end -= 1
        if match is None:
            return [UNK_TOKEN]
        pieces.append(match)
        start = end
    return pieces


def screen_source_vocab(mono_vocab: Vocabulary, base_vocab: Vocabulary,
                        base_matrix: np.ndarray,
                        subsample: int | None = None,
                        seed: int = 0) -> SourceVocabSet:
    """Intersect a monolingual vocabulary with the base model's.

    Returns the shared tokens (specials excluded) in base-vocabulary id
    order, paired with their base embedding rows. `subsample` draws a
    uniformly random subset of that size, reproducible from `seed`.
    """
    if base_matrix.shape[0] != len(base_vocab):
        raise VocabError(
            f"base matrix has {base_matrix.shape[0]} rows for a "
            f"{len(base_vocab)}-token vocabulary")
    ids = [base_vocab.id_of(t) for t in base_vocab.tokens
           if t in mono_vocab and t not in _SPECIALS_SET]
    if not ids:
        raise VocabError("the monolingual and base vocabularies share no tokens")
    if subsample is not None:
        if not 1 <= subsample <= len(ids):
            raise VocabError(
                f"subsample {subsample} outside [1, {len(ids)}] "
                f"(intersection size)")
        rng = np.random.default_rng(seed)
        chosen = rng.choice(len(ids), size=subsample, replace=False)
        chosen.sort()
        ids = [ids[i] for i in chosen]
    tokens = [base_vocab.tokens[i] for i in ids]
    return SourceVocabSet(tokens, base_matrix[np.asarray(ids)].copy())


def save_source_set(source_set: SourceVocabSet,
                    out_dir: str | os.PathLike) -> None:
    """Persist a screened set as tokens.txt plus rows.bin with sidecar."""
    from .vecio import save_matrix
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "tokens.txt").write_text(
        "".join(t + "\n" for t in source_set.tokens), encoding="utf-8")
    save_matrix(source_set.rows, out / "rows.bin")


def load_source_set(in_dir: str | os.PathLike) -> SourceVocabSet:
    from .vecio import load_matrix
    src = Path(in_dir)
    text = (src / "tokens.txt").read_text(encoding="utf-8")
    tokens = [t for t in text.split("\n") if t]
    return SourceVocabSet(tokens, load_matrix(src / "rows.bin"))


def merge_vocab(base_vocab: Vocabulary, new_vocab: Vocabulary
                ) -> tuple[Vocabulary, set[str], list[str]]:
    """Append new-vocabulary tokens missing from the base vocabulary.

    Base tokens keep their ids; appended tokens follow in new-vocabulary
    order. Returns (merged, overlap, appended).
    """
    overlap = set()
    appended = []
    for tok in new_vocab.tokens:
        if tok in base_vocab:
            overlap.add(tok)
        else:
            appended.append(tok)
    merged = Vocabulary(base_vocab.tokens + appended,
                        base_vocab.continuation_prefix)
    return merged, overlap, appended
