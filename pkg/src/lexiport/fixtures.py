"""Synthetic two-language fixture generator.

Builds a pair of corpora over a shared Markov co-occurrence graph: a source
language of lowercase syllable words and a target language that is a
word-level substitution cipher of it (uppercase words, so the scripts are
disjoint). Because both corpora are independent samples of the same
process, their embedding spaces are near-isomorphic and the cipher table
is exact ground truth for translation retrieval. Also fabricates a base
model over the source words (vocab + random but fixed embedding rows), a
training lexicon, and a held-out pair list for evaluation.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np
import yaml

from .vecio import save_matrix
from .vocab import SPECIAL_TOKENS

_SRC_CONSONANTS = "bdfgklmnprstvz"
_SRC_VOWELS = "aeiou"
_TGT_CONSONANTS = "BDFGKLMNPRSTVZ"
_TGT_VOWELS = "AEIOU"


def _make_words(rng: np.random.Generator, count: int,
                consonants: str, vowels: str) -> list[str]:
    words: list[str] = []
    seen: set[str] = set()
    while len(words) < count:
        syllables = int(rng.integers(2, 4))
        w = "".join(consonants[int(rng.integers(len(consonants)))]
                    + vowels[int(rng.integers(len(vowels)))]
                    for _ in range(syllables))
        if rng.random() < 0.3:
            w += consonants[int(rng.integers(len(consonants)))]
        if w not in seen:
            seen.add(w)
            words.append(w)
    return words


def _sample_sentences(rng: np.random.Generator, successors: np.ndarray,
                      zipf_cum: np.ndarray, n_tokens: int,
                      follow_p: float = 0.85) -> list[list[int]]:
    sentences = []
    total = 0
    while total < n_tokens:
        length = int(rng.integers(8, 21))
        w = int(np.searchsorted(zipf_cum, rng.random()))
        sent = [w]
        for _ in range(length - 1):
            if rng.random() < follow_p:
                w = int(successors[w, int(rng.integers(successors.shape[1]))])
            else:
                w = int(np.searchsorted(zipf_cum, rng.random()))
            sent.append(w)
        sentences.append(sent)
        total += length
    return sentences


def make_cipher_fixture(out_dir: str | os.PathLike, seed: int = 0,
                        n_words: int = 200, n_tokens: int = 200_000,
                        lexicon_size: int = 50, heldout_size: int = 50,
                        base_dim: int = 64, base_fillers: int = 40) -> dict:
    """Write the fixture files into `out_dir` and return their paths.

    Files: source.txt, target.txt, lexicon.txt, heldout.txt,
    source_vocab.txt, base_vocab.txt, base_matrix.bin/.json, cipher.json,
    and a ready-to-run config.yaml sized for the fixture.
    """
    if lexicon_size + heldout_size > n_words:
        raise ValueError(
            f"lexicon_size + heldout_size = {lexicon_size + heldout_size} "
            f"exceeds n_words = {n_words}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    root = np.random.SeedSequence(seed)
    rng_words, rng_graph, rng_src, rng_tgt, rng_base = (
        np.random.default_rng(s) for s in root.spawn(5))

    src_words = _make_words(rng_words, n_words, _SRC_CONSONANTS, _SRC_VOWELS)
    tgt_words = _make_words(rng_words, n_words, _TGT_CONSONANTS, _TGT_VOWELS)
    cipher = dict(zip(src_words, tgt_words))

    zipf = 1.0 / np.arange(1, n_words + 1)
    zipf /= zipf.sum()
    zipf_cum = np.cumsum(zipf)
    # temper successor sampling so rare words get distinctive edges
    succ_p = np.sqrt(zipf)
    succ_p /= succ_p.sum()
    successors = np.empty((n_words, 3), dtype=np.int64)
    for i in range(n_words):
        while True:
            cand = rng_graph.choice(n_words, size=3, replace=False, p=succ_p)
            if i not in cand:
                successors[i] = cand
                break

    def write_corpus(path: Path, rng: np.random.Generator,
                     words: list[str]) -> None:
        sentences = _sample_sentences(rng, successors, zipf_cum, n_tokens)
        with open(path, "w", encoding="utf-8") as fh:
            for sent in sentences:
                fh.write(" ".join(words[w] for w in sent) + "\n")

    write_corpus(out / "source.txt", rng_src, src_words)
    write_corpus(out / "target.txt", rng_tgt, tgt_words)

    pick = rng_base.permutation(n_words)
    lex_ids = pick[:lexicon_size]
    held_ids = pick[lexicon_size:lexicon_size + heldout_size]
    with open(out / "lexicon.txt", "w", encoding="utf-8") as fh:
        fh.write("# source target\n")
        for i in lex_ids:
            fh.write(f"{src_words[i]} {tgt_words[i]}\n")
    with open(out / "heldout.txt", "w", encoding="utf-8") as fh:
        fh.write("# held-out source target pairs, never used for fitting\n")
        for i in held_ids:
            fh.write(f"{src_words[i]} {tgt_words[i]}\n")

    (out / "source_vocab.txt").write_text(
        "".join(w + "\n" for w in src_words), encoding="utf-8")

    fillers = [f"x{i:03d}" for i in range(base_fillers)]
    base_tokens = list(SPECIAL_TOKENS) + src_words + fillers
    (out / "base_vocab.txt").write_text(
        "".join(t + "\n" for t in base_tokens), encoding="utf-8")
    # unit-norm random directions: each row is a decodable identity code
    base_matrix = rng_base.normal(0.0, 1.0, (len(base_tokens), base_dim))
    base_matrix /= np.linalg.norm(base_matrix, axis=1, keepdims=True)
    base_matrix = base_matrix.astype(np.float32)
    save_matrix(base_matrix, out / "base_matrix.bin")

    (out / "cipher.json").write_text(
        json.dumps({"seed": seed, "pairs": cipher}, ensure_ascii=False,
                   indent=2, sort_keys=True) + "\n", encoding="utf-8")

    config = {
        "paths": {
            "source_corpus": "source.txt",
            "target_corpus": "target.txt",
            "base_vocab": "base_vocab.txt",
            "base_matrix": "base_matrix.bin",
            "source_vocab": "source_vocab.txt",
            "lexicon": "lexicon.txt",
            "output_dir": "out",
        },
        "vocab_size": 2000,
        "seed": seed,
        "flags": {"normalize_before_align": True},
        "trainer": {
            "dim": 50,
            "epochs": 5,
            "negatives": 10,
            "window": 5,
            "min_count": 5,
            "initial_lr": 0.05,
            "workers": 1,
            "bucket_count": 100_000,
            "n_min": 4,
            "n_max": 6,
        },
        "transplant": {"k": 10, "tau": 0.1},
    }
    (out / "config.yaml").write_text(
        yaml.safe_dump(config, sort_keys=True), encoding="utf-8")

    return {
        "dir": out,
        "source_corpus": out / "source.txt",
        "target_corpus": out / "target.txt",
        "lexicon": out / "lexicon.txt",
        "heldout": out / "heldout.txt",
        "source_vocab": out / "source_vocab.txt",
        "base_vocab": out / "base_vocab.txt",
        "base_matrix": out / "base_matrix.bin",
        "cipher": cipher,
        "config": out / "config.yaml",
        "source_words": src_words,
        "target_words": tgt_words,
    }
