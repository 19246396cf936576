"""Benchmark the compiled training kernel against the pure-numpy fallback.

Generates a synthetic Zipf corpus, trains the same model with each backend,
and reports wall time and token throughput. The compiled backend is timed
after one warm-up epoch so JIT compilation does not count.
"""

import argparse
import tempfile
import time
from pathlib import Path

import numpy as np

from lexiport import kernels
from lexiport.corpus import CorpusStream
from lexiport.kernels import numpy_backend
from lexiport.trainer import TrainerConfig, train_cbow_subword

try:
    from lexiport.kernels import numba_backend
except ImportError:
    numba_backend = None


def make_corpus(path: Path, n_tokens: int, n_words: int, seed: int) -> None:
    rng = np.random.default_rng(seed)
    words = [f"w{i:03d}" for i in range(n_words)]
    ranks = np.arange(1, n_words + 1, dtype=np.float64)
    probs = (1.0 / ranks) / np.sum(1.0 / ranks)
    with open(path, "w", encoding="utf-8") as fh:
        written = 0
        while written < n_tokens:
            length = int(rng.integers(8, 21))
            ids = rng.choice(n_words, size=length, p=probs)
            fh.write(" ".join(words[i] for i in ids) + "\n")
            written += length


def run_backend(module, corpus: Path, config: TrainerConfig) -> dict:
    saved = kernels.train_epoch
    kernels.train_epoch = module.train_epoch
    try:
        if module.BACKEND == "numba":
            # warm-up: one tiny run so JIT compilation is off the clock
            warm = TrainerConfig(
                dim=config.dim, epochs=1, negatives=config.negatives,
                window=config.window, min_count=config.min_count,
                seed=config.seed, workers=1,
                bucket_count=config.bucket_count,
                n_min=config.n_min, n_max=config.n_max)
            train_cbow_subword(CorpusStream(corpus), warm)
        start = time.monotonic()
        model = train_cbow_subword(CorpusStream(corpus), config)
        elapsed = time.monotonic() - start
    finally:
        kernels.train_epoch = saved
    tokens = int(np.sum(model.counts)) * config.epochs
    return {"backend": module.BACKEND, "seconds": elapsed,
            "tokens_per_s": tokens / elapsed,
            "final_loss": model.epoch_losses[-1]}


def main() -> int:
    parser = argparse.ArgumentParser(
        description="compare training-kernel backends")
    parser.add_argument("--tokens", type=int, default=100_000)
    parser.add_argument("--words", type=int, default=500)
    parser.add_argument("--dim", type=int, default=50)
    parser.add_argument("--epochs", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    config = TrainerConfig(dim=args.dim, epochs=args.epochs, min_count=2,
                           seed=args.seed, workers=1, bucket_count=100_000,
                           n_min=4, n_max=6)
    with tempfile.TemporaryDirectory() as tmp:
        corpus = Path(tmp) / "corpus.txt"
        make_corpus(corpus, args.tokens, args.words, args.seed)
        results = [run_backend(numpy_backend, corpus, config)]
        if numba_backend is not None:
            results.append(run_backend(numba_backend, corpus, config))

    for res in results:
        print(f"{res['backend']:>6}: {res['seconds']:8.2f} s "
              f"({res['tokens_per_s']:>12,.0f} tokens/s, "
              f"final loss {res['final_loss']:.4f})")
    if len(results) == 2:
        speedup = results[1]["tokens_per_s"] / results[0]["tokens_per_s"]
        drift = abs(results[1]["final_loss"] - results[0]["final_loss"])
        print(f"speedup: {speedup:.1f}x, final-loss drift {drift:.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
