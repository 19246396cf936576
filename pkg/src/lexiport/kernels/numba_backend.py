"""Compiled training kernel: CBOW negative sampling over one sentence shard.

The inner loop is jitted with cache=True (compile once per machine) and
nogil=True so multi-worker training can run shards on real threads. The
in-kernel RNG is a 64-bit LCG (state * 6364136223846793005 +
1442695040888963407, draws from the top 31 bits) so the pure-numpy backend
can reproduce the identical stream.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

BACKEND = "numba"

_MUL = np.uint64(6364136223846793005)
_INC = np.uint64(1442695040888963407)
_SHIFT = np.uint64(33)


@njit(cache=True, nogil=True)
def _rng_fill(state, out):
    for i in range(out.shape[0]):
        state = state * _MUL + _INC
        out[i] = state >> _SHIFT
    return state


def rng_stream(state: int, n: int) -> tuple[np.ndarray, int]:
    """n successive RNG draws, for cross-backend equivalence checks."""
    out = np.empty(n, dtype=np.uint64)
    new_state = _rng_fill(np.uint64(state), out)
    return out, int(new_state)


@njit(cache=True, nogil=True)
def _train_epoch(sent_ids, sent_offsets, unit_idx, unit_off, syn0, syn1,
                 noise, window, negatives, initial_lr, processed_before,
                 total_planned, state):
    dim = syn0.shape[1]
    vocab_size = syn1.shape[0]
    uw = np.uint64(window)
    ut = np.uint64(noise.shape[0])
    max_unit = 0
    for w in range(unit_off.shape[0] - 1):
        u = unit_off[w + 1] - unit_off[w]
        if u > max_unit:
            max_unit = u
    scratch = np.empty(2 * window * max_unit, np.int64)
    h = np.empty(dim, np.float32)
    g = np.empty(dim, np.float32)
    loss = 0.0
    examples = 0
    processed = 0
    for s in range(sent_offsets.shape[0] - 1):
        start = sent_offsets[s]
        end = sent_offsets[s + 1]
        for i in range(start, end):
            processed += 1
            decay = 1.0 - (processed_before + processed) / total_planned
            if decay < 1e-4:
                decay = 1e-4
            lr = initial_lr * decay
            state = state * _MUL + _INC
            b = 1 + int((state >> _SHIFT) % uw)
            lo = i - b
            if lo < start:
                lo = start
            hi = i + b
            if hi > end - 1:
                hi = end - 1
            n_rows = 0
            for j in range(lo, hi + 1):
                if j == i:
                    continue
                w = sent_ids[j]
                for t in range(unit_off[w], unit_off[w + 1]):
                    scratch[n_rows] = unit_idx[t]
                    n_rows += 1
            if n_rows == 0:
                continue
            inv = np.float32(1.0 / n_rows)
            for d in range(dim):
                h[d] = 0.0
            for r in range(n_rows):
                row = scratch[r]
                for d in range(dim):
                    h[d] += syn0[row, d]
            for d in range(dim):
                h[d] *= inv
            for d in range(dim):
                g[d] = 0.0
            center = sent_ids[i]
            for neg in range(negatives + 1):
                if neg == 0:
                    target = center
                    label = 1.0
                else:
                    if vocab_size < 2:
                        break
                    state = state * _MUL + _INC
                    target = noise[int((state >> _SHIFT) % ut)]
                    while target == center:
                        state = state * _MUL + _INC
                        target = noise[int((state >> _SHIFT) % ut)]
                    label = 0.0
                x = 0.0
                for d in range(dim):
                    x += syn1[target, d] * h[d]
                z = -x if label == 1.0 else x
                if z > 30.0:
                    loss += z
                elif z >= -30.0:
                    loss += math.log1p(math.exp(z))
                if x > 30.0:
                    sig = 1.0
                elif x < -30.0:
                    sig = 0.0
                else:
                    sig = 1.0 / (1.0 + math.exp(-x))
                alpha = np.float32(lr * (label - sig))
                for d in range(dim):
                    g[d] += alpha * syn1[target, d]
                for d in range(dim):
                    syn1[target, d] += alpha * h[d]
            examples += 1
            for r in range(n_rows):
                row = scratch[r]
                for d in range(dim):
                    syn0[row, d] += g[d]
    return loss, examples, processed, state


def train_epoch(sent_ids, sent_offsets, unit_idx, unit_off, syn0, syn1,
                noise, window, negatives, initial_lr, processed_before,
                total_planned, state: int):
    """Run one pass over a sentence shard, updating syn0/syn1 in place.

    Returns (loss_sum, example_count, tokens_processed, rng_state).
    """
    loss, examples, processed, new_state = _train_epoch(
        sent_ids, sent_offsets, unit_idx, unit_off, syn0, syn1, noise,
        window, negatives, initial_lr, processed_before, total_planned,
        np.uint64(state))
    return float(loss), int(examples), int(processed), int(new_state)
