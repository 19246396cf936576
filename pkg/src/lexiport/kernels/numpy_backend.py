"""Pure-numpy training kernel, algorithmically identical to the compiled one.

Same update order, same 64-bit LCG stream (Python ints masked to 64 bits),
same float32 parameter updates. Targets are processed sequentially so a
negative drawn twice sees the first update, and the input-row scatter uses
np.add.at so duplicate rows accumulate, exactly like the compiled loop.
Selected via LEXIPORT_PURE_NUMPY=1 or when the compiler is unavailable.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND = "numpy"

_MUL = 6364136223846793005
_INC = 1442695040888963407
_MASK = (1 << 64) - 1


def rng_stream(state: int, n: int) -> tuple[np.ndarray, int]:
    """n successive RNG draws, for cross-backend equivalence checks."""
    out = np.empty(n, dtype=np.uint64)
    for i in range(n):
        state = (state * _MUL + _INC) & _MASK
        out[i] = state >> 33
    return out, state


def train_epoch(sent_ids, sent_offsets, unit_idx, unit_off, syn0, syn1,
                noise, window, negatives, initial_lr, processed_before,
                total_planned, state: int):
    """Run one pass over a sentence shard, updating syn0/syn1 in place.

    Returns (loss_sum, example_count, tokens_processed, rng_state).
    """
    tsize = noise.shape[0]
    vocab_size = syn1.shape[0]
    loss = 0.0
    examples = 0
    processed = 0
    for s in range(sent_offsets.shape[0] - 1):
        start = int(sent_offsets[s])
        end = int(sent_offsets[s + 1])
        for i in range(start, end):
            processed += 1
            decay = 1.0 - (processed_before + processed) / total_planned
            if decay < 1e-4:
                decay = 1e-4
            lr = initial_lr * decay
            state = (state * _MUL + _INC) & _MASK
            b = 1 + (state >> 33) % window
            lo = max(i - b, start)
            hi = min(i + b, end - 1)
            pieces = []
            for j in range(lo, hi + 1):
                if j == i:
                    continue
                w = sent_ids[j]
                pieces.append(unit_idx[unit_off[w]:unit_off[w + 1]])
            if not pieces:
                continue
            rows = np.concatenate(pieces)
            h = syn0[rows].sum(axis=0) * np.float32(1.0 / rows.shape[0])
            g = np.zeros_like(h)
            center = int(sent_ids[i])
            for neg in range(negatives + 1):
                if neg == 0:
                    target = center
                    label = 1.0
                else:
                    if vocab_size < 2:
                        break
                    state = (state * _MUL + _INC) & _MASK
                    target = int(noise[(state >> 33) % tsize])
                    while target == center:
                        state = (state * _MUL + _INC) & _MASK
                        target = int(noise[(state >> 33) % tsize])
                    label = 0.0
                x = float(syn1[target] @ h)
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
                g += alpha * syn1[target]
                syn1[target] += alpha * h
            examples += 1
            np.add.at(syn0, rows, g)
    return float(loss), examples, processed, state
