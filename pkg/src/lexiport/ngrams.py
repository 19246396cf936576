"""Character n-gram extraction and the bucket hash.

Subword tokens are represented as sums of character n-gram vectors. Word-initial
tokens are wrapped in boundary markers ("<tok>"); continuation tokens (leading
"##") are word-internal, so they keep only the trailing marker ("tok>"). N-gram
vectors live in a fixed-size hashed bucket table indexed by 32-bit FNV-1a.
"""

from __future__ import annotations

FNV_OFFSET_BASIS = 2166136261
FNV_PRIME = 16777619
_MASK32 = 0xFFFFFFFF


def fnv1a(data: bytes) -> int:
    """32-bit FNV-1a over raw bytes. fnv1a(b"") == 2166136261."""
    h = FNV_OFFSET_BASIS
    for b in data:
        h = ((h ^ b) * FNV_PRIME) & _MASK32
    return h


def extract_ngrams(
    token: str,
    n_min: int,
    n_max: int,
    continuation_prefix: str = "##",
    markers: bool = True,
) -> list[str]:
    """Enumerate the distinct character n-grams of a vocabulary token.

    A word-initial token is wrapped as "<token>"; a continuation token is
    stripped of its prefix and wrapped as "token>" only, since its left edge
    is word-internal. The fully wrapped form itself appears whenever its
    length falls inside [n_min, n_max]. With markers off, the bare
    (prefix-stripped) token is enumerated as-is.

    Duplicated substrings are reported once, in first-occurrence order.
    """
    if not token:
        raise ValueError("token must be non-empty")
    if n_min > n_max:
        raise ValueError(f"n_min {n_min} > n_max {n_max}")
    if continuation_prefix and token.startswith(continuation_prefix):
        body = token[len(continuation_prefix):]
        wrapped = body + ">" if markers else body
    else:
        wrapped = "<" + token + ">" if markers else token
    seen: dict[str, None] = {}
    length = len(wrapped)
    for start in range(length):
        for n in range(n_min, n_max + 1):
            if start + n > length:
                break
            seen.setdefault(wrapped[start:start + n], None)
    return list(seen)


def bucket_indices(
    token: str,
    n_min: int,
    n_max: int,
    bucket_count: int,
    continuation_prefix: str = "##",
    markers: bool = True,
) -> list[int]:
    """Bucket-table row index for each distinct n-gram of `token`."""
    grams = extract_ngrams(token, n_min, n_max, continuation_prefix, markers)
    return [fnv1a(g.encode("utf-8")) % bucket_count for g in grams]
