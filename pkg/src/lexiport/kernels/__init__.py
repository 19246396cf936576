"""Training-kernel backend selection.

The compiled backend is the default. Set LEXIPORT_PURE_NUMPY=1 to force the
pure-numpy path; it is also the automatic fallback when the compiler is not
installed. Both backends expose the same train_epoch contract and produce
the same RNG stream, so results agree up to float accumulation order.
"""

from __future__ import annotations

import os

if os.environ.get("LEXIPORT_PURE_NUMPY", "") == "1":
    from .numpy_backend import BACKEND, rng_stream, train_epoch
else:
    try:
        from .numba_backend import BACKEND, rng_stream, train_epoch
    except ImportError:
        from .numpy_backend import BACKEND, rng_stream, train_epoch

__all__ = ["BACKEND", "rng_stream", "train_epoch"]
