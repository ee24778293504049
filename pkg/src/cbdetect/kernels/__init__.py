"""Numeric kernel backend selection.

The compiled extension is preferred when it imported cleanly; the numpy
reference implementation is the fallback. Setting the environment variable
``CBDETECT_PURE_PYTHON`` to a non-empty value forces the fallback, which is
mainly useful for testing and benchmarking.
"""

import os

from cbdetect.kernels import reference

if os.environ.get("CBDETECT_PURE_PYTHON"):
    _impl = reference
else:
    try:
        from cbdetect.kernels import _speedups as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = reference

COMPILED: bool = _impl.COMPILED
BACKEND: str = "compiled" if COMPILED else "python"

rng_state = _impl.rng_state
rng_next = _impl.rng_next
rng_uniform = _impl.rng_uniform
sample_negatives = _impl.sample_negatives
train_sentence_sg = _impl.train_sentence_sg
best_split = _impl.best_split

__all__ = [
    "BACKEND",
    "COMPILED",
    "best_split",
    "reference",
    "rng_next",
    "rng_state",
    "rng_uniform",
    "sample_negatives",
    "train_sentence_sg",
]
