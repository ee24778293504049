"""Time the compiled kernels against the pure-python reference.

Runs both backends on the same inputs, checks they agree, and prints a
small table. Usage: python benchmarks/bench_kernels.py
"""

from __future__ import annotations

import sys
import time

import numpy as np

from cbdetect.kernels import reference

try:
    from cbdetect.kernels import _speedups
except ImportError:
    _speedups = None


def best_of(fn, setup, repeat=5):
    best = float("inf")
    out = None
    for _ in range(repeat):
        args = setup()
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_train_sentence(backend):
    rng = np.random.default_rng(7)
    vocab, dim = 2000, 100
    ids = rng.integers(3, vocab, size=1000).astype(np.int64)
    counts = rng.integers(1, 50, size=vocab).astype(np.float64)
    counts[:3] = 0.0
    weights = counts**0.75
    neg_cum = np.cumsum(weights / weights.sum())
    neg_ids = np.arange(vocab, dtype=np.int64)
    total_pairs = 200_000

    def setup():
        vin = (np.random.default_rng(1).random((vocab, dim)) - 0.5) / dim
        vout = np.zeros((vocab, dim), dtype=np.float64)
        state = backend.rng_state(3)
        return (vin, vout, ids, 5, 5, 0.025, 1e-4, total_pairs, 0, neg_cum, neg_ids, state)

    return best_of(backend.train_sentence_sg, setup)


def bench_best_split(backend):
    rng = np.random.default_rng(11)
    values = np.sort(rng.normal(size=200_000))
    labels = (rng.random(200_000) < 0.5).astype(np.int64)

    def setup():
        return (values, labels, 1)

    return best_of(backend.best_split, setup)


def main() -> int:
    if _speedups is None:
        print("compiled backend unavailable; nothing to compare")
        return 0
    print(f"{'kernel':<20} {'python':>10} {'compiled':>10} {'speedup':>8}")
    for name, bench in (("train_sentence_sg", bench_train_sentence), ("best_split", bench_best_split)):
        t_py, out_py = bench(reference)
        t_c, out_c = bench(_speedups)
        if not np.allclose(np.asarray(out_py, dtype=np.float64), np.asarray(out_c, dtype=np.float64), rtol=1e-9, atol=1e-12):
            print(f"{name}: backends disagree: {out_py} vs {out_c}", file=sys.stderr)
            return 1
        print(f"{name:<20} {t_py:>9.4f}s {t_c:>9.4f}s {t_py / t_c:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
