"""Pure-Python/numpy implementations of the hot training kernels.

These are the fallback for :mod:`cbdetect.kernels._speedups` and the
behavioral reference the compiled versions are checked against. Both
backends share one integer PRNG (splitmix64) so that negative-sampling
draws are reproducible independently of numpy's generators.
"""

from __future__ import annotations

import math

import numpy as np

COMPILED = False

_MASK64 = (1 << 64) - 1


def rng_state(seed: int) -> np.ndarray:
    """One-element uint64 array holding the splitmix64 state."""
    return np.array([seed & _MASK64], dtype=np.uint64)


def rng_next(state: np.ndarray) -> int:
    """Advance the state and return the next 64-bit output."""
    s = (int(state[0]) + 0x9E3779B97F4A7C15) & _MASK64
    state[0] = s
    z = s
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def rng_uniform(state: np.ndarray) -> float:
    """Uniform double in [0, 1) with 53 random bits."""
    return (rng_next(state) >> 11) * 2.0**-53


def sample_negatives(state: np.ndarray, cum: np.ndarray, k: int) -> np.ndarray:
    """Draw ``k`` indices from the distribution with cumulative weights ``cum``."""
    out = np.empty(k, dtype=np.int64)
    n = len(cum)
    for i in range(k):
        u = rng_uniform(state)
        idx = int(np.searchsorted(cum, u, side="right"))
        out[i] = min(idx, n - 1)
    return out


def _sigmoid(x: float) -> float:
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def _softplus(x: float) -> float:
    # log(1 + e^x) without overflow
    if x > 0.0:
        return x + math.log1p(math.exp(-x))
    return math.log1p(math.exp(x))


def train_sentence_sg(
    vin: np.ndarray,
    vout: np.ndarray,
    ids: np.ndarray,
    window: int,
    negatives: int,
    alpha0: float,
    alpha_min: float,
    total_pairs: int,
    pairs_done: int,
    neg_cum: np.ndarray,
    neg_ids: np.ndarray,
    state: np.ndarray,
) -> tuple[float, int]:
    """One skip-gram pass over a sentence of token ids, updating in place.

    For every (center, context) pair within ``window`` this takes a single
    SGD step on the negative-sampling objective
    ``-log s(u_ctx . v_cen) - sum_neg log s(-u_neg . v_cen)``.
    The learning rate decays linearly from ``alpha0`` toward ``alpha_min``
    over ``total_pairs`` global pairs. A negative draw that hits the context
    token is skipped (the draw is still consumed). Returns the summed loss
    and the number of pairs processed.
    """
    n = len(ids)
    loss = 0.0
    k = 0
    for i in range(n):
        center = int(ids[i])
        lo = i - window
        if lo < 0:
            lo = 0
        hi = i + window + 1
        if hi > n:
            hi = n
        for j in range(lo, hi):
            if j == i:
                continue
            ctx = int(ids[j])
            alpha = alpha0 + (alpha_min - alpha0) * ((pairs_done + k) / total_pairs)
            if alpha < alpha_min:
                alpha = alpha_min
            v = vin[center]
            accum = np.zeros_like(v)

            u = vout[ctx]
            f = float(np.dot(v, u))
            loss += _softplus(-f)
            g = (1.0 - _sigmoid(f)) * alpha
            accum += g * u
            vout[ctx] = u + g * v

            for _ in range(negatives):
                u_draw = rng_uniform(state)
                idx = int(np.searchsorted(neg_cum, u_draw, side="right"))
                if idx >= len(neg_cum):
                    idx = len(neg_cum) - 1
                neg = int(neg_ids[idx])
                if neg == ctx:
                    continue
                u_n = vout[neg]
                f = float(np.dot(v, u_n))
                loss += _softplus(f)
                g = (0.0 - _sigmoid(f)) * alpha
                accum += g * u_n
                vout[neg] = u_n + g * v

            vin[center] = v + accum
            k += 1
    return loss, k


def best_split(values: np.ndarray, labels: np.ndarray, min_leaf: int) -> tuple[int, float]:
    """Best binary split of a pre-sorted feature column by weighted gini.

    ``values`` must be ascending with ``labels`` aligned. Considers every
    boundary between distinct values leaving at least ``min_leaf`` samples
    on each side; returns (split position, weighted child gini), position
    being the size of the left block, or (-1, inf) when no boundary
    qualifies. Ties prefer the smallest position, i.e. the lowest threshold.
    """
    n = len(values)
    if n < 2 * min_leaf:
        return -1, math.inf
    c1 = np.cumsum(labels)
    total1 = int(c1[-1])
    pos = np.arange(min_leaf, n - min_leaf + 1)
    valid = values[pos - 1] != values[pos]
    if not valid.any():
        return -1, math.inf
    nl = pos.astype(np.float64)
    nr = (n - pos).astype(np.float64)
    c1l = c1[pos - 1].astype(np.float64)
    c1r = total1 - c1l
    p1l = c1l / nl
    p0l = (nl - c1l) / nl
    gl = 1.0 - p1l * p1l - p0l * p0l
    p1r = c1r / nr
    p0r = (nr - c1r) / nr
    gr = 1.0 - p1r * p1r - p0r * p0r
    score = (nl * gl + nr * gr) / n
    score[~valid] = math.inf
    best = int(np.argmin(score))
    return int(pos[best]), float(score[best])
