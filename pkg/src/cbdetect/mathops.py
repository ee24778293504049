"""Small shared numeric primitives.

Logistic regression and the perceptron stack both route their output
nonlinearity and loss through these functions, so the no-hidden-layer
perceptron reduces to logistic regression with matching arithmetic.
"""

from __future__ import annotations

import numpy as np


def sigmoid(z):
    """Elementwise 1/(1+e^-z), stable for large |z|.

    Scalars in, float out; arrays in, float64 array out.
    """
    arr = np.asarray(z, dtype=np.float64)
    out = np.empty_like(arr)
    pos = arr >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-arr[pos]))
    ez = np.exp(arr[~pos])
    out[~pos] = ez / (1.0 + ez)
    if np.isscalar(z) or getattr(z, "ndim", 1) == 0:
        return float(out)
    return out


def softplus(z):
    """Elementwise log(1+e^z) without overflow."""
    return np.logaddexp(0.0, z)


def bce_with_logits(z: np.ndarray, y: np.ndarray) -> float:
    """Mean binary cross-entropy given logits z and 0/1 targets y.

    Uses the identity -[y log p + (1-y) log(1-p)] = softplus(z) - y*z,
    which never forms p and so cannot produce log(0).
    """
    return float(np.mean(softplus(z) - y * z))


def bce_grad(z: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Gradient of :func:`bce_with_logits` with respect to the logits."""
    return (sigmoid(z) - y) / z.shape[0]
