"""Binary logistic regression trained by full-batch gradient descent."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from cbdetect.errors import DataError, NumericError
from cbdetect.mathops import bce_grad, bce_with_logits, sigmoid


@dataclass
class LogisticModel:
    w: np.ndarray
    b: float
    loss_history: list = field(default_factory=list)


def logreg_loss_and_grads(
    w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, l2: float = 0.0
) -> tuple[float, np.ndarray, float]:
    """Mean cross-entropy plus l2*|w|^2/2, with gradients for w and b."""
    z = X @ w + b
    loss = bce_with_logits(z, y) + 0.5 * l2 * float(np.dot(w, w))
    delta = bce_grad(z, y)
    gw = X.T @ delta + l2 * w
    gb = float(delta.sum())
    return loss, gw, gb


def train_logreg(
    X: np.ndarray,
    y: np.ndarray,
    learning_rate: float = 0.1,
    epochs: int = 200,
    l2: float = 0.0,
    seed: int = 0,
) -> LogisticModel:
    """Fit weights and bias by full-batch gradient descent from zero init.

    The seed parameter exists for interface uniformity with the other
    trainers; zero initialization leaves nothing for it to randomize.
    ``loss_history[k]`` is the loss at the start of epoch ``k``.
    """
    del seed
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise DataError(f"feature matrix {X.shape} does not align with {y.shape[0]} labels")
    if X.shape[0] < 1:
        raise DataError("cannot train on an empty dataset")
    if l2 < 0:
        raise DataError("l2 must be non-negative")
    w = np.zeros(X.shape[1], dtype=np.float64)
    b = 0.0
    history = []
    for _ in range(epochs):
        loss, gw, gb = logreg_loss_and_grads(w, b, X, y, l2)
        if not np.isfinite(loss):
            raise NumericError("logistic regression loss became non-finite")
        history.append(loss)
        w -= learning_rate * gw
        b -= learning_rate * gb
    return LogisticModel(w=w, b=b, loss_history=history)


def logreg_decision(m: LogisticModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.shape[-1] != m.w.shape[0]:
        raise DataError(
            f"input has {X.shape[-1]} features but the model expects {m.w.shape[0]}"
        )
    return X @ m.w + m.b


def logreg_probs(m: LogisticModel, X: np.ndarray) -> np.ndarray:
    return sigmoid(logreg_decision(m, X))


def predict_logreg(m: LogisticModel, x: np.ndarray) -> tuple[float, int]:
    """Probability and hard label for one input; ties at 0.5 go to class 1."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DataError("predict expects a single feature vector")
    prob = float(sigmoid(float(np.dot(x, m.w) + m.b)))
    return prob, int(prob >= 0.5)
