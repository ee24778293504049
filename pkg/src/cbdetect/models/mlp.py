"""Feedforward perceptron stack with batch norm, dropout, and PReLU.

Layers implement explicit forward/backward passes over float64 arrays so
every gradient can be checked against finite differences. The output layer
starts at zero, which makes the no-hidden-layer configuration follow the
same loss trajectory as logistic regression.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from cbdetect.errors import DataError, ModelFormatError, NumericError
from cbdetect.features import fuse
from cbdetect.mathops import bce_grad, bce_with_logits, sigmoid
from cbdetect.optim import make_optimizer

ACTIVATIONS = ("relu", "sigmoid", "tanh", "prelu")
BN_EPS = 1e-5
BN_MOMENTUM = 0.9


@dataclass(frozen=True)
class MLPConfig:
    hidden_layers: tuple = (64,)
    activation: str = "relu"
    dropout_rate: float = 0.0
    batch_norm: bool = False
    optimizer: str = "sgd"
    batch_size: int = 10
    epochs: int = 40
    learning_rate: float = 0.05
    seed: int = 0
    shuffle: bool = True  # test hook: off keeps full-batch runs in row order

    def __post_init__(self):
        object.__setattr__(self, "hidden_layers", tuple(int(h) for h in self.hidden_layers))
        if any(h < 1 for h in self.hidden_layers):
            raise DataError("hidden layer sizes must be >= 1")
        if self.activation not in ACTIVATIONS:
            raise DataError(f"activation must be one of {ACTIVATIONS}, got {self.activation!r}")
        if not (0.0 <= self.dropout_rate < 1.0):
            raise DataError("dropout_rate must lie in [0, 1)")
        if self.optimizer not in ("sgd", "adam"):
            raise DataError(f"optimizer must be 'sgd' or 'adam', got {self.optimizer!r}")
        if self.batch_size < 1:
            raise DataError("batch_size must be >= 1")
        if self.batch_norm and self.batch_size < 2:
            raise DataError("batch_norm needs batch_size >= 2")
        if self.epochs < 1:
            raise DataError("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise DataError("learning_rate must be positive")


def prelu(x, a):
    """x for x >= 0, a*x below; a is the trained per-unit slope."""
    x_arr = np.asarray(x, dtype=np.float64)
    out = np.where(x_arr >= 0, x_arr, a * x_arr)
    if np.isscalar(x):
        return float(out)
    return out


def batch_norm_forward(
    batch: np.ndarray,
    gamma: np.ndarray,
    beta: np.ndarray,
    mode: str = "train",
    momentum: float = BN_MOMENTUM,
    running_mean: Optional[np.ndarray] = None,
    running_var: Optional[np.ndarray] = None,
    eps: float = BN_EPS,
) -> np.ndarray:
    """Standalone batch-norm transform.

    Train mode normalizes by the batch's own mean and population variance
    and, when running buffers are supplied, folds the batch statistics into
    them in place with the given momentum. Infer mode is a pure function of
    the running buffers.
    """
    batch = np.asarray(batch, dtype=np.float64)
    if mode == "train":
        if batch.shape[0] < 2:
            raise DataError("batch norm in train mode needs at least 2 rows")
        mu = batch.mean(axis=0)
        var = batch.var(axis=0)
        if running_mean is not None:
            running_mean *= momentum
            running_mean += (1.0 - momentum) * mu
            running_var *= momentum
            running_var += (1.0 - momentum) * var
    elif mode == "infer":
        if running_mean is None or running_var is None:
            raise DataError("batch norm in infer mode needs running statistics")
        mu = running_mean
        var = running_var
    else:
        raise DataError(f"batch norm mode must be 'train' or 'infer', got {mode!r}")
    xhat = (batch - mu) / np.sqrt(var + eps)
    return gamma * xhat + beta


def dropout_forward(v: np.ndarray, rate: float, mode: str = "train", rng=None) -> np.ndarray:
    """Inverted dropout: zero with prob rate, scale survivors by 1/(1-rate)."""
    v = np.asarray(v, dtype=np.float64)
    if mode == "infer" or rate == 0.0:
        return v.copy()
    if mode != "train":
        raise DataError(f"dropout mode must be 'train' or 'infer', got {mode!r}")
    if rng is None:
        raise DataError("dropout in train mode needs a random generator")
    mask = rng.random(v.shape) >= rate
    return v * mask / (1.0 - rate)


class _Dense:
    def __init__(self, w: np.ndarray, b: np.ndarray):
        self.w = w
        self.b = b

    def forward(self, x, train, rng=None):
        if train:
            self._x = x
        return x @ self.w + self.b

    def backward(self, dy):
        self.dw = self._x.T @ dy
        self.db = dy.sum(axis=0)
        return dy @ self.w.T

    def params(self):
        return [self.w, self.b]

    def grads(self):
        return [self.dw, self.db]


class _BatchNorm:
    def __init__(self, size: int):
        self.gamma = np.ones(size, dtype=np.float64)
        self.beta = np.zeros(size, dtype=np.float64)
        self.running_mean = np.zeros(size, dtype=np.float64)
        self.running_var = np.ones(size, dtype=np.float64)

    def forward(self, x, train, rng=None):
        if not train:
            xhat = (x - self.running_mean) / np.sqrt(self.running_var + BN_EPS)
            return self.gamma * xhat + self.beta
        if x.shape[0] < 2:
            raise DataError("batch norm in train mode needs at least 2 rows")
        mu = x.mean(axis=0)
        var = x.var(axis=0)
        self.running_mean *= BN_MOMENTUM
        self.running_mean += (1.0 - BN_MOMENTUM) * mu
        self.running_var *= BN_MOMENTUM
        self.running_var += (1.0 - BN_MOMENTUM) * var
        self._istd = 1.0 / np.sqrt(var + BN_EPS)
        self._xhat = (x - mu) * self._istd
        return self.gamma * self._xhat + self.beta

    def backward(self, dy):
        n = dy.shape[0]
        self.dgamma = (dy * self._xhat).sum(axis=0)
        self.dbeta = dy.sum(axis=0)
        dxhat = dy * self.gamma
        return (
            self._istd
            / n
            * (n * dxhat - dxhat.sum(axis=0) - self._xhat * (dxhat * self._xhat).sum(axis=0))
        )

    def params(self):
        return [self.gamma, self.beta]

    def grads(self):
        return [self.dgamma, self.dbeta]


class _Dropout:
    def __init__(self, rate: float):
        self.rate = rate

    def forward(self, x, train, rng=None):
        if not train or self.rate == 0.0:
            return x
        if rng is None:
            raise DataError("dropout in train mode needs a random generator")
        self._mask = rng.random(x.shape) >= self.rate
        self._scale = 1.0 / (1.0 - self.rate)
        return x * self._mask * self._scale

    def backward(self, dy):
        return dy * self._mask * self._scale

    def params(self):
        return []

    def grads(self):
        return []


class _Activation:
    def __init__(self, kind: str, size: int):
        self.kind = kind
        # PReLU trains one slope per unit, starting at the usual 0.25
        self.a = np.full(size, 0.25, dtype=np.float64) if kind == "prelu" else None

    def forward(self, x, train, rng=None):
        if self.kind == "relu":
            out = np.where(x >= 0, x, 0.0)
        elif self.kind == "prelu":
            out = np.where(x >= 0, x, self.a * x)
        elif self.kind == "sigmoid":
            out = sigmoid(x)
        else:
            out = np.tanh(x)
        if train:
            self._x = x
            self._out = out
        return out

    def backward(self, dy):
        if self.kind == "relu":
            return dy * (self._x >= 0)
        if self.kind == "prelu":
            neg = self._x < 0
            self.da = (dy * np.where(neg, self._x, 0.0)).sum(axis=0)
            return dy * np.where(neg, self.a, 1.0)
        if self.kind == "sigmoid":
            return dy * self._out * (1.0 - self._out)
        return dy * (1.0 - self._out * self._out)

    def params(self):
        return [self.a] if self.kind == "prelu" else []

    def grads(self):
        return [self.da] if self.kind == "prelu" else []


@dataclass
class MLPModel:
    layers: list
    config: MLPConfig
    input_dim: int
    loss_history: list = field(default_factory=list)
    train_accuracy: list = field(default_factory=list)
    val_accuracy: list = field(default_factory=list)

    def forward(self, X: np.ndarray, train: bool = False, rng=None) -> np.ndarray:
        h = X
        for layer in self.layers:
            h = layer.forward(h, train, rng)
        return h

    def parameters(self) -> list:
        out = []
        for layer in self.layers:
            out.extend(layer.params())
        return out

    def gradients(self) -> list:
        out = []
        for layer in self.layers:
            out.extend(layer.grads())
        return out


def _build_layers(input_dim: int, cfg: MLPConfig, rng: np.random.Generator) -> list:
    layers = []
    prev = input_dim
    gain = 2.0 if cfg.activation in ("relu", "prelu") else 1.0
    for h in cfg.hidden_layers:
        w = rng.normal(0.0, np.sqrt(gain / prev), size=(prev, h))
        layers.append(_Dense(w, np.zeros(h, dtype=np.float64)))
        if cfg.batch_norm:
            layers.append(_BatchNorm(h))
        layers.append(_Activation(cfg.activation, h))
        if cfg.dropout_rate > 0.0:
            layers.append(_Dropout(cfg.dropout_rate))
        prev = h
    # zero-initialized head: with no hidden layers this is exactly the
    # zero-initialized logistic regression
    layers.append(_Dense(np.zeros((prev, 1), dtype=np.float64), np.zeros(1, dtype=np.float64)))
    return layers


def fit_mlp(
    X: np.ndarray,
    y: np.ndarray,
    cfg: MLPConfig,
    val: Optional[tuple] = None,
) -> MLPModel:
    """Train the stack on a plain feature matrix.

    Minibatches are drawn from a seeded shuffle each epoch; per-epoch
    entries record the sample-weighted mean of pre-update batch losses and
    the inference-mode accuracy on train (and validation, when given).
    When batch norm is active a trailing batch of one row is skipped, since
    one row has no batch statistics.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise DataError(f"feature matrix {X.shape} does not align with {y.shape[0]} labels")
    n = X.shape[0]
    if n < 1:
        raise DataError("cannot train on an empty dataset")

    init_rng = np.random.default_rng([cfg.seed, 0])
    shuffle_rng = np.random.default_rng([cfg.seed, 1])
    dropout_rng = np.random.default_rng([cfg.seed, 2])
    model = MLPModel(layers=_build_layers(X.shape[1], cfg, init_rng), config=cfg, input_dim=X.shape[1])
    opt = make_optimizer(cfg.optimizer, cfg.learning_rate)

    for _ in range(cfg.epochs):
        order = shuffle_rng.permutation(n) if cfg.shuffle else np.arange(n)
        loss_sum = 0.0
        loss_count = 0
        for start in range(0, n, cfg.batch_size):
            sel = order[start : start + cfg.batch_size]
            if cfg.batch_norm and len(sel) < 2:
                continue
            z = model.forward(X[sel], train=True, rng=dropout_rng).ravel()
            loss = bce_with_logits(z, y[sel])
            if not np.isfinite(loss):
                raise NumericError("perceptron training loss became non-finite")
            loss_sum += loss * len(sel)
            loss_count += len(sel)
            d = bce_grad(z, y[sel]).reshape(-1, 1)
            for layer in reversed(model.layers):
                d = layer.backward(d)
            opt.step(model.parameters(), model.gradients())
        if loss_count == 0:
            raise DataError("batch norm skipped every batch; dataset too small for batch_size")
        model.loss_history.append(loss_sum / loss_count)
        train_pred = (mlp_probs(model, X) >= 0.5).astype(np.int64)
        model.train_accuracy.append(float((train_pred == y.astype(np.int64)).mean()))
        if val is not None:
            Xv, yv = val
            val_pred = (mlp_probs(model, np.asarray(Xv, dtype=np.float64)) >= 0.5).astype(np.int64)
            model.val_accuracy.append(
                float((val_pred == np.asarray(yv, dtype=np.int64)).mean())
            )
    return model


def mlp_probs(m: MLPModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.shape[-1] != m.input_dim:
        raise DataError(f"input has {X.shape[-1]} features but the model expects {m.input_dim}")
    z = m.forward(X, train=False).ravel()
    return sigmoid(z)


def mlp_loss_and_grads(m: MLPModel, X: np.ndarray, y: np.ndarray) -> tuple[float, list, list]:
    """Train-mode loss and parameter gradients without taking a step.

    Dropout layers must be inactive (rate 0) because finite differencing
    needs repeatable forwards.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    z = m.forward(X, train=True).ravel()
    loss = bce_with_logits(z, y)
    d = bce_grad(z, y).reshape(-1, 1)
    for layer in reversed(m.layers):
        d = layer.backward(d)
    return loss, m.parameters(), m.gradients()


def train_mlp(
    title_vecs: np.ndarray,
    desc_vecs: np.ndarray,
    meta_vecs: np.ndarray,
    y: np.ndarray,
    cfg: MLPConfig,
    val: Optional[tuple] = None,
) -> MLPModel:
    """Fuse title/description embeddings with scaled metadata, then fit."""
    title_vecs = np.asarray(title_vecs, dtype=np.float64)
    desc_vecs = np.asarray(desc_vecs, dtype=np.float64)
    meta_vecs = np.asarray(meta_vecs, dtype=np.float64)
    if not (title_vecs.shape[0] == desc_vecs.shape[0] == meta_vecs.shape[0] == len(y)):
        raise DataError("title, description, metadata, and labels must align")
    X = np.stack(
        [fuse(t, d, mv) for t, d, mv in zip(title_vecs, desc_vecs, meta_vecs)]
    )
    return fit_mlp(X, y, cfg, val=val)


def predict_mlp(
    m: MLPModel, title_vec: np.ndarray, desc_vec: np.ndarray, meta_vec: np.ndarray
) -> tuple[float, int]:
    """Inference-mode probability and label for one video; ties go to 1."""
    x = fuse(title_vec, desc_vec, meta_vec)
    prob = float(mlp_probs(m, x.reshape(1, -1))[0])
    return prob, int(prob >= 0.5)


def mlp_arrays(m: MLPModel) -> dict:
    """Flat named arrays for the model container, keyed by layer position."""
    arrays = {}
    for i, layer in enumerate(m.layers):
        if isinstance(layer, _Dense):
            arrays[f"layer{i}.w"] = layer.w
            arrays[f"layer{i}.b"] = layer.b
        elif isinstance(layer, _BatchNorm):
            arrays[f"layer{i}.gamma"] = layer.gamma
            arrays[f"layer{i}.beta"] = layer.beta
            arrays[f"layer{i}.running_mean"] = layer.running_mean
            arrays[f"layer{i}.running_var"] = layer.running_var
        elif isinstance(layer, _Activation) and layer.a is not None:
            arrays[f"layer{i}.a"] = layer.a
    return arrays


def _restore(target: np.ndarray, arrays: dict, key: str) -> np.ndarray:
    if key not in arrays:
        raise ModelFormatError(f"network state lacks array {key!r}")
    val = np.asarray(arrays[key], dtype=np.float64)
    if val.shape != target.shape:
        raise ModelFormatError(f"array {key!r} has shape {val.shape}, expected {target.shape}")
    return val


def mlp_from_arrays(cfg: MLPConfig, input_dim: int, arrays: dict) -> MLPModel:
    """Rebuild a network from config plus saved arrays; histories start empty."""
    layers = _build_layers(input_dim, cfg, np.random.default_rng(0))
    for i, layer in enumerate(layers):
        if isinstance(layer, _Dense):
            layer.w = _restore(layer.w, arrays, f"layer{i}.w")
            layer.b = _restore(layer.b, arrays, f"layer{i}.b")
        elif isinstance(layer, _BatchNorm):
            layer.gamma = _restore(layer.gamma, arrays, f"layer{i}.gamma")
            layer.beta = _restore(layer.beta, arrays, f"layer{i}.beta")
            layer.running_mean = _restore(layer.running_mean, arrays, f"layer{i}.running_mean")
            layer.running_var = _restore(layer.running_var, arrays, f"layer{i}.running_var")
        elif isinstance(layer, _Activation) and layer.a is not None:
            layer.a = _restore(layer.a, arrays, f"layer{i}.a")
    return MLPModel(layers=layers, config=cfg, input_dim=input_dim)
