"""Random forest of gini decision trees with bootstrap bagging."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from cbdetect import kernels
from cbdetect.errors import DataError, ModelFormatError


@dataclass(frozen=True)
class RFConfig:
    n_estimators: int
    max_features: Union[str, int] = "sqrt"
    min_samples_leaf: int = 1
    n_jobs: int = 1
    seed: int = 0
    max_depth: Optional[int] = None
    bootstrap: bool = True  # test hook: off trains every tree on the full sample

    def __post_init__(self):
        if self.n_estimators < 1:
            raise DataError("n_estimators must be >= 1")
        if self.min_samples_leaf < 1:
            raise DataError("min_samples_leaf must be >= 1")
        if self.n_jobs < 1:
            raise DataError("n_jobs must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise DataError("max_depth must be >= 1 when set")
        if isinstance(self.max_features, str):
            if self.max_features not in ("sqrt", "all"):
                raise DataError(f"max_features must be 'sqrt', 'all', or a count, got {self.max_features!r}")
        elif self.max_features < 1:
            raise DataError("max_features count must be >= 1")


class Tree:
    """Axis-aligned threshold tree in flat-array form.

    Node i is a leaf when ``feature[i] < 0``; internal nodes route
    ``x[feature] <= threshold`` to ``left``. Leaves hold class counts.
    """

    __slots__ = ("feature", "threshold", "left", "right", "count0", "count1")

    def __init__(self, feature, threshold, left, right, count0, count1):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.count0 = np.asarray(count0, dtype=np.int64)
        self.count1 = np.asarray(count1, dtype=np.int64)

    def __len__(self) -> int:
        return len(self.feature)

    def predict_label(self, x: np.ndarray) -> int:
        i = 0
        while self.feature[i] >= 0:
            i = self.left[i] if x[self.feature[i]] <= self.threshold[i] else self.right[i]
        # leaf vote: majority of training samples, ties to class 0
        return int(self.count1[i] > self.count0[i])


class _TreeBuilder:
    def __init__(self, X, y, cfg: RFConfig, rng: np.random.Generator, k_features: int):
        self.X = X
        self.y = y
        self.cfg = cfg
        self.rng = rng
        self.k = k_features
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.count0: list[int] = []
        self.count1: list[int] = []

    def _new_node(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.count0.append(0)
        self.count1.append(0)
        return len(self.feature) - 1

    def grow(self, idx: np.ndarray, depth: int) -> int:
        node = self._new_node()
        ys = self.y[idx]
        c1 = int(ys.sum())
        c0 = len(idx) - c1
        self.count0[node] = c0
        self.count1[node] = c1
        if (
            c0 == 0
            or c1 == 0
            or len(idx) < 2 * self.cfg.min_samples_leaf
            or (self.cfg.max_depth is not None and depth >= self.cfg.max_depth)
        ):
            return node

        d = self.X.shape[1]
        if self.k < d:
            candidates = np.sort(self.rng.choice(d, size=self.k, replace=False))
        else:
            candidates = np.arange(d)
        best_score = math.inf
        best_feature = -1
        best_pos = -1
        # candidates scanned in ascending index order with strict improvement,
        # so score ties resolve to the lowest feature index; within a feature
        # the kernel prefers the lowest threshold
        for f in candidates:
            col = self.X[idx, f]
            order = np.argsort(col, kind="stable")
            vals = np.ascontiguousarray(col[order])
            labs = np.ascontiguousarray(ys[order])
            pos, score = kernels.best_split(vals, labs, self.cfg.min_samples_leaf)
            if pos >= 0 and score < best_score:
                best_score = score
                best_feature = int(f)
                best_pos = pos
        if best_feature < 0:
            return node

        col = self.X[idx, best_feature]
        order = np.argsort(col, kind="stable")
        vals = col[order]
        a = float(vals[best_pos - 1])
        b = float(vals[best_pos])
        thr = a + (b - a) / 2.0
        if not (a <= thr < b):  # adjacent floats can round the midpoint onto b
            thr = a
        self.feature[node] = best_feature
        self.threshold[node] = thr
        left_idx = idx[order[:best_pos]]
        right_idx = idx[order[best_pos:]]
        self.left[node] = self.grow(left_idx, depth + 1)
        self.right[node] = self.grow(right_idx, depth + 1)
        return node

    def build(self, idx: np.ndarray) -> Tree:
        self.grow(idx, 0)
        return Tree(self.feature, self.threshold, self.left, self.right, self.count0, self.count1)


def _resolve_max_features(spec: Union[str, int], d: int) -> int:
    if spec == "sqrt":
        return max(1, math.isqrt(d))
    if spec == "all":
        return d
    k = int(spec)
    if not (1 <= k <= d):
        raise DataError(f"max_features {k} outside 1..{d}")
    return k


@dataclass
class Forest:
    trees: list
    n_features: int
    config: RFConfig


def train_random_forest(X: np.ndarray, y: np.ndarray, cfg: RFConfig) -> Forest:
    """Train ``n_estimators`` trees on bootstrap resamples.

    Each tree draws from its own generator seeded by (seed, tree index), so
    results are identical no matter how trees are scheduled across the
    ``n_jobs`` workers. Splits consider ``max_features`` candidate features
    sampled without replacement and pick the lowest weighted child gini,
    ties resolving to the lowest feature index, then the lowest threshold.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise DataError(f"feature matrix {X.shape} does not align with {y.shape[0]} labels")
    n = X.shape[0]
    if n < 1:
        raise DataError("cannot train on an empty dataset")
    if not np.isin(y, (0, 1)).all():
        raise DataError("labels must be 0 or 1")
    k = _resolve_max_features(cfg.max_features, X.shape[1])

    def build_one(t: int) -> Tree:
        rng = np.random.default_rng([cfg.seed, t])
        idx = rng.integers(0, n, size=n) if cfg.bootstrap else np.arange(n)
        return _TreeBuilder(X, y, cfg, rng, k).build(idx)

    if cfg.n_jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.n_jobs) as pool:
            trees = list(pool.map(build_one, range(cfg.n_estimators)))
    else:
        trees = [build_one(t) for t in range(cfg.n_estimators)]
    return Forest(trees=trees, n_features=X.shape[1], config=cfg)


def predict_forest(f: Forest, x: np.ndarray) -> tuple[float, int]:
    """Vote fraction for class 1 and the majority label; ties go to class 0."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (f.n_features,):
        raise DataError(f"input has shape {x.shape} but the forest expects ({f.n_features},)")
    votes = sum(t.predict_label(x) for t in f.trees)
    prob = votes / len(f.trees)
    return prob, int(prob > 0.5)


def forest_probs(f: Forest, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    return np.array([predict_forest(f, row)[0] for row in X], dtype=np.float64)


_TREE_ARRAY_NAMES = ("feature", "threshold", "left", "right", "count0", "count1")


def forest_arrays(f: Forest) -> dict:
    """Flat named arrays for the model container, one group per tree."""
    arrays = {}
    for t, tree in enumerate(f.trees):
        for name in _TREE_ARRAY_NAMES:
            arrays[f"tree{t}.{name}"] = getattr(tree, name)
    return arrays


def forest_from_arrays(cfg: RFConfig, n_features: int, arrays: dict) -> Forest:
    """Rebuild a forest from its config and saved tree arrays."""
    trees = []
    for t in range(cfg.n_estimators):
        parts = []
        for name in _TREE_ARRAY_NAMES:
            key = f"tree{t}.{name}"
            if key not in arrays:
                raise ModelFormatError(f"forest state lacks array {key!r}")
            parts.append(arrays[key])
        if len(set(len(p) for p in parts)) != 1:
            raise ModelFormatError(f"tree {t} arrays disagree on node count")
        trees.append(Tree(*parts))
    return Forest(trees=trees, n_features=n_features, config=cfg)
