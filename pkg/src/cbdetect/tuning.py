"""Grid search over hyperparameters with deterministic trial seeding."""

from __future__ import annotations

import ast
import csv
import itertools
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from cbdetect.corpus import Dataset
from cbdetect.errors import DataError


@dataclass(frozen=True)
class Grid:
    """Named axes in declaration order; combinations multiply out exactly."""

    axes: tuple  # ((name, (v1, v2, ...)), ...)

    def __post_init__(self):
        if not self.axes:
            raise DataError("grid has no axes")
        seen = set()
        for name, values in self.axes:
            if name in seen:
                raise DataError(f"duplicate grid axis {name!r}")
            seen.add(name)
            if len(values) == 0:
                raise DataError(f"grid axis {name!r} has no values")

    @property
    def size(self) -> int:
        n = 1
        for _, values in self.axes:
            n *= len(values)
        return n

    def combinations(self):
        """Every parameter dict, first axis varying slowest."""
        names = [name for name, _ in self.axes]
        for combo in itertools.product(*(values for _, values in self.axes)):
            yield dict(zip(names, combo))


def parse_grid(text: str) -> Grid:
    """Parse ``axis = [v1, v2, ...]`` lines; # comments and blanks skipped."""
    axes = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        name, eq, rhs = line.partition("=")
        name = name.strip()
        if not eq or not name:
            raise DataError(f"grid line {lineno}: expected 'axis = [values]', got {raw!r}")
        try:
            values = ast.literal_eval(rhs.strip())
        except (ValueError, SyntaxError) as exc:
            raise DataError(f"grid line {lineno}: cannot parse value list: {exc}") from None
        if not isinstance(values, (list, tuple)):
            raise DataError(f"grid line {lineno}: axis {name!r} needs a [list] of values")
        axes.append((name, tuple(values)))
    return Grid(axes=tuple(axes))


def load_grid(path) -> Grid:
    with open(path, encoding="utf-8") as fh:
        return parse_grid(fh.read())


@dataclass(frozen=True)
class TrialResult:
    params: dict
    accuracy: float
    wall_time: float
    seed: int

    def __post_init__(self):
        if not (0.0 <= self.accuracy <= 1.0):
            raise DataError(f"trial accuracy {self.accuracy} outside [0, 1]")


def trial_seed(seed: int, index: int) -> int:
    """Stable per-trial seed; independent of execution schedule."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1, np.uint64)[0])


def _stratified_folds(data: Dataset, k: int, seed: int) -> list:
    """k (train, validation) pairs; each class spread evenly across folds."""
    if k < 2:
        raise DataError("k_folds must be >= 2")
    labels = data.labels()
    assignment = np.empty(len(data), dtype=np.int64)
    for cls in sorted(set(labels.tolist())):
        members = np.flatnonzero(labels == cls)
        if len(members) < k:
            raise DataError(f"class {cls} has {len(members)} records, fewer than {k} folds")
        shuffled = members[np.random.default_rng([seed, cls]).permutation(len(members))]
        for slot, idx in enumerate(shuffled):
            assignment[idx] = slot % k
    pairs = []
    for fold in range(k):
        fit = Dataset([data[i] for i in range(len(data)) if assignment[i] != fold])
        val = Dataset([data[i] for i in range(len(data)) if assignment[i] == fold])
        pairs.append((fit, val))
    return pairs


def _holdout_split(data: Dataset, fraction: float, seed: int) -> list:
    from cbdetect.corpus import SplitSpec, split_dataset

    labels = set(data.labels().tolist())
    spec = SplitSpec(test_fraction=fraction, seed=seed, stratified=len(labels) > 1)
    fit, val = split_dataset(data, spec)
    if len(fit) == 0 or len(val) == 0:
        raise DataError("holdout split left one side empty; dataset too small")
    return [(fit, val)]


def grid_search(
    grid: Grid,
    train_fn: Callable,
    eval_fn: Callable,
    data: Dataset,
    holdout: float = 0.2,
    k_folds: Optional[int] = None,
    seed: int = 0,
    jobs: int = 1,
) -> tuple:
    """Evaluate every grid point; return (best, all trials).

    ``train_fn(params, fit_data, seed)`` builds a model and
    ``eval_fn(model, val_data)`` scores it in [0, 1]. The validation split
    is built once and shared by all trials; each trial's seed derives from
    (seed, trial index), so a parallel run returns exactly what a serial
    run would. Best is the maximum accuracy, ties to the earliest trial.
    """
    if k_folds is not None:
        splits = _stratified_folds(data, k_folds, seed)
    else:
        splits = _holdout_split(data, holdout, seed)
    combos = list(grid.combinations())

    def run(index_params) -> TrialResult:
        index, params = index_params
        s = trial_seed(seed, index)
        start = time.perf_counter()
        scores = []
        for fit, val in splits:
            model = train_fn(params, fit, s)
            acc = float(eval_fn(model, val))
            scores.append(acc)
        return TrialResult(
            params=params,
            accuracy=float(np.mean(scores)),
            wall_time=time.perf_counter() - start,
            seed=s,
        )

    tasks = list(enumerate(combos))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            trials = list(pool.map(run, tasks))
    else:
        trials = [run(t) for t in tasks]

    best = trials[0]
    for t in trials[1:]:
        if t.accuracy > best.accuracy:
            best = t
    return best, trials


def write_trials_csv(grid: Grid, trials: list, path) -> None:
    """Trial table: one row per combination plus accuracy, time, and seed."""
    names = [name for name, _ in grid.axes]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["trial"] + names + ["accuracy", "wall_time", "seed"])
        for i, t in enumerate(trials):
            writer.writerow([i] + [t.params[n] for n in names] + [repr(t.accuracy), f"{t.wall_time:.6f}", t.seed])
