"""Labeled-video data model: ingestion, statistics, and train/test splitting."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from cbdetect.errors import DataError

FIELD_NAMES = (
    "video_id",
    "title",
    "description",
    "view_count",
    "like_count",
    "dislike_count",
    "comment_count",
    "subscriber_count",
    "label",
)

_COUNT_FIELDS = ("view_count", "like_count", "dislike_count", "subscriber_count")


@dataclass(frozen=True)
class VideoRecord:
    """One labeled video.

    ``comment_count`` is ``None`` when the uploader disabled comments; that
    state is a signal of its own and is kept distinct from a count of zero.
    """

    video_id: str
    title: str
    description: str
    view_count: int
    like_count: int
    dislike_count: int
    comment_count: Optional[int]
    subscriber_count: int
    label: int

    def __post_init__(self):
        if not self.video_id:
            raise DataError("field video_id: must be non-empty")
        if not self.title:
            raise DataError("field title: must be non-empty")
        for name in _COUNT_FIELDS:
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 0:
                raise DataError(f"field {name}: expected a non-negative integer, got {value!r}")
        if self.comment_count is not None and (
            not isinstance(self.comment_count, int)
            or isinstance(self.comment_count, bool)
            or self.comment_count < 0
        ):
            raise DataError(
                f"field comment_count: expected a non-negative integer or absent, got {self.comment_count!r}"
            )
        if self.label not in (0, 1) or isinstance(self.label, bool):
            raise DataError(f"field label: expected 0 or 1, got {self.label!r}")


class Dataset:
    """Ordered, immutable collection of video records with unique ids."""

    def __init__(self, records: list[VideoRecord], source_path: str = ""):
        seen: set[str] = set()
        for r in records:
            if r.video_id in seen:
                raise DataError(f"duplicate video_id {r.video_id!r}")
            seen.add(r.video_id)
        self._records = tuple(records)
        self.source_path = source_path

    @property
    def records(self) -> tuple[VideoRecord, ...]:
        return self._records

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self) -> Iterator[VideoRecord]:
        return iter(self._records)

    def __getitem__(self, i: int) -> VideoRecord:
        return self._records[i]

    def labels(self) -> np.ndarray:
        return np.array([r.label for r in self._records], dtype=np.int64)


def _coerce_int(raw, field: str) -> int:
    if isinstance(raw, bool):
        raise DataError(f"field {field}: expected an integer, got a boolean")
    if isinstance(raw, int):
        return raw
    if isinstance(raw, str):
        try:
            return int(raw.strip())
        except ValueError:
            raise DataError(f"field {field}: cannot parse {raw!r} as an integer") from None
    raise DataError(f"field {field}: expected an integer, got {raw!r}")


def _record_from_mapping(obj: dict) -> VideoRecord:
    missing = [k for k in FIELD_NAMES if k not in obj and k != "comment_count"]
    if missing:
        raise DataError(f"field {missing[0]}: missing")
    unknown = set(obj) - set(FIELD_NAMES)
    if unknown:
        raise DataError(f"field {sorted(unknown)[0]}: not part of the schema")

    comment_raw = obj.get("comment_count")
    if comment_raw is None or comment_raw == "":
        comment_count = None
    else:
        comment_count = _coerce_int(comment_raw, "comment_count")

    return VideoRecord(
        video_id=str(obj["video_id"]),
        title=str(obj["title"]),
        description=str(obj["description"]),
        view_count=_coerce_int(obj["view_count"], "view_count"),
        like_count=_coerce_int(obj["like_count"], "like_count"),
        dislike_count=_coerce_int(obj["dislike_count"], "dislike_count"),
        comment_count=comment_count,
        subscriber_count=_coerce_int(obj["subscriber_count"], "subscriber_count"),
        label=_coerce_int(obj["label"], "label"),
    )


def load_dataset(path, format: str = "jsonl") -> Dataset:
    """Load a dataset from a jsonl or csv file.

    Both encodings share one schema (see ``FIELD_NAMES``); an absent, null,
    or empty ``comment_count`` marks comments as disabled. Malformed rows
    raise :class:`DataError` naming the 1-based row number and the field.
    """
    if format not in ("csv", "jsonl"):
        raise DataError(f"unknown dataset format {format!r}")
    records: list[VideoRecord] = []
    if format == "jsonl":
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise DataError(f"{path}: row {lineno}: invalid JSON: {exc}") from None
                if not isinstance(obj, dict):
                    raise DataError(f"{path}: row {lineno}: expected an object")
                try:
                    records.append(_record_from_mapping(obj))
                except DataError as exc:
                    raise DataError(f"{path}: row {lineno}: {exc}") from None
    else:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                raise DataError(f"{path}: empty csv file")
            if tuple(reader.fieldnames) != FIELD_NAMES:
                raise DataError(
                    f"{path}: csv header {reader.fieldnames} does not match the schema"
                )
            for lineno, row in enumerate(reader, start=1):
                if None in row:
                    raise DataError(f"{path}: row {lineno}: too many columns")
                try:
                    records.append(_record_from_mapping(row))
                except DataError as exc:
                    raise DataError(f"{path}: row {lineno}: {exc}") from None
    if not records:
        raise DataError(f"{path}: dataset is empty")
    try:
        return Dataset(records, source_path=str(path))
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from None


def save_dataset(d: Dataset, path) -> None:
    """Write a dataset in the jsonl encoding (null comment_count = absent)."""
    with open(path, "w", encoding="utf-8") as fh:
        for r in d:
            obj = {name: getattr(r, name) for name in FIELD_NAMES}
            fh.write(json.dumps(obj) + "\n")


STAT_ITEMS = (
    "title_length",
    "description_length",
    "view_count",
    "comment_count",
    "like_count",
    "subscriber_count",
    "dislike_count",
)


@dataclass(frozen=True)
class StatsTable:
    """min/mean/max per numeric data item, in fixed row order."""

    rows: dict[str, tuple[float, float, float]]

    def __getitem__(self, item: str) -> tuple[float, float, float]:
        return self.rows[item]


def dataset_stats(d: Dataset) -> StatsTable:
    """Summary statistics over the seven numeric data items.

    Absent comment counts enter the statistics as zero. Means are exact
    arithmetic means (integer sums divided once).
    """
    if len(d) == 0:
        raise DataError("cannot compute statistics of an empty dataset")

    def values(item: str) -> list[int]:
        if item == "title_length":
            return [len(r.title) for r in d]
        if item == "description_length":
            return [len(r.description) for r in d]
        if item == "comment_count":
            return [r.comment_count if r.comment_count is not None else 0 for r in d]
        return [getattr(r, item) for r in d]

    rows = {}
    for item in STAT_ITEMS:
        vs = values(item)
        rows[item] = (float(min(vs)), sum(vs) / len(vs), float(max(vs)))
    return StatsTable(rows=rows)


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float
    seed: int
    stratified: bool = False

    def __post_init__(self):
        if not (0.0 < self.test_fraction < 1.0):
            raise DataError(f"test_fraction must lie in (0,1), got {self.test_fraction}")


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split_dataset(d: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Partition a dataset into train and test subsets.

    The test size is round-half-up of ``test_fraction * len(d)``. Stratified
    splits allocate per-class test counts by largest remainder, which keeps
    every class within one record of its exact share. Record order within
    each side follows the original dataset. Deterministic for a fixed seed.
    """
    n = len(d)
    if n == 0:
        raise DataError("cannot split an empty dataset")
    n_test = _round_half_up(spec.test_fraction * n)
    rng = np.random.default_rng(spec.seed)

    if spec.stratified:
        labels = d.labels()
        classes = sorted(set(labels.tolist()))
        if len(classes) < 2:
            raise DataError("stratified split requires both classes present")
        quotas = {c: spec.test_fraction * int((labels == c).sum()) for c in classes}
        alloc = {c: math.floor(quotas[c]) for c in classes}
        leftover = n_test - sum(alloc.values())
        # hand remaining seats to the largest fractional remainders; ties to
        # the smaller class label for determinism
        order = sorted(classes, key=lambda c: (-(quotas[c] - alloc[c]), c))
        for c in order[:leftover]:
            alloc[c] += 1
        test_idx: list[int] = []
        for c in classes:
            members = np.flatnonzero(labels == c)
            picked = rng.permutation(len(members))[: alloc[c]]
            test_idx.extend(int(members[i]) for i in picked)
    else:
        perm = rng.permutation(n)
        test_idx = [int(i) for i in perm[:n_test]]

    test_set = set(test_idx)
    train_records = [d[i] for i in range(n) if i not in test_set]
    test_records = [d[i] for i in range(n) if i in test_set]
    return (
        Dataset(train_records, source_path=d.source_path),
        Dataset(test_records, source_path=d.source_path),
    )
