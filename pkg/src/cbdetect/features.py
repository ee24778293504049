"""Metadata feature engineering, scaling, and fusion with text embeddings."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from cbdetect.corpus import VideoRecord
from cbdetect.errors import DataError

META_LENGTH = 7
# indices into a MetaVector, in its fixed order
LIKES, DISLIKES, VIEWS, COMMENTS, SUBSCRIBERS, RATIO, COMMENTS_DISABLED = range(7)

# the ratio and the disabled flag are already bounded; they bypass z-scoring
_PASSTHROUGH = (RATIO, COMMENTS_DISABLED)


def metadata_vector(r: VideoRecord) -> np.ndarray:
    """Raw 7-entry metadata vector for one record.

    Order: log1p of like, dislike, view, comment, and subscriber counts,
    then like/(like+dislike) (0.5 when both are zero), then a 0/1 flag for
    disabled comments. Counts span nine orders of magnitude across real
    channels, hence the log before any scaling. A disabled comment section
    contributes count 0 and flag 1.
    """
    comments = 0 if r.comment_count is None else r.comment_count
    disabled = 1.0 if r.comment_count is None else 0.0
    denom = r.like_count + r.dislike_count
    ratio = 0.5 if denom == 0 else r.like_count / denom
    return np.array(
        [
            np.log1p(r.like_count),
            np.log1p(r.dislike_count),
            np.log1p(r.view_count),
            np.log1p(comments),
            np.log1p(r.subscriber_count),
            ratio,
            disabled,
        ],
        dtype=np.float64,
    )


def metadata_matrix(records) -> np.ndarray:
    """Stacked metadata vectors, one row per record."""
    return np.stack([metadata_vector(r) for r in records])


@dataclass(frozen=True)
class Scaler:
    """Per-feature standardization parameters learned from training data."""

    mean: np.ndarray
    std: np.ndarray

    def transform(self, x: np.ndarray) -> np.ndarray:
        """Apply (x - mean) / std; pure, never mutates the scaler."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.mean.shape[0]:
            raise DataError(
                f"cannot scale a length-{x.shape[-1]} vector with a "
                f"length-{self.mean.shape[0]} scaler"
            )
        return (x - self.mean) / self.std


def fit_scaler(train) -> Scaler:
    """Fit per-feature mean and population std on training vectors only.

    Constant features get std 1 so their scaled value is exactly 0. The
    ratio and disabled-flag entries pass through unscaled.
    """
    X = np.asarray(train, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.size == 0:
        raise DataError("cannot fit a scaler on an empty training set")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std[std == 0.0] = 1.0
    if X.shape[1] == META_LENGTH:
        for i in _PASSTHROUGH:
            mean[i] = 0.0
            std[i] = 1.0
    return Scaler(mean=mean, std=std)


def fuse(title_vec: np.ndarray, desc_vec: np.ndarray, meta: np.ndarray) -> np.ndarray:
    """Concatenate title embedding, description embedding, and scaled metadata.

    The two text embeddings must share a dimension and the metadata vector
    must have its full fixed length; output length is 2*embed_dim + 7.
    """
    title_vec = np.asarray(title_vec, dtype=np.float64)
    desc_vec = np.asarray(desc_vec, dtype=np.float64)
    meta = np.asarray(meta, dtype=np.float64)
    if title_vec.shape != desc_vec.shape or title_vec.ndim != 1:
        raise DataError(
            f"title and description embeddings must be same-length vectors, "
            f"got shapes {title_vec.shape} and {desc_vec.shape}"
        )
    if meta.shape != (META_LENGTH,):
        raise DataError(f"metadata vector must have length {META_LENGTH}, got shape {meta.shape}")
    return np.concatenate([title_vec, desc_vec, meta])


SELECTABLE_FIELDS = (
    "title",
    "description",
    "likes",
    "dislikes",
    "views",
    "comments",
    "subscribers",
    "ratio",
)

# the comment selection carries both the count and the disabled flag,
# since the flag only exists because of the comment field
_META_INDEX = {
    "likes": (LIKES,),
    "dislikes": (DISLIKES,),
    "views": (VIEWS,),
    "comments": (COMMENTS, COMMENTS_DISABLED),
    "subscribers": (SUBSCRIBERS,),
    "ratio": (RATIO,),
}


@dataclass(frozen=True)
class FeatureSelection:
    """Which inputs feed the classifier: text embeddings and metadata columns."""

    use_title: bool
    use_description: bool
    meta_indices: tuple[int, ...]

    @classmethod
    def parse(cls, text: str) -> "FeatureSelection":
        """Parse a comma list over the selectable field names."""
        names = [part.strip().lower() for part in text.split(",") if part.strip()]
        if not names:
            raise DataError("feature selection must name at least one field")
        unknown = [n for n in names if n not in SELECTABLE_FIELDS]
        if unknown:
            raise DataError(
                f"unknown feature {unknown[0]!r}; choose from {', '.join(SELECTABLE_FIELDS)}"
            )
        chosen = set(names)
        idx: set[int] = set()
        for name in chosen:
            idx.update(_META_INDEX.get(name, ()))
        return cls(
            use_title="title" in chosen,
            use_description="description" in chosen,
            meta_indices=tuple(sorted(idx)),
        )

    @classmethod
    def everything(cls) -> "FeatureSelection":
        return cls.parse(",".join(SELECTABLE_FIELDS))

    def describe(self) -> str:
        """Canonical comma list reproducing this selection through parse."""
        names = []
        if self.use_title:
            names.append("title")
        if self.use_description:
            names.append("description")
        for name in SELECTABLE_FIELDS[2:]:
            if set(_META_INDEX[name]) <= set(self.meta_indices):
                names.append(name)
        return ",".join(names)

    def assemble(self, title_vec, desc_vec, meta: np.ndarray) -> np.ndarray:
        """Build one classifier input row from the selected parts.

        ``meta`` is the full scaled 7-entry vector; only selected columns
        survive. Text embeddings may be None when not selected.
        """
        parts = []
        if self.use_title:
            parts.append(np.asarray(title_vec, dtype=np.float64))
        if self.use_description:
            parts.append(np.asarray(desc_vec, dtype=np.float64))
        if self.meta_indices:
            meta = np.asarray(meta, dtype=np.float64)
            parts.append(meta[list(self.meta_indices)])
        if not parts:
            raise DataError("feature selection produced an empty vector")
        return np.concatenate(parts)
