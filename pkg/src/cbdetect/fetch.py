"""Metadata fetch client for video ids, built against a pluggable transport.

Only an offline fixture transport ships here. A user-supplied live transport
can read its API key from the :data:`API_KEY_ENV` environment variable; this
package never contacts the network itself.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Protocol

from cbdetect.errors import DataError, TransportError

API_KEY_ENV = "CBD_API_KEY"


@dataclass(frozen=True)
class VideoMetadata:
    """A fetched video: the record schema minus the label."""

    video_id: str
    title: str
    description: str
    view_count: int
    like_count: int
    dislike_count: int
    comment_count: Optional[int]
    subscriber_count: int


class MetadataTransport(Protocol):
    def lookup(self, video_id: str) -> Optional[VideoMetadata]:
        """Resolve one id; ``None`` if unresolvable, :class:`TransportError` on failure."""
        ...


_INT_FIELDS = ("view_count", "like_count", "dislike_count", "subscriber_count")


class FixtureTransport:
    """Resolves ids from a directory of ``<video_id>.json`` files."""

    def __init__(self, directory):
        self.directory = Path(directory)
        if not self.directory.is_dir():
            raise DataError(f"fixture directory {directory} does not exist")

    def lookup(self, video_id: str) -> Optional[VideoMetadata]:
        path = self.directory / f"{video_id}.json"
        if not path.is_file():
            return None
        try:
            obj = json.loads(path.read_text(encoding="utf-8"))
            comment = obj.get("comment_count")
            return VideoMetadata(
                video_id=video_id,
                title=str(obj["title"]),
                description=str(obj.get("description", "")),
                view_count=int(obj["view_count"]),
                like_count=int(obj["like_count"]),
                dislike_count=int(obj["dislike_count"]),
                comment_count=None if comment is None else int(comment),
                subscriber_count=int(obj["subscriber_count"]),
            )
        except (KeyError, ValueError, TypeError, json.JSONDecodeError) as exc:
            raise TransportError(video_id, f"malformed fixture: {exc}") from None


@dataclass(frozen=True)
class FetchResult:
    records: tuple[VideoMetadata, ...]
    unresolved: tuple[str, ...]


def fetch_metadata(ids: list[str], transport: MetadataTransport) -> FetchResult:
    """Fetch metadata for each id, preserving request order.

    Unresolvable ids are reported in ``unresolved`` rather than dropped;
    transport failures propagate as :class:`TransportError`.
    """
    records: list[VideoMetadata] = []
    unresolved: list[str] = []
    for vid in ids:
        found = transport.lookup(vid)
        if found is None:
            unresolved.append(vid)
        else:
            records.append(found)
    return FetchResult(records=tuple(records), unresolved=tuple(unresolved))
