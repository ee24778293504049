"""Exception types shared across the toolkit.

The CLI maps these onto exit codes: usage problems exit 1, ``DataError``
exits 2, ``NumericError`` exits 3.
"""


class DataError(ValueError):
    """Malformed, inconsistent, or unusable input data."""


class ModelFormatError(DataError):
    """A model container file that cannot be parsed or validated."""


class NumericError(ArithmeticError):
    """A numeric computation produced non-finite or otherwise unusable values."""


class TransportError(RuntimeError):
    """A metadata transport failed while resolving a video id."""

    def __init__(self, video_id: str, reason: str):
        super().__init__(f"transport failed for video id {video_id!r}: {reason}")
        self.video_id = video_id
        self.reason = reason
