"""Clickbait video detection toolkit.

Text embeddings (skip-gram and a small self-attention encoder), metadata
feature fusion, three classifier families, and the evaluation protocol,
all implemented on top of verifiable numeric kernels.
"""

__version__ = "0.1.0"

from cbdetect.errors import DataError, ModelFormatError, NumericError

__all__ = ["DataError", "ModelFormatError", "NumericError", "__version__"]
