"""Binary model container: magic-tagged, versioned, named sections.

Layout, all little-endian:

    magic   4 bytes  b"CBD1"
    version u16
    kind    u16 length + utf-8 tag
    then repeated sections until EOF:
        name    u16 length + utf-8
        payload u64 length + bytes

Section payloads are either utf-8 text (json, vocab) or an array bundle.
A bundle is a sequence of named arrays:

    count u32
    per array: name (u16 + utf-8), dtype u8 (0=f64, 1=i64),
               ndim u8, shape as u64 each, raw array bytes

Writing is fully deterministic: same model object, same bytes.
"""

from __future__ import annotations

import io
import json
import struct

import numpy as np

from cbdetect.errors import ModelFormatError

MAGIC = b"CBD1"
VERSION = 1

_DTYPES = {0: np.dtype("<f8"), 1: np.dtype("<i8")}
_DTYPE_TAGS = {np.dtype("<f8"): 0, np.dtype("<i8"): 1}


def _pack_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    if len(raw) > 0xFFFF:
        raise ModelFormatError(f"name too long to encode: {len(raw)} bytes")
    return struct.pack("<H", len(raw)) + raw


def _read_exact(fh, n: int) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise ModelFormatError(f"truncated container: wanted {n} bytes, got {len(data)}")
    return data


def _unpack_str(fh) -> str:
    (n,) = struct.unpack("<H", _read_exact(fh, 2))
    return _read_exact(fh, n).decode("utf-8")


def pack_arrays(arrays: dict) -> bytes:
    """Serialize named float64/int64 arrays; insertion order is preserved."""
    out = io.BytesIO()
    out.write(struct.pack("<I", len(arrays)))
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr)
        if arr.dtype not in _DTYPE_TAGS:
            if np.issubdtype(arr.dtype, np.floating):
                arr = arr.astype("<f8")
            elif np.issubdtype(arr.dtype, np.integer) or arr.dtype == np.bool_:
                arr = arr.astype("<i8")
            else:
                raise ModelFormatError(f"array {name!r} has unsupported dtype {arr.dtype}")
        out.write(_pack_str(name))
        out.write(struct.pack("<BB", _DTYPE_TAGS[arr.dtype], arr.ndim))
        for dim in arr.shape:
            out.write(struct.pack("<Q", dim))
        out.write(arr.tobytes())
    return out.getvalue()


def unpack_arrays(payload: bytes) -> dict:
    fh = io.BytesIO(payload)
    (count,) = struct.unpack("<I", _read_exact(fh, 4))
    arrays = {}
    for _ in range(count):
        name = _unpack_str(fh)
        tag, ndim = struct.unpack("<BB", _read_exact(fh, 2))
        if tag not in _DTYPES:
            raise ModelFormatError(f"unknown dtype tag {tag} for array {name!r}")
        shape = tuple(struct.unpack("<Q", _read_exact(fh, 8))[0] for _ in range(ndim))
        dtype = _DTYPES[tag]
        nbytes = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
        raw = _read_exact(fh, nbytes)
        arrays[name] = np.frombuffer(raw, dtype=dtype).reshape(shape).copy()
    rest = fh.read(1)
    if rest:
        raise ModelFormatError("trailing bytes after last array in bundle")
    return arrays


def write_container(path, kind: str, sections: list) -> None:
    """Write (name, payload_bytes) sections under the given kind tag."""
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<H", VERSION))
        fh.write(_pack_str(kind))
        for name, payload in sections:
            fh.write(_pack_str(name))
            fh.write(struct.pack("<Q", len(payload)))
            fh.write(payload)


def read_container(path) -> tuple:
    """Return (kind, ordered dict of section name -> payload bytes)."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise ModelFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
        (version,) = struct.unpack("<H", _read_exact(fh, 2))
        if version != VERSION:
            raise ModelFormatError(f"unsupported container version {version}")
        kind = _unpack_str(fh)
        sections = {}
        while True:
            head = fh.read(2)
            if head == b"":
                break
            if len(head) != 2:
                raise ModelFormatError("truncated section header")
            (n,) = struct.unpack("<H", head)
            name = _read_exact(fh, n).decode("utf-8")
            (size,) = struct.unpack("<Q", _read_exact(fh, 8))
            if name in sections:
                raise ModelFormatError(f"duplicate section {name!r}")
            sections[name] = _read_exact(fh, size)
    return kind, sections


def json_payload(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


def parse_json_payload(payload: bytes, section: str):
    try:
        return json.loads(payload.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"section {section!r} is not valid json: {exc}") from exc
