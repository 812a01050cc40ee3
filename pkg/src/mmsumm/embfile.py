"""Binary embedding matrices (``.mheb``).

Layout, little-endian regardless of host::

    offset  size  field
    0       4     magic b"MHEB"
    4       4     format version, u32 (currently 1)
    8       8     row count, u64
    16      8     dimension, u64
    24      4*N*D payload, row-major IEEE-754 float32

The payload must be exactly ``rows * dim * 4`` bytes.
"""

from __future__ import annotations

import os
import struct

import numpy as np

from . import errors

MAGIC = b"MHEB"
VERSION = 1
_HEADER = struct.Struct("<4sIQQ")
HEADER_SIZE = _HEADER.size


def encode(matrix) -> bytes:
    x = np.asarray(matrix)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2:
        raise errors.ShapeMismatch(f"embedding matrix must be 2-D, got shape {x.shape}")
    payload = np.ascontiguousarray(x, dtype="<f4")
    return _HEADER.pack(MAGIC, VERSION, x.shape[0], x.shape[1]) + payload.tobytes()


def decode(data: bytes, source: str = "<bytes>") -> np.ndarray:
    if len(data) < HEADER_SIZE:
        raise errors.TruncatedPayload(f"{source}: {len(data)} bytes is shorter than the header",
                                      path=source)
    magic, version, rows, dim = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise errors.BadMagic(f"{source}: magic {magic!r}, expected {MAGIC!r}", path=source)
    if version != VERSION:
        raise errors.VersionUnsupported(f"{source}: format version {version} (supported: {VERSION})",
                                        path=source)
    need = rows * dim * 4
    got = len(data) - HEADER_SIZE
    if got < need:
        raise errors.TruncatedPayload(f"{source}: payload has {got} bytes, header promises {need}",
                                      path=source)
    if got > need:
        raise errors.TrailingData(f"{source}: {got - need} bytes after the payload", path=source)
    return np.frombuffer(data, dtype="<f4", offset=HEADER_SIZE).reshape(rows, dim).astype(np.float32)


def write_embeddings(matrix, path) -> None:
    data = encode(matrix)
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def read_embeddings(path) -> np.ndarray:
    """Read a ``.mheb`` file as a float32 ``(rows, dim)`` array."""
    with open(path, "rb") as fh:
        data = fh.read()
    return decode(data, os.fspath(path))
