"""Binary embedding-matrix file format.

Layout (little-endian, no padding, no trailer):

    bytes 0..3    ASCII magic ``TFV1`` (``TFV`` + one version digit)
    bytes 4..7    uint32 n_frames
    bytes 8..11   uint32 dim
    bytes 12..    n_frames * dim IEEE-754 binary32 values, row-major;
                  row t is the embedding of the frame with t_index == t

Values are stored and returned as float32, so write -> read is a bit-exact
identity.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import BadMagic, TruncatedPayload, UnsupportedVersion

MAGIC_PREFIX = b"TFV"
VERSION = b"1"
_HEADER = struct.Struct("<4sII")


def write_embedding_file(matrix: np.ndarray, path: str | Path) -> None:
    """Write a 2D matrix to ``path``. Input is cast to little-endian float32."""
    rows = np.ascontiguousarray(np.asarray(matrix), dtype="<f4")
    if rows.ndim != 2:
        raise ValueError(f"expected a 2D matrix, got shape {rows.shape}")
    n_frames, dim = rows.shape
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC_PREFIX + VERSION, n_frames, dim))
        fh.write(rows.tobytes(order="C"))
    tmp.replace(path)


def read_embedding_file(path: str | Path) -> np.ndarray:
    """Read a matrix written by :func:`write_embedding_file`.

    Validates magic, version and exact payload length ("no padding, no
    trailer"); a length mismatch in either direction is rejected.
    """
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise TruncatedPayload(f"{path}: file shorter than the 12-byte header")
    magic, n_frames, dim = _HEADER.unpack_from(data)
    if magic[:3] != MAGIC_PREFIX:
        raise BadMagic(f"{path}: bad magic {magic!r}")
    if magic[3:] != VERSION:
        raise UnsupportedVersion(f"{path}: unsupported format version {magic[3:]!r}")
    expected = n_frames * dim * 4
    payload = data[_HEADER.size:]
    if len(payload) != expected:
        raise TruncatedPayload(
            f"{path}: payload is {len(payload)} bytes, expected {expected} "
            f"for {n_frames}x{dim} float32"
        )
    rows = np.frombuffer(payload, dtype="<f4").reshape(n_frames, dim)
    return rows.copy()  # detach from the read-only buffer
