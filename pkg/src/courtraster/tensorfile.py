"""Native tensor container used for images, feature matrices, and checkpoints.

Single-tensor file layout (little-endian throughout):

    magic   4 bytes  b"TNSR"
    version u16      currently 1
    ndim    u8
    dims    ndim * u32
    data    prod(dims) * f32, row-major

Payloads are float32; callers cast on the way in and out. Round-trips are
bit-exact for float32 data.
"""

from __future__ import annotations

import io
import struct

import numpy as np

MAGIC = b"TNSR"
VERSION = 1


class TensorFileError(Exception):
    """Raised for malformed tensor files."""


def pack_tensor(arr: np.ndarray) -> bytes:
    """Serialize an array as one TNSR record."""
    data = np.ascontiguousarray(arr, dtype=np.float32)
    if data.ndim == 0:
        data = data.reshape(1)
    header = MAGIC + struct.pack("<HB", VERSION, data.ndim)
    header += struct.pack(f"<{data.ndim}I", *data.shape)
    return header + data.astype("<f4").tobytes()


def unpack_tensor(buf: io.BufferedIOBase) -> np.ndarray:
    """Read one TNSR record from a binary stream."""
    magic = buf.read(4)
    if magic != MAGIC:
        raise TensorFileError(f"bad magic {magic!r}, expected {MAGIC!r}")
    version, ndim = struct.unpack("<HB", _read_exact(buf, 3))
    if version != VERSION:
        raise TensorFileError(f"unsupported tensor file version {version}")
    dims = struct.unpack(f"<{ndim}I", _read_exact(buf, 4 * ndim))
    count = int(np.prod(dims)) if ndim else 1
    raw = _read_exact(buf, 4 * count)
    return np.frombuffer(raw, dtype="<f4").reshape(dims).copy()


def _read_exact(buf: io.BufferedIOBase, n: int) -> bytes:
    raw = buf.read(n)
    if len(raw) != n:
        raise TensorFileError(f"truncated tensor file: wanted {n} bytes, got {len(raw)}")
    return raw


def save_tensor(path, arr: np.ndarray) -> None:
    with open(path, "wb") as fh:
        fh.write(pack_tensor(arr))


def load_tensor(path) -> np.ndarray:
    with open(path, "rb") as fh:
        arr = unpack_tensor(fh)
        if fh.read(1):
            raise TensorFileError("trailing bytes after tensor payload")
    return arr
