"""Checkpoint container: JSON header (model spec + metadata) followed by one
native tensor record per parameter.

    magic    4 bytes  b"CKPT"
    version  u16      currently 1
    json_len u32
    json     utf-8: {"spec": ..., "names": [...], "meta": {...}}
    tensors  one TNSR record per name, in header order

Parameters are float32 on disk; a save/load round-trip is bit-exact.
"""

from __future__ import annotations

import io
import json
import struct

import numpy as np

from ..tensorfile import pack_tensor, unpack_tensor
from .network import ModelSpec

MAGIC = b"CKPT"
VERSION = 1


class CheckpointError(Exception):
    pass


def pack_checkpoint(params: dict[str, np.ndarray], spec: ModelSpec, meta: dict | None = None) -> bytes:
    names = sorted(params)
    header = json.dumps(
        {"spec": spec.to_dict(), "names": names, "meta": meta or {}},
        sort_keys=True,
    ).encode()
    out = bytearray()
    out += MAGIC
    out += struct.pack("<HI", VERSION, len(header))
    out += header
    for name in names:
        out += pack_tensor(params[name])
    return bytes(out)


def unpack_checkpoint(data: bytes):
    if data[:4] != MAGIC:
        raise CheckpointError(f"bad checkpoint magic {data[:4]!r}")
    version, json_len = struct.unpack_from("<HI", data, 4)
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    header = json.loads(data[10 : 10 + json_len].decode())
    spec = ModelSpec.from_dict(header["spec"])
    buf = io.BytesIO(data[10 + json_len :])
    params = {name: unpack_tensor(buf) for name in header["names"]}
    if buf.read(1):
        raise CheckpointError("trailing bytes after checkpoint tensors")
    return params, spec, header.get("meta", {})


def save_checkpoint(params: dict[str, np.ndarray], spec: ModelSpec, path, meta: dict | None = None) -> None:
    with open(path, "wb") as fh:
        fh.write(pack_checkpoint(params, spec, meta))


def load_checkpoint(path):
    """Returns (params, spec, meta)."""
    with open(path, "rb") as fh:
        return unpack_checkpoint(fh.read())
