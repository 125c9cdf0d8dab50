"""Binary tensor checkpoints.

Layout (all integers little-endian)::

    b"CT1W"
    u32  format version
    u32  tensor count
    per tensor:
        u32  name length, then UTF-8 name bytes
        u32  rank
        u64  dims[rank]
        f64  values (row-major)
"""
from __future__ import annotations

import io
import struct
from typing import Mapping

import numpy as np

MAGIC = b"CT1W"
VERSION = 1


class CheckpointError(ValueError):
    pass


def dumps(tensors: Mapping[str, np.ndarray]) -> bytes:
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<II", VERSION, len(tensors)))
    for name, arr in tensors.items():
        arr = np.ascontiguousarray(arr, dtype="<f8")
        raw = name.encode("utf-8")
        buf.write(struct.pack("<I", len(raw)))
        buf.write(raw)
        buf.write(struct.pack("<I", arr.ndim))
        buf.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        buf.write(arr.tobytes(order="C"))
    return buf.getvalue()


def loads(blob: bytes) -> dict[str, np.ndarray]:
    view = memoryview(blob)
    if bytes(view[:4]) != MAGIC:
        raise CheckpointError("bad magic bytes")
    pos = 4

    def take(fmt: str):
        nonlocal pos
        size = struct.calcsize(fmt)
        if pos + size > len(view):
            raise CheckpointError("truncated checkpoint")
        vals = struct.unpack_from(fmt, view, pos)
        pos += size
        return vals

    version, count = take("<II")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    out: dict[str, np.ndarray] = {}
    for _ in range(count):
        (n,) = take("<I")
        if pos + n > len(view):
            raise CheckpointError("truncated checkpoint")
        name = bytes(view[pos : pos + n]).decode("utf-8")
        pos += n
        (rank,) = take("<I")
        dims = take(f"<{rank}Q") if rank else ()
        count_vals = int(np.prod(dims)) if dims else 1
        nbytes = 8 * count_vals
        if pos + nbytes > len(view):
            raise CheckpointError("truncated checkpoint")
        arr = np.frombuffer(view[pos : pos + nbytes], dtype="<f8").reshape(dims).astype(np.float64)
        pos += nbytes
        out[name] = arr
    if pos != len(view):
        raise CheckpointError("trailing bytes after last tensor")
    return out
