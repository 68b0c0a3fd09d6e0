"""Versioned binary checkpoint container.

Layout (little-endian throughout):

    magic   b"ZRCK"
    version u32
    len     u32, then config tree as UTF-8 JSON (sorted keys)
    count   u32
    per array, in sorted name order:
        name_len u32, name bytes
        ndim u32, dims u32 * ndim
        data float32, row-major

The same float32 row-major layout is used by the feature files, and sorted
ordering makes save -> load -> save byte-identical.
"""

from __future__ import annotations

import json
import os
import struct
from pathlib import Path
from typing import Any, Mapping

import numpy as np

MAGIC = b"ZRCK"
VERSION = 1


class CheckpointError(ValueError):
    pass


def save_checkpoint(path: str | Path, config: Mapping[str, Any],
                    arrays: Mapping[str, np.ndarray]) -> Path:
    """Write a checkpoint atomically (temp file + rename)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    blob = bytearray()
    blob += MAGIC
    blob += struct.pack("<I", VERSION)
    cfg = json.dumps(config, sort_keys=True, ensure_ascii=False).encode("utf-8")
    blob += struct.pack("<I", len(cfg))
    blob += cfg
    names = sorted(arrays)
    blob += struct.pack("<I", len(names))
    for name in names:
        # asarray keeps 0-d shapes; ascontiguousarray would promote to 1-d.
        arr = np.asarray(arrays[name], dtype="<f4", order="C")
        nb = name.encode("utf-8")
        blob += struct.pack("<I", len(nb))
        blob += nb
        blob += struct.pack("<I", arr.ndim)
        blob += struct.pack(f"<{arr.ndim}I", *arr.shape)
        blob += arr.tobytes(order="C")
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as f:
        f.write(bytes(blob))
    os.replace(tmp, path)
    return path


def load_checkpoint(path: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise CheckpointError(f"{path}: bad magic {data[:4]!r}, expected {MAGIC!r}")
    try:
        off = 4
        (version,) = struct.unpack_from("<I", data, off)
        off += 4
        if version != VERSION:
            raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
        (cfg_len,) = struct.unpack_from("<I", data, off)
        off += 4
        config = json.loads(data[off:off + cfg_len].decode("utf-8"))
        off += cfg_len
        (count,) = struct.unpack_from("<I", data, off)
        off += 4
        arrays: dict[str, np.ndarray] = {}
        for _ in range(count):
            (name_len,) = struct.unpack_from("<I", data, off)
            off += 4
            name = data[off:off + name_len].decode("utf-8")
            off += name_len
            (ndim,) = struct.unpack_from("<I", data, off)
            off += 4
            shape = struct.unpack_from(f"<{ndim}I", data, off)
            off += 4 * ndim
            size = int(np.prod(shape)) if ndim else 1
            arr = np.frombuffer(data, dtype="<f4", count=size,
                                offset=off).reshape(shape)
            off += 4 * size
            arrays[name] = arr.copy()
    except (struct.error, ValueError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        if isinstance(exc, CheckpointError):
            raise
        raise CheckpointError(f"{path}: truncated or corrupt checkpoint: {exc}") from exc
    return config, arrays
