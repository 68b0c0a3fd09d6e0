"""Hierarchical seed derivation.

All randomness in an experiment flows from a single master seed.  Each
consumer derives its own child seed from the master plus a string path,
so adding a new consumer never shifts the streams of existing ones.
"""

from __future__ import annotations

import hashlib


def derive_seed(master: int, *path: str) -> int:
    """Derive a stable 31-bit seed from a master seed and a name path."""
    key = f"{master}:" + "/".join(path)
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little") & 0x7FFFFFFF
