"""Counter-based random streams.

Each Monte Carlo sample owns a Philox stream addressed by
``(seed, stream label, sample index)``.  A sample's draws therefore do not
depend on batch size, chunking or worker count.
"""
from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def stream_id(label: str) -> int:
    """Stable 64-bit id for a stream label (``hash()`` is salted per process)."""
    return int.from_bytes(hashlib.blake2b(label.encode(), digest_size=8).digest(), "little")


def generator(seed: int, stream: str | int, index: int = 0) -> np.random.Generator:
    sid = stream_id(stream) if isinstance(stream, str) else int(stream) & _MASK64
    key = np.array([int(seed) & _MASK64, sid], dtype=np.uint64)
    counter = np.array([0, int(index) & _MASK64, 0, 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def normals(seed: int, stream: str | int, start: int, count: int, size: int) -> np.ndarray:
    """Standard normals of shape ``(count, size)``; row ``k`` belongs to sample ``start + k``."""
    out = np.empty((count, size))
    for k in range(count):
        out[k] = generator(seed, stream, start + k).standard_normal(size)
    return out
