"""Splittable counter-based random streams.

Every sampler in the package takes an explicit ``numpy.random.Generator``.
Streams are derived from a 64-bit seed plus an arbitrary path of indices or
labels, so parallel runs are reproducible from ``(seed, stream id)`` and
independent of execution order.
"""
from __future__ import annotations

import hashlib

import numpy as np


def _digest_key(seed: int, path: tuple) -> np.ndarray:
    h = hashlib.blake2b(digest_size=16)
    h.update(int(seed).to_bytes(8, "little", signed=False))
    for part in path:
        if isinstance(part, (int, np.integer)):
            h.update(b"i" + int(part).to_bytes(8, "little", signed=True))
        else:
            h.update(b"s" + str(part).encode("utf-8"))
    raw = h.digest()
    return np.frombuffer(raw, dtype=np.uint64)


def stream(seed: int, *path: int | str) -> np.random.Generator:
    """Counter-based (Philox) generator for the stream ``(seed, *path)``."""
    return np.random.Generator(np.random.Philox(key=_digest_key(seed, path)))


def random_seed() -> int:
    """Fresh 63-bit seed from OS entropy, for when the caller gave none."""
    return int.from_bytes(hashlib.blake2b(np.random.SeedSequence().entropy.to_bytes(16, "little"), digest_size=8).digest(), "little") >> 1
