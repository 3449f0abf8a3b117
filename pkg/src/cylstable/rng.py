"""Seeded random streams and block-parallel Monte Carlo.

Scenarios are split into fixed-size blocks and every block draws from its
own generator derived from ``(master_seed, stream_id, *path, block)``.
Block boundaries never depend on the number of workers, so results are
bit-identical for any ``threads`` setting.
"""
from __future__ import annotations

import hashlib
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

BLOCK_SIZE = 8192
_MASK64 = (1 << 64) - 1

_threads = int(os.environ.get("CYLSTABLE_THREADS", "1") or 1)


def set_threads(n):
    global _threads
    _threads = max(1, int(n))


def get_threads():
    return _threads


def _key(k):
    """Map a child label (int or str) to a 64-bit spawn key."""
    if isinstance(k, str):
        return int.from_bytes(hashlib.blake2b(k.encode(), digest_size=8).digest(), "little")
    return int(k) & _MASK64


@dataclass(frozen=True)
class RngStream:
    master_seed: int
    stream_id: int = 0
    path: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "master_seed", int(self.master_seed) & _MASK64)
        object.__setattr__(self, "stream_id", int(self.stream_id) & _MASK64)
        object.__setattr__(self, "path", tuple(_key(p) for p in self.path))

    def child(self, *keys):
        """Independent sub-stream labelled by ``keys``."""
        return RngStream(self.master_seed, self.stream_id, self.path + tuple(keys))

    def generator(self, block=None):
        key = (self.stream_id,) + self.path
        if block is not None:
            key = key + (int(block),)
        ss = np.random.SeedSequence(self.master_seed, spawn_key=key)
        return np.random.Generator(np.random.PCG64(ss))

    def same_as(self, other):
        return (self.master_seed, self.stream_id, self.path) == (
            other.master_seed, other.stream_id, other.path)


def as_stream(rng):
    if isinstance(rng, RngStream):
        return rng
    if isinstance(rng, (int, np.integer)):
        return RngStream(int(rng))
    raise TypeError(f"expected RngStream or int seed, got {type(rng).__name__}")


def block_slices(n, block_size=BLOCK_SIZE):
    return [slice(s, min(s + block_size, n)) for s in range(0, n, block_size)]


def map_blocks(fn, n, stream, block_size=BLOCK_SIZE, threads=None):
    """Call ``fn(gen, count)`` once per block and return results in block order."""
    stream = as_stream(stream)
    slices = block_slices(n, block_size)
    jobs = [(stream.generator(b), s.stop - s.start) for b, s in enumerate(slices)]
    threads = get_threads() if threads is None else threads
    if threads <= 1 or len(jobs) <= 1:
        return [fn(g, k) for g, k in jobs]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(lambda job: fn(*job), jobs))


def draw(fn, n, stream, block_size=BLOCK_SIZE, threads=None):
    """Concatenate per-block arrays ``fn(gen, count)`` along axis 0."""
    parts = map_blocks(fn, n, stream, block_size, threads)
    return np.concatenate(parts, axis=0) if parts else np.empty((0,))
