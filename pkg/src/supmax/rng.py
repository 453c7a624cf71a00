"""Counter-based random streams.

Every replicate ``i`` owns a SplitMix64 sequence keyed by a hash of
``(master_seed, i)``. Draw ``j`` of replicate ``i`` is a pure function of
``(master_seed, i, j)``, so results never depend on how replicates are
scheduled across workers.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, TypeVar

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
INV_2_53 = 1.0 / (1 << 53)

_U64 = np.uint64
_GOLDEN = _U64(GOLDEN)
_MIX1 = _U64(MIX1)
_MIX2 = _U64(MIX2)

T = TypeVar("T")


def mix64(z: int) -> int:
    """SplitMix64 finalizer on a Python int."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return z ^ (z >> 31)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _U64(30))) * _MIX1
    z = (z ^ (z >> _U64(27))) * _MIX2
    return z ^ (z >> _U64(31))


def stream_key(master_seed: int, index: int) -> int:
    return mix64(mix64(master_seed & MASK64) + (index + 1) * GOLDEN)


def stream_keys(master_seed: int, indices: np.ndarray) -> np.ndarray:
    base = _U64(mix64(master_seed & MASK64))
    idx = np.asarray(indices, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return _mix64_array(base + (idx + _U64(1)) * _GOLDEN)


def uniforms(master_seed: int, indices: np.ndarray, draw: int = 0) -> np.ndarray:
    """Draw number ``draw`` for each replicate in ``indices``, in [0, 1)."""
    keys = stream_keys(master_seed, indices)
    with np.errstate(over="ignore"):
        bits = _mix64_array(keys + _U64((draw + 1) * GOLDEN & MASK64))
    return (bits >> _U64(11)).astype(np.float64) * INV_2_53


def exponentials(master_seed: int, indices: np.ndarray, draw: int = 0) -> np.ndarray:
    """Unit-rate exponentials by inverse CDF; a zero uniform maps to 0."""
    return -np.log1p(-uniforms(master_seed, indices, draw))


class ReplicateStream:
    """Sequential view of one replicate's draws.

    Scalar counterpart of :func:`uniforms`: ``ReplicateStream(s, i).uniform()``
    called ``j + 1`` times returns the same value as ``uniforms(s, [i], j)``.
    """

    def __init__(self, master_seed: int, index: int):
        self.master_seed = master_seed
        self.index = index
        self._key = stream_key(master_seed, index)
        self._draw = 0

    def next_bits(self) -> int:
        self._draw += 1
        return mix64(self._key + self._draw * GOLDEN)

    def uniform(self) -> float:
        return (self.next_bits() >> 11) * INV_2_53

    def exponential(self) -> float:
        # np.log1p, not math.log1p: the two can differ in the last bit, and the
        # scalar stream must reproduce the vectorised draws exactly.
        return float(-np.log1p(-self.uniform()))


@dataclass(frozen=True)
class RngPolicy:
    """Master seed plus the rule deriving replicate streams from it."""

    master_seed: int = 0

    def __post_init__(self):
        if not 0 <= self.master_seed <= MASK64:
            raise ValueError("master_seed must fit in 64 unsigned bits")

    def stream(self, index: int) -> ReplicateStream:
        return ReplicateStream(self.master_seed, index)

    def exponentials(self, start: int, count: int, draw: int = 0) -> np.ndarray:
        return exponentials(self.master_seed, np.arange(start, start + count), draw)

    def uniforms(self, start: int, count: int, draw: int = 0) -> np.ndarray:
        return uniforms(self.master_seed, np.arange(start, start + count), draw)


def default_threads() -> int:
    return os.cpu_count() or 1


BLOCK = 1 << 16


def map_blocks(
    fn: Callable[[int, int], T], n: int, threads: int | None = None, block: int = BLOCK
) -> list[T]:
    """Apply ``fn(start, count)`` over consecutive replicate blocks.

    The returned list is always in block order, whatever ``threads`` is.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    spans = [(s, min(block, n - s)) for s in range(0, n, block)]
    threads = default_threads() if threads is None else threads
    if threads <= 1 or len(spans) <= 1:
        return [fn(s, c) for s, c in spans]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda sc: fn(*sc), spans))
