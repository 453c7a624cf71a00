"""Compiled kernel for the +/-1 random-walk supremum.

Uses the same SplitMix64 stream derivation as :mod:`supmax.rng`, so draw
``j`` of replicate ``i`` matches ``rng.uniforms(seed, [i], j)`` bit for bit.
"""

import numpy as np
from numba import njit

from .rng import GOLDEN, MIX1, MIX2, mix64

_G = np.uint64(GOLDEN)
_M1 = np.uint64(MIX1)
_M2 = np.uint64(MIX2)


@njit(cache=True, nogil=True)
def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@njit(cache=True, nogil=True)
def _walk_block(seed_hash, start, count, p_up, drawdown, steps_cap, sup, capped):
    scale = 1.0 / 9007199254740992.0  # 2**-53
    for r in range(count):
        key = _mix(seed_hash + np.uint64(start + r + 1) * _G)
        s = 0
        m = 0
        j = 0
        while True:
            if m - s >= drawdown:
                break
            if j >= steps_cap:
                capped[r] = True
                break
            j += 1
            bits = _mix(key + np.uint64(j) * _G)
            u = float(bits >> np.uint64(11)) * scale
            if u < p_up:
                s += 1
                if s > m:
                    m = s
            else:
                s -= 1
        sup[r] = m


def walk_suprema(master_seed, start, count, p_up, drawdown, steps_cap):
    """Running maxima for replicates ``start .. start+count-1``.

    Returns ``(suprema, capped)``; ``capped`` flags replicates stopped by
    ``steps_cap`` rather than by the drawdown rule.
    """
    sup = np.zeros(count, dtype=np.int64)
    capped = np.zeros(count, dtype=np.bool_)
    seed_hash = np.uint64(mix64(master_seed))
    _walk_block(seed_hash, start, count, float(p_up), int(drawdown), int(steps_cap), sup, capped)
    return sup, capped
