"""Exact sampling of big-jump paths and Monte Carlo estimators.

The only randomness in a big-jump path is its jump time. Each replicate
draws one unit exponential ``E`` and jumps at the depth ``c`` where the
cumulative hazard reaches ``E`` (never, if ``E >= I(inf)``). The supremum is
then known in closed form, so tail estimates carry no discretisation or
horizon-truncation bias.
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Optional, Sequence

import numpy as np

from .construction import BigJumpSpec, DescentProfile
from .rng import ReplicateStream, RngPolicy, map_blocks
from .stats import normal_interval, wilson_interval

_JUMP_SIZE_FAULT = False


@contextmanager
def inject_jump_size_fault() -> Iterator[None]:
    """Negative control: flip the sign of the depth term in the jump size.

    Inside this context every jump lands at ``h(y) - 2y`` instead of
    ``h(y)``. Used only to prove the verification suite can fail.
    """
    global _JUMP_SIZE_FAULT
    old = _JUMP_SIZE_FAULT
    _JUMP_SIZE_FAULT = True
    try:
        yield
    finally:
        _JUMP_SIZE_FAULT = old


@lru_cache(maxsize=256)
def profile_for(spec: BigJumpSpec) -> DescentProfile:
    return DescentProfile(spec)


def jump_size(spec: BigJumpSpec, depth):
    """Size of the upward jump from ``-depth``: ``depth + h(depth)``."""
    if _JUMP_SIZE_FAULT:
        return spec.h(depth) - depth
    return depth + spec.h(depth)


def landing_level(spec: BigJumpSpec, depth):
    """``Y_T = -depth + jump_size``, evaluated without the round trip."""
    if _JUMP_SIZE_FAULT:
        return spec.h(depth) - 2.0 * depth
    return spec.h(depth)


@dataclass(frozen=True)
class PathRealization:
    jump_time: float
    depth_at_jump: float
    jump_size: float
    supremum: float
    grid_times: Optional[np.ndarray] = None
    grid_values: Optional[np.ndarray] = None

    @property
    def jumped(self) -> bool:
        return math.isfinite(self.jump_time)


@dataclass(frozen=True)
class TailEstimate:
    level_a: float
    trials: int
    successes: int
    p_hat: float
    ci_low: float
    ci_high: float
    analytic: Optional[float] = None

    @classmethod
    def from_counts(cls, level_a, trials, successes, analytic=None, confidence=0.95):
        if trials < 1:
            raise ValueError("trials must be >= 1")
        lo, hi = wilson_interval(successes, trials, confidence)
        return cls(level_a, trials, successes, successes / trials, lo, hi, analytic)

    @property
    def se(self) -> float:
        p = self.p_hat
        return math.sqrt(p * (1.0 - p) / self.trials)


@dataclass(frozen=True)
class MeanEstimate:
    estimate: float
    se: float
    ci_low: float
    ci_high: float
    trials: int

    @classmethod
    def from_values(cls, values: np.ndarray, confidence=0.95) -> "MeanEstimate":
        n = len(values)
        if n < 1:
            raise ValueError("need at least one value")
        # np.sum is pairwise in index order, so the result is schedule-independent.
        mean = float(np.sum(values) / n)
        se = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else math.inf
        lo, hi = normal_interval(mean, se, confidence)
        return cls(mean, se, lo, hi, n)


# ---------------------------------------------------------------------------
# Sampling


def sample_jump(spec: BigJumpSpec, stream: ReplicateStream) -> tuple[float, float]:
    """Draw ``(T, y(T))``; ``(inf, inf)`` when the process never jumps."""
    prof = profile_for(spec)
    e = stream.exponential()
    depth = prof.depth_for_hazard(e)
    if math.isinf(depth):
        return math.inf, math.inf
    return prof.time_of_depth(depth), depth


def sample_jumps(spec: BigJumpSpec, policy: RngPolicy, start: int, count: int):
    """Vectorised :func:`sample_jump` for replicates ``start .. start+count-1``."""
    prof = profile_for(spec)
    e = policy.exponentials(start, count)
    depth = prof.depth_for_hazard(e)
    return prof.time_of_depth(depth), depth


def suprema_from_depths(spec: BigJumpSpec, depth: np.ndarray) -> np.ndarray:
    jumped = np.isfinite(depth)
    d = np.where(jumped, depth, 0.0)
    landing = landing_level(spec, d)
    return np.where(jumped, np.maximum(landing, 0.0), 0.0)


def sample_suprema(
    spec: BigJumpSpec, n: int, policy: RngPolicy, threads: int | None = None
) -> np.ndarray:
    """Exact ``Y*`` for replicates ``0 .. n-1``, in replicate order."""
    if n < 1:
        raise ValueError("n must be >= 1")

    def block(start, count):
        _, depth = sample_jumps(spec, policy, start, count)
        return suprema_from_depths(spec, depth)

    return np.concatenate(map_blocks(block, n, threads))


def path_values(spec: BigJumpSpec, jump_time: float, depth: float, times) -> np.ndarray:
    """Evaluate one path at ``times`` given its jump time and depth."""
    prof = profile_for(spec)
    times = np.asarray(times, dtype=float)
    before = times < jump_time
    out = np.empty_like(times)
    out[before] = 0.0 - prof.depth_at_time(times[before])
    if math.isfinite(jump_time):
        landing = landing_level(spec, depth)
        out[~before] = landing - spec.mu * (times[~before] - jump_time)
    return out


def grid_times(horizon: float, step: float) -> np.ndarray:
    if not step > 0:
        raise ValueError("grid step must be positive")
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    k = int(math.floor(horizon / step + 1e-9))
    return step * np.arange(k + 1)


def simulate_path(
    spec: BigJumpSpec,
    stream: ReplicateStream,
    grid: tuple[float, float] | None = None,
) -> PathRealization:
    """One exact path; ``grid=(horizon, step)`` also exports sampled values.

    The supremum comes from the jump law, never from the grid.
    """
    t_jump, depth = sample_jump(spec, stream)
    if math.isinf(t_jump):
        size, sup = 0.0, 0.0
    else:
        size = float(jump_size(spec, depth))
        sup = max(float(landing_level(spec, depth)), 0.0)
    times = values = None
    if grid is not None:
        times = grid_times(*grid)
        values = path_values(spec, t_jump, depth, times)
    return PathRealization(t_jump, depth, size, sup, times, values)


# ---------------------------------------------------------------------------
# Estimators


def estimate_tails(
    spec: BigJumpSpec,
    levels: Sequence[float],
    n: int,
    policy: RngPolicy,
    threads: int | None = None,
    analytic: Sequence[Optional[float]] | None = None,
) -> list[TailEstimate]:
    """``P{Y* >= a}`` for every ``a`` in ``levels`` from one shared sample."""
    if n < 1:
        raise ValueError("n must be >= 1")
    sup = sample_suprema(spec, n, policy, threads)
    analytic = analytic or [None] * len(levels)
    out = []
    for a, ref in zip(levels, analytic):
        if a < 0:
            raise ValueError("levels must be nonnegative")
        out.append(TailEstimate.from_counts(a, n, int(np.count_nonzero(sup >= a)), ref))
    return out


def estimate_tail(
    spec: BigJumpSpec,
    a: float,
    n: int,
    policy: RngPolicy,
    threads: int | None = None,
    analytic: Optional[float] = None,
) -> TailEstimate:
    return estimate_tails(spec, [a], n, policy, threads, [analytic])[0]


def estimate_truncated_mean_sup(
    spec: BigJumpSpec, cap: float, n: int, policy: RngPolicy, threads: int | None = None
) -> MeanEstimate:
    """Monte Carlo mean of ``min(Y*, cap)``."""
    if not cap > 0:
        raise ValueError("cap must be positive")
    sup = sample_suprema(spec, n, policy, threads)
    return MeanEstimate.from_values(np.minimum(sup, cap))


# ---------------------------------------------------------------------------
# Quadratic variation


@dataclass(frozen=True)
class QVRecord:
    """Partition sums of squared increments, as a right-continuous step function."""

    times: np.ndarray
    qv: np.ndarray

    def at(self, t: float) -> float:
        k = int(np.searchsorted(self.times, t, side="right")) - 1
        return 0.0 if k < 0 else float(self.qv[k])

    @property
    def total(self) -> float:
        return float(self.qv[-1])


def quadratic_variation(times, values, partition) -> QVRecord:
    """Sum of squared increments of a sampled path along ``partition``.

    ``partition`` must be strictly increasing and consist of sampled times.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    part = np.asarray(partition, dtype=float)
    if times.shape != values.shape or times.ndim != 1:
        raise ValueError("times and values must be 1-d arrays of equal length")
    if part.ndim != 1 or len(part) == 0:
        raise ValueError("partition must be a nonempty 1-d sequence")
    if np.any(np.diff(part) <= 0):
        raise ValueError("partition must be strictly increasing")
    idx = np.searchsorted(times, part)
    idx = np.clip(idx, 0, len(times) - 1)
    # Snap to the nearer neighbour before checking membership.
    left = np.clip(idx - 1, 0, len(times) - 1)
    idx = np.where(np.abs(times[left] - part) < np.abs(times[idx] - part), left, idx)
    scale = max(1.0, float(np.max(np.abs(times))))
    if np.any(np.abs(times[idx] - part) > 1e-9 * scale):
        raise ValueError("partition points must lie on the sampled grid")
    incr = np.diff(values[idx])
    qv = np.concatenate([[0.0], np.cumsum(incr * incr)])
    return QVRecord(part, qv)
