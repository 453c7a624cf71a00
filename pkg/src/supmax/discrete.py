"""Discrete-time maximal inequality.

A chain ``S`` with ``S_0 = 0`` whose compensated version
``S_k + gamma * sum_{j<=k} U_j**2`` is a supermartingale obeys the same bound
``P{S* >= a} <= 1 / (1 + gamma a)``. The bound is approached by sampling an
constant-target big-jump process at integer times, with drift ``mu_t`` small,
variance rate ``mu_t / gamma - mu_t**2`` and jump target ``a + mu_t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .construction import BigJumpSpec, Constant, bound_tail, kingman_bounds
from .errors import InfeasibleSpecError
from .reports import BinEstimate, DriftReport, Verdict
from .rng import ReplicateStream, RngPolicy, map_blocks
from .simulation import (
    MeanEstimate,
    TailEstimate,
    landing_level,
    path_values,
    profile_for,
    sample_jump,
    sample_jumps,
)
from .stats import z_value

DEFAULT_CHAIN_HORIZON = 64


@dataclass(frozen=True)
class DiscreteConstructionParams:
    gamma: float
    a: float
    mu_tilde: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise InfeasibleSpecError("gamma must be positive")
        if not self.a >= 0:
            raise InfeasibleSpecError("a must be nonnegative")
        if not self.mu_tilde > 0:
            raise InfeasibleSpecError("mu_tilde must be positive")
        if not self.sigma2_tilde > 0:
            raise InfeasibleSpecError(
                f"mu_tilde={self.mu_tilde} leaves no variance budget; need mu_tilde < 1/gamma"
            )

    @property
    def sigma2_tilde(self) -> float:
        return self.mu_tilde / self.gamma - self.mu_tilde**2

    @property
    def a_tilde(self) -> float:
        return self.a + self.mu_tilde

    @property
    def gamma_tilde(self) -> float:
        return self.mu_tilde / self.sigma2_tilde

    @property
    def hit_probability(self) -> float:
        """``P{Y* >= a_tilde}`` for the continuous process, a lower bound on ``P{S* >= a}``."""
        return bound_tail(self.gamma_tilde, self.a_tilde)

    @property
    def spec(self) -> BigJumpSpec:
        return BigJumpSpec(self.mu_tilde, self.sigma2_tilde, Constant(self.a_tilde))


def make_discrete_params(gamma: float, a: float, mu_tilde: float) -> DiscreteConstructionParams:
    return DiscreteConstructionParams(gamma, a, mu_tilde)


def sampled_chain_gap(gamma: float, a: float, mu_tilde: float) -> float:
    """Shortfall of the sampled construction's guarantee below ``1/(1+gamma a)``."""
    return bound_tail(gamma, a) - make_discrete_params(gamma, a, mu_tilde).hit_probability


def choose_mu_for_eps(gamma: float, a: float, eps: float, iterations: int = 60) -> float:
    """Largest drift on a dyadic lattice of ``(0, 1/(2 gamma)]`` with gap ``<= eps/2``.

    The other half of ``eps`` is left for Monte Carlo noise.
    """
    if not gamma > 0 or not a >= 0 or not eps > 0:
        raise ValueError("need gamma > 0, a >= 0, eps > 0")
    cap = 1.0 / (2.0 * gamma)
    budget = eps / 2.0
    if sampled_chain_gap(gamma, a, cap) <= budget:
        return cap
    lo, hi = 0.0, cap
    it = 0
    while it < iterations or lo == 0.0:
        mid = 0.5 * (lo + hi)
        if mid == 0.0:
            raise ValueError("eps too small to resolve")
        if sampled_chain_gap(gamma, a, mid) <= budget:
            lo = mid
        else:
            hi = mid
        it += 1
    return lo


@dataclass(frozen=True)
class ChainRealization:
    values: np.ndarray
    hit: bool
    jump_step: Optional[int]


def simulate_sampled_chain(
    params: DiscreteConstructionParams,
    stream: ReplicateStream,
    horizon: Optional[int] = None,
) -> ChainRealization:
    """Sample the construction at integer times.

    Emits ``S_0 .. S_K`` with ``K = ceil(T)`` on a jump, or ``horizon`` steps
    of pure descent when there is none. With ``horizon`` given, ``K`` is also
    capped at ``horizon``; ``hit`` still reflects the full path.
    """
    spec = params.spec
    t_jump, depth = sample_jump(spec, stream)
    if math.isinf(t_jump):
        k_end = DEFAULT_CHAIN_HORIZON if horizon is None else horizon
        step = None
    else:
        step = math.ceil(t_jump)
        k_end = step if horizon is None else min(step, horizon)
    values = path_values(spec, t_jump, depth, np.arange(k_end + 1, dtype=float))
    return ChainRealization(values, step is not None, step)


def sample_chains(
    params: DiscreteConstructionParams,
    policy: RngPolicy,
    start: int,
    count: int,
    horizon: Optional[int] = None,
) -> list[ChainRealization]:
    """Batched :func:`simulate_sampled_chain` for replicates ``start .. start+count-1``.

    All descent depths are inverted in one vectorised call; the results equal
    the one-at-a-time sampler exactly.
    """
    spec = params.spec
    t_jump, depth = sample_jumps(spec, policy, start, count)
    jumped = np.isfinite(t_jump)
    default = DEFAULT_CHAIN_HORIZON if horizon is None else horizon
    steps = np.where(jumped, np.ceil(np.where(jumped, t_jump, 0.0)), -1).astype(np.int64)
    ends = np.where(jumped, steps if horizon is None else np.minimum(steps, horizon), default)
    offsets = np.concatenate([[0], np.cumsum(ends + 1)])
    times = np.concatenate([np.arange(e + 1, dtype=float) for e in ends])
    owner = np.repeat(np.arange(count), ends + 1)
    before = times < t_jump[owner]
    values = np.empty_like(times)
    values[before] = 0.0 - profile_for(spec).depth_at_time(times[before])
    after = ~before
    landing = landing_level(spec, np.where(jumped, depth, 0.0))
    values[after] = landing[owner[after]] - spec.mu * (times[after] - t_jump[owner[after]])
    return [
        ChainRealization(values[offsets[i]:offsets[i + 1]], bool(jumped[i]),
                         int(steps[i]) if jumped[i] else None)
        for i in range(count)
    ]


def chain_suprema(params: DiscreteConstructionParams, policy: RngPolicy, start: int, count: int):
    """Exact ``S*`` and jump indicators without materialising chains.

    Before the jump the chain descends from 0; afterwards it falls at rate
    ``mu_tilde``, so the maximum sits at ``S_0`` or at step ``ceil(T)``.
    """
    spec = params.spec
    t_jump, depth = sample_jumps(spec, policy, start, count)
    jumped = np.isfinite(t_jump)
    tt = np.where(jumped, t_jump, 0.0)
    d = np.where(jumped, depth, 0.0)
    landing = landing_level(spec, d)
    at_ceiling = landing - params.mu_tilde * (np.ceil(tt) - tt)
    return np.where(jumped, np.maximum(at_ceiling, 0.0), 0.0), jumped


def estimate_chain_tail(
    params: DiscreteConstructionParams,
    n: int,
    policy: RngPolicy,
    level: Optional[float] = None,
    threads: int | None = None,
) -> TailEstimate:
    """``P{S* >= level}`` (default ``level = a``) with the construction's guarantee attached."""
    if n < 1:
        raise ValueError("n must be >= 1")
    level = params.a if level is None else level
    parts = map_blocks(lambda s, c: chain_suprema(params, policy, s, c)[0], n, threads)
    sup = np.concatenate(parts)
    hits = int(np.count_nonzero(sup >= level))
    return TailEstimate.from_counts(level, n, hits, params.hit_probability if level == params.a else None)


# ---------------------------------------------------------------------------
# Condition checker


def check_discrete_condition(
    sampler: Callable[[ReplicateStream], Sequence[float]],
    gamma: float,
    n: int,
    policy: RngPolicy,
    bins: int = 16,
    confidence: float = 0.95,
    min_count: int = 30,
) -> DriftReport:
    """Binned estimates of ``E[U_k + gamma U_k**2 | S_{k-1}]``.

    The compensated chain is a supermartingale iff these are ``<= 0``. Bins
    are equal-count in the previous state. Each bin's interval uses a
    Bonferroni level ``1 - (1 - confidence) / bins`` so that ``bins`` looks
    at a valid chain do not manufacture a failure. A bin FAILs when its
    interval lies entirely above zero.

    ``sampler`` must stop each chain at a stopping time (e.g. a fixed
    horizon), otherwise the pooled transitions are biased.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    prev, incr = [], []
    for i in range(n):
        s = np.asarray(sampler(policy.stream(i)), dtype=float)
        if len(s) < 2:
            continue
        prev.append(s[:-1])
        incr.append(np.diff(s))
    report = DriftReport(target="E[U + gamma*U^2 | S_prev] <= 0")
    if not prev:
        return report
    x = np.concatenate(prev)
    u = np.concatenate(incr)
    g = u + gamma * u * u
    edges = np.unique(np.quantile(x, np.linspace(0.0, 1.0, bins + 1)))
    if len(edges) == 1:
        edges = np.array([edges[0], edges[0]])
    which = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, len(edges) - 2)
    z = z_value(1.0 - (1.0 - confidence) / bins)
    for k in range(len(edges) - 1):
        sel = g[which == k]
        cnt = len(sel)
        if cnt == 0:
            continue
        mean = float(np.mean(sel))
        se = float(np.std(sel, ddof=1) / math.sqrt(cnt)) if cnt > 1 else math.inf
        lo, hi = mean - z * se, mean + z * se
        if cnt < min_count:
            verdict = Verdict.INCONCLUSIVE
        elif lo > 0:
            verdict = Verdict.FAIL
        else:
            verdict = Verdict.PASS
        report.bins.append(
            BinEstimate("U+gamma*U^2", float(edges[k]), float(edges[k + 1]), cnt,
                        mean, lo, hi, 0.0, 0.0, verdict)
        )
    return report


# ---------------------------------------------------------------------------
# Random-walk comparator


@dataclass(frozen=True)
class WalkSupEstimate:
    p_up: float
    gamma: float
    mean: MeanEstimate
    kingman_mean_bound: float
    capped: int

    @property
    def exact_mean(self) -> float:
        """``sum_k (p/q)**k``: the walk ever climbs ``k`` above 0 w.p. ``(p/q)**k``."""
        r = self.p_up / (1.0 - self.p_up)
        return r / (1.0 - r)


def default_drawdown(p_up: float) -> int:
    """Stop once the walk sits ``50 / (1 - 2 p_up)`` below its running max."""
    return math.ceil(50.0 / (1.0 - 2.0 * p_up) - 1e-9)


def random_walk_sup(
    p_up: float,
    steps_cap: int,
    n: int,
    policy: RngPolicy,
    drawdown: Optional[int] = None,
    threads: int | None = None,
) -> WalkSupEstimate:
    """Estimate ``E[S*]`` for the +/-1 walk stepping up with probability ``p_up``.

    Increments have mean ``2 p_up - 1`` and second moment 1, so
    ``gamma = 1 - 2 p_up``.
    """
    from ._walk import walk_suprema

    if not 0 <= p_up < 0.5:
        raise ValueError("p_up must lie in [0, 1/2)")
    if n < 1 or steps_cap < 1:
        raise ValueError("n and steps_cap must be >= 1")
    drawdown = default_drawdown(p_up) if drawdown is None else drawdown
    parts = map_blocks(
        lambda s, c: walk_suprema(policy.master_seed, s, c, p_up, drawdown, steps_cap),
        n, threads, block=1 << 12,
    )
    sup = np.concatenate([p[0] for p in parts]).astype(float)
    capped = int(sum(int(np.count_nonzero(p[1])) for p in parts))
    gamma = 1.0 - 2.0 * p_up
    return WalkSupEstimate(
        p_up, gamma, MeanEstimate.from_values(sup), kingman_bounds(gamma, 1.0)[0], capped
    )
