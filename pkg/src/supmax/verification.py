"""Numerical and statistical verdicts on the constructed processes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .construction import (
    BigJumpSpec,
    Constant,
    analytic_tail,
    bound_tail,
    uniform_lower_bound,
)
from .numerics import integrate
from .reports import BinEstimate, DriftReport, Verdict
from .rng import RngPolicy, map_blocks
from .simulation import (
    TailEstimate,
    estimate_tails,
    jump_size,
    landing_level,
    path_values,
    profile_for,
    quadratic_variation,
    sample_jumps,
    grid_times,
)

# ---------------------------------------------------------------------------
# Value function


def _p(x: float, gamma: float) -> float:
    return 1.0 / (1.0 + gamma * x)


def value_function(x: float, gamma: float) -> float:
    """``p(x) = 1 / (1 + gamma x)``: the largest chance of ever reaching 0 from ``x``."""
    if not x >= 0 or not gamma >= 0:
        raise ValueError("x and gamma must be nonnegative")
    return _p(x, gamma)


@dataclass(frozen=True)
class IdentityRow:
    x: float
    gamma: float
    first_fd: float
    first_exact: float
    second_fd: float
    second_exact: float
    passed: bool


@dataclass
class IdentityReport:
    rows: list[IdentityRow] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)


def _close(fd: float, exact: float) -> bool:
    return abs(fd - exact) <= max(1e-6, 1e-4 * abs(exact))


def check_value_identities(gamma: float, xs: Sequence[float]) -> IdentityReport:
    """Compare central differences of ``p`` with ``-gamma p^2`` and ``2 gamma^2 p^3``."""
    if not xs:
        raise ValueError("grid must be nonempty")
    report = IdentityReport()
    for x in xs:
        p = value_function(x, gamma)
        step = 1e-4 * max(1.0, x)
        plus, minus = _p(x + step, gamma), _p(x - step, gamma)
        d1 = (plus - minus) / (2.0 * step)
        d2 = (plus - 2.0 * p + minus) / (step * step)
        e1, e2 = -gamma * p * p, 2.0 * gamma * gamma * p**3
        report.rows.append(IdentityRow(x, gamma, d1, e1, d2, e2, _close(d1, e1) and _close(d2, e2)))
    return report


# ---------------------------------------------------------------------------
# Tail verdicts


def verify_tail_upper(estimate: TailEstimate, gamma: float) -> Verdict:
    """PASS unless the whole interval sits above ``1 / (1 + gamma a)``."""
    if estimate.ci_low <= bound_tail(gamma, estimate.level_a):
        return Verdict.PASS
    return Verdict.FAIL


@dataclass(frozen=True)
class SweepRow:
    a: float
    p_hat: float
    ci_low: float
    ci_high: float
    lower_bound: float
    analytic: float
    verdict: Verdict


@dataclass
class SweepResult:
    rows: list[SweepRow]

    @property
    def verdict(self) -> Verdict:
        return Verdict.FAIL if any(r.verdict is Verdict.FAIL for r in self.rows) else Verdict.PASS


def verify_uniform_sweep(
    spec: BigJumpSpec,
    a_grid: Sequence[float],
    n: int,
    policy: RngPolicy,
    threads: int | None = None,
) -> SweepResult:
    """Check ``P{Y* >= a} >= 1 / (5 (1 + a gamma))`` one-sidedly at each ``a``."""
    if not a_grid:
        raise ValueError("a_grid must be nonempty")
    estimates = estimate_tails(spec, list(a_grid), n, policy, threads)
    rows = []
    for est in estimates:
        lb = uniform_lower_bound(spec.gamma, est.level_a)
        rows.append(
            SweepRow(
                est.level_a, est.p_hat, est.ci_low, est.ci_high, lb,
                analytic_tail(spec, est.level_a),
                Verdict.PASS if est.ci_high >= lb else Verdict.FAIL,
            )
        )
    return SweepResult(rows)


# ---------------------------------------------------------------------------
# Conditional increment moments


def exact_increment_moments(spec: BigJumpSpec, t: float, eta: float) -> tuple[float, float]:
    """First two moments of ``Y_{t+eta} - Y_t`` given ``T > t``, by quadrature.

    Integrates over the jump depth on ``[y(t), y(t+eta)]``; the path between
    jumps is deterministic, so nothing here is random.
    """
    prof = profile_for(spec)
    y0 = prof.depth_at_time(t)
    y1 = prof.depth_at_time(t + eta)
    i0 = prof.cumulative_hazard(y0)
    stay = math.exp(-(prof.cumulative_hazard(y1) - i0))
    no_jump = -(y1 - y0)
    mu, s2 = spec.mu, spec.sigma2

    def density(y: float) -> float:
        w = y + spec.h(y)
        return (s2 / (w * w)) / (mu + s2 / w) * math.exp(-(prof.cumulative_hazard(y) - i0))

    def increment(y: float) -> float:
        return spec.h(y) - mu * (t + eta - prof.time_of_depth(y)) + y0

    m1 = stay * no_jump + integrate(lambda y: density(y) * increment(y), y0, y1)
    m2 = stay * no_jump**2 + integrate(lambda y: density(y) * increment(y) ** 2, y0, y1)
    return m1, m2


def check_continuous_drift(
    spec: BigJumpSpec,
    t_grid: Sequence[float],
    eta: float,
    n: int,
    policy: RngPolicy,
    threads: int | None = None,
    min_survival: float = 0.01,
    min_count: int = 30,
    min_jumps: float = 10.0,
) -> DriftReport:
    """Monte Carlo check of ``E[dY | T > t] = -mu eta`` and ``E[dY^2 | T > t] = sigma2 eta``.

    Conditioning is by rejection. Each check allows ``C eta^2 + 3 se``, where
    ``C eta^2`` is the largest gap over ``t_grid`` between the exact
    conditional moment and its first-order value. Deep in the descent the
    second moment is carried by rare jumps inside the window, so a bin whose
    expected number of such jumps is below ``min_jumps`` is inconclusive.
    """
    if not eta > 0:
        raise ValueError("eta must be positive")
    prof = profile_for(spec)
    ts = np.asarray(t_grid, dtype=float)
    y0 = prof.depth_at_time(ts)
    y1 = prof.depth_at_time(ts + eta)
    p_window = -np.expm1(prof.cumulative_hazard(y0) - prof.cumulative_hazard(y1))

    def block(start, count):
        t_jump, depth = sample_jumps(spec, policy, start, count)
        jumped = np.isfinite(depth)
        d = np.where(jumped, depth, 0.0)
        landing = landing_level(spec, d)
        out = np.zeros((len(ts), 4))
        for k, t in enumerate(ts):
            alive = t_jump > t
            tj = t_jump[alive]
            inc = np.where(
                tj > t + eta,
                -(y1[k] - y0[k]),
                landing[alive] - spec.mu * (t + eta - np.where(np.isfinite(tj), tj, 0.0)) + y0[k],
            )
            sq = inc * inc
            out[k] = (len(inc), inc.sum(), sq.sum(), (sq * sq).sum())
        return out

    # Block partial sums are combined in block order.
    totals = np.sum(np.stack(map_blocks(block, n, threads)), axis=0)

    targets = (-spec.mu * eta, spec.sigma2 * eta)
    remainders = np.array([exact_increment_moments(spec, t, eta) for t in ts]) - np.array(targets)
    slack = np.max(np.abs(remainders), axis=0)

    report = DriftReport(target=f"mean=-mu*eta={targets[0]:.6g}, second=sigma2*eta={targets[1]:.6g}")
    for k, t in enumerate(ts):
        cnt, s1, s2, s4 = totals[k]
        cnt = int(cnt)
        survival = cnt / n
        for q, (total, total_sq), target, extra in (
            ("mean", (s1, s2), targets[0], slack[0]),
            ("second_moment", (s2, s4), targets[1], slack[1]),
        ):
            if cnt == 0:
                report.bins.append(BinEstimate(q, t, t + eta, 0, math.nan, math.nan, math.nan,
                                               target, math.nan, Verdict.INCONCLUSIVE))
                continue
            mean = total / cnt
            var = max(total_sq / cnt - mean * mean, 0.0) * cnt / max(cnt - 1, 1)
            se = math.sqrt(var / cnt)
            allowance = extra + 3.0 * se
            if survival < min_survival or cnt < min_count or cnt * p_window[k] < min_jumps:
                verdict = Verdict.INCONCLUSIVE
            elif abs(mean - target) <= allowance:
                verdict = Verdict.PASS
            else:
                verdict = Verdict.FAIL
            report.bins.append(
                BinEstimate(q, t, t + eta, cnt, mean, mean - 1.96 * se, mean + 1.96 * se,
                            target, allowance, verdict)
            )
    return report


def check_stopped_martingale(
    spec: BigJumpSpec,
    level: float,
    t_grid: Sequence[float],
    n: int,
    policy: RngPolicy,
    threads: int | None = None,
) -> DriftReport:
    """Check ``E[Y_{t^tau} + gamma [Y,Y]_{t^tau}] = 0`` on ``t_grid``.

    ``tau`` is the first time ``Y >= level``. Constancy of the mean is a
    necessary consequence of the stopped compensated process being a
    martingale; the verdict is two-sided at 3 standard errors.
    """
    prof = profile_for(spec)
    ts = np.asarray(t_grid, dtype=float)
    descent = -prof.depth_at_time(ts)
    g = spec.gamma

    def block(start, count):
        t_jump, depth = sample_jumps(spec, policy, start, count)
        jumped = np.isfinite(depth)
        d = np.where(jumped, depth, 0.0)
        size = jump_size(spec, d)
        landing = landing_level(spec, d)
        stops = landing >= level
        tj = np.where(jumped, t_jump, np.inf)
        out = np.zeros((len(ts), 2))
        for k, t in enumerate(ts):
            after = tj <= t
            drift = np.where(stops, 0.0, spec.mu * (t - np.where(after, tj, 0.0)))
            z = np.where(after, landing - drift + g * size * size, descent[k])
            out[k] = (z.sum(), (z * z).sum())
        return out

    totals = np.sum(np.stack(map_blocks(block, n, threads)), axis=0)
    report = DriftReport(target="E[Y + gamma*[Y,Y]] stopped at level = 0")
    for k, t in enumerate(ts):
        mean = totals[k, 0] / n
        var = max(totals[k, 1] / n - mean * mean, 0.0) * n / max(n - 1, 1)
        se = math.sqrt(var / n)
        verdict = Verdict.PASS if abs(mean) <= 3.0 * se + 1e-12 else Verdict.FAIL
        report.bins.append(BinEstimate("stopped_mean", t, t, n, mean, mean - 1.96 * se,
                                       mean + 1.96 * se, 0.0, 3.0 * se, verdict))
    return report


# ---------------------------------------------------------------------------
# Equality diagnostics


@dataclass(frozen=True)
class EqualityDiagnostics:
    """``overshoot_max`` is the largest ``|Y_T - target|`` over jumps, where the
    target is ``a`` for a constant jump target and ``h(y(T))`` otherwise."""

    overshoot_max: float
    pre_jump_jump_count: int
    continuous_qv_estimate: float
    jumps: int


def equality_diagnostics(
    spec: BigJumpSpec,
    n: int,
    policy: RngPolicy,
    mesh: float = 1e-3,
    horizon: float = 4.0,
    grid_replicates: int = 200,
) -> EqualityDiagnostics:
    """Structural tightness checks on simulated paths.

    Overshoot is computed over all ``n`` replicates. Pre-jump jumps and the
    continuous quadratic variation on ``[0, T)`` use gridded paths for the
    first ``grid_replicates`` replicates.
    """
    t_jump, depth = sample_jumps(spec, policy, 0, n)
    jumped = np.isfinite(depth)
    d = depth[jumped]
    landing = landing_level(spec, d)
    target = np.full_like(d, spec.h.a) if isinstance(spec.h, Constant) else spec.h(d)
    overshoot = float(np.max(np.abs(landing - target))) if len(d) else 0.0

    times = grid_times(horizon, mesh)
    upward = 0
    qv_max = 0.0
    for i in range(min(grid_replicates, n)):
        values = path_values(spec, float(t_jump[i]), float(depth[i]), times)
        pre = times < t_jump[i]
        # Intervals that close strictly before the jump.
        k = int(np.count_nonzero(pre))
        if k < 2:
            continue
        upward += int(np.count_nonzero(np.diff(values[:k]) > 0))
        qv_max = max(qv_max, quadratic_variation(times[:k], values[:k], times[:k]).total)
    return EqualityDiagnostics(overshoot, upward, qv_max, int(np.count_nonzero(jumped)))
