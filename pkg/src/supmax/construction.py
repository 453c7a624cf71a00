"""Deterministic side of the big-jump construction.

A big-jump process descends along ``Y_t = -y(t)``, where

    dy/dt = mu + sigma2 / (y + h(y)),   y(0) = 0,

until a random time ``T`` with hazard ``kappa(y(t)) = sigma2 / (y + h(y))**2``,
then jumps up to ``h(y(T))`` and drifts down at rate ``mu`` afterwards.
Everything here is a pure function of the parameters.

Two independent routes are provided for the depth-parametrised integrals:

* :func:`time_of_depth` / :func:`cumulative_hazard` integrate the rate
  functions numerically (adaptive Simpson).
* :class:`DescentProfile` uses exact antiderivatives. All supported jump
  targets are piecewise linear, so ``w(y) = y + h(y)`` is piecewise affine
  and both integrals are elementary on each piece. The simulator relies on
  this route; the tests hold it against the quadrature one.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

from .errors import InfeasibleSpecError
from .numerics import bisect_increasing, integrate

# ---------------------------------------------------------------------------
# Analytic bounds


def _check_nonneg(**kw):
    for name, v in kw.items():
        if not v >= 0 or math.isnan(v):
            raise ValueError(f"{name} must be nonnegative, got {v!r}")


def _check_pos(**kw):
    for name, v in kw.items():
        if not v > 0 or math.isnan(v):
            raise ValueError(f"{name} must be positive, got {v!r}")


def bound_tail(gamma: float, a: float) -> float:
    """Tight upper bound ``1 / (1 + gamma * a)`` on ``P{Y* >= a}``."""
    _check_nonneg(gamma=gamma, a=a)
    return 1.0 / (1.0 + gamma * a)


def uniform_lower_bound(gamma: float, a: float) -> float:
    """``1 / (5 (1 + a gamma))``, met for every ``a`` by one fixed process."""
    _check_nonneg(gamma=gamma, a=a)
    return 1.0 / (5.0 * (1.0 + a * gamma))


def kingman_bounds(gamma: float, a: float) -> tuple[float, float]:
    """Mean and Markov-tail bounds on ``Y*`` for stationary independent increments.

    Returns ``(1 / (2 gamma), min(1, 1 / (2 a gamma)))``.
    """
    _check_pos(gamma=gamma, a=a)
    return 1.0 / (2.0 * gamma), min(1.0, 1.0 / (2.0 * a * gamma))


# ---------------------------------------------------------------------------
# Jump targets


class Segment(NamedTuple):
    """A piece ``[start, end)`` on which ``w(y) = w0 + slope * (y - start)``."""

    start: float
    end: float
    w0: float
    slope: float


@dataclass(frozen=True)
class Constant:
    """``h(y) = a``: every jump lands exactly on level ``a``."""

    a: float
    family = "const"

    def __post_init__(self):
        _check_nonneg(a=self.a)

    @property
    def param(self) -> float:
        return self.a

    def __call__(self, y):
        if np.ndim(y):
            return np.full(np.shape(y), float(self.a))
        return float(self.a)

    def segments(self) -> tuple[Segment, ...]:
        return (Segment(0.0, math.inf, self.a, 1.0),)

    def depth_for_level(self, level: float) -> float:
        return 0.0 if level <= self.a else math.inf


@dataclass(frozen=True)
class Affine:
    """``h(y) = b + y``."""

    b: float
    family = "affine"

    def __post_init__(self):
        _check_pos(b=self.b)

    @property
    def param(self) -> float:
        return self.b

    def __call__(self, y):
        return self.b + (np.asarray(y, dtype=float) if np.ndim(y) else y)

    def segments(self) -> tuple[Segment, ...]:
        return (Segment(0.0, math.inf, self.b, 2.0),)

    def depth_for_level(self, level: float) -> float:
        return max(0.0, level - self.b)


@dataclass(frozen=True)
class Tabulated:
    """Piecewise-linear ``h`` through ``knots``, flat outside the knot range."""

    knots: tuple[tuple[float, float], ...]
    family = "table"

    def __post_init__(self):
        knots = tuple((float(y), float(v)) for y, v in self.knots)
        object.__setattr__(self, "knots", knots)
        if not knots:
            raise InfeasibleSpecError("tabulated jump target needs at least one knot")
        ys = [k[0] for k in knots]
        hs = [k[1] for k in knots]
        if any(not math.isfinite(v) for v in ys + hs):
            raise InfeasibleSpecError("tabulated knots must be finite")
        if ys[0] < 0:
            raise InfeasibleSpecError("tabulated knots must have y >= 0")
        if any(y2 <= y1 for y1, y2 in zip(ys, ys[1:])):
            raise InfeasibleSpecError("tabulated knot abscissae must be strictly increasing")
        if any(v2 < v1 for v1, v2 in zip(hs, hs[1:])):
            raise InfeasibleSpecError("tabulated h must be nondecreasing")
        if hs[0] < 0:
            raise InfeasibleSpecError("tabulated h must be nonnegative")

    @property
    def param(self) -> str:
        return ";".join(f"{y:g}:{v:g}" for y, v in self.knots)

    @property
    def _ys(self):
        return [k[0] for k in self.knots]

    @property
    def _hs(self):
        return [k[1] for k in self.knots]

    def __call__(self, y):
        out = np.interp(y, self._ys, self._hs)
        return out if np.ndim(y) else float(out)

    def segments(self) -> tuple[Segment, ...]:
        ys = self._ys
        cuts = [0.0] + [y for y in ys if y > 0.0]
        segs = []
        for i, start in enumerate(cuts):
            end = cuts[i + 1] if i + 1 < len(cuts) else math.inf
            if math.isinf(end):
                h_slope = 0.0
            else:
                h_slope = (self(end) - self(start)) / (end - start)
            segs.append(Segment(start, end, start + self(start), 1.0 + h_slope))
        return tuple(segs)

    def depth_for_level(self, level: float) -> float:
        ys, hs = self._ys, self._hs
        if level <= hs[0]:
            return 0.0
        if level > hs[-1]:
            return math.inf
        k = bisect.bisect_left(hs, level)
        y1, y2, h1, h2 = ys[k - 1], ys[k], hs[k - 1], hs[k]
        return y1 + (level - h1) * (y2 - y1) / (h2 - h1)

    @classmethod
    def from_file(cls, path) -> "Tabulated":
        """Read ``y,h`` pairs, one per line; ``#`` starts a comment."""
        knots = []
        with open(path) as fh:
            for line in fh:
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                parts = line.replace(",", " ").split()
                if len(parts) != 2:
                    raise InfeasibleSpecError(f"bad knot line: {line!r}")
                try:
                    knots.append((float(parts[0]), float(parts[1])))
                except ValueError:
                    # tolerate a header row
                    if knots:
                        raise InfeasibleSpecError(f"bad knot line: {line!r}") from None
        return cls(tuple(knots))


JumpTarget = Union[Constant, Affine, Tabulated]


@dataclass(frozen=True)
class BigJumpSpec:
    """Drift ``mu``, variance rate ``sigma2`` and jump target ``h``."""

    mu: float
    sigma2: float
    h: JumpTarget

    def __post_init__(self):
        for name in ("mu", "sigma2"):
            v = getattr(self, name)
            try:
                ok = float(v) > 0 and math.isfinite(float(v))
            except (TypeError, ValueError):
                ok = False
            if not ok:
                raise InfeasibleSpecError(f"{name} must be a positive finite number, got {v!r}")
        if not self.h(0.0) > 0.0:
            raise InfeasibleSpecError(
                "y + h(y) must be positive for y >= 0; h(0) = 0 makes the hazard undefined"
            )

    @property
    def gamma(self) -> float:
        return self.mu / self.sigma2


# ---------------------------------------------------------------------------
# Rates along the descent


def _w(y: float, spec: BigJumpSpec) -> float:
    if y < 0:
        raise ValueError(f"depth must be nonnegative, got {y!r}")
    w = y + spec.h(y)
    if not w > 0:
        raise InfeasibleSpecError(f"degenerate construction: y + h(y) = {w} at y = {y}")
    return w


def drift_rate(y: float, spec: BigJumpSpec) -> float:
    """Descent speed ``mu + sigma2 / (y + h(y))`` at depth ``y``."""
    return spec.mu + spec.sigma2 / _w(y, spec)


def hazard(y: float, spec: BigJumpSpec) -> float:
    """Jump intensity ``sigma2 / (y + h(y))**2`` at depth ``y``."""
    w = _w(y, spec)
    return spec.sigma2 / (w * w)


def _breakpoints(spec: BigJumpSpec) -> list[float]:
    return [s.start for s in spec.h.segments()[1:]]


def time_of_depth(c: float, spec: BigJumpSpec) -> float:
    """Time for the descent to reach depth ``c``: integral of ``1 / drift_rate``."""
    _check_nonneg(c=c)
    if math.isinf(c):
        return math.inf
    return integrate(lambda z: 1.0 / drift_rate(z, spec), 0.0, c, _breakpoints(spec))


def depth_at_time(t: float, spec: BigJumpSpec) -> float:
    """Descent depth ``y(t)``; inverts :func:`time_of_depth` by bisection."""
    _check_nonneg(t=t)
    if t == 0:
        return 0.0
    if math.isinf(t):
        return math.inf
    return bisect_increasing(lambda c: time_of_depth(c, spec), t)


def cumulative_hazard(c: float, spec: BigJumpSpec) -> float:
    """Hazard accumulated by the time the descent reaches depth ``c``.

    Integrates ``hazard / drift_rate`` in the depth variable; ``c`` may be
    ``math.inf``.
    """
    _check_nonneg(c=c)

    def integrand(z: float) -> float:
        return hazard(z, spec) / drift_rate(z, spec)

    return integrate(integrand, 0.0, c, _breakpoints(spec))


def jump_tail(spec: BigJumpSpec, a: float) -> float:
    """``P{Y* >= a}`` from the survival law, via numerical hazard integrals.

    For ``a > 0`` this is ``exp(-I(c)) - exp(-I(inf))`` with ``c`` the least
    depth whose jump reaches ``a``; ``Y* >= 0`` always holds since ``Y_0 = 0``.
    """
    _check_nonneg(a=a)
    if a == 0:
        return 1.0
    c = spec.h.depth_for_level(a)
    if math.isinf(c):
        return 0.0
    total = cumulative_hazard(math.inf, spec)
    return math.exp(-cumulative_hazard(c, spec)) - math.exp(-total)


# ---------------------------------------------------------------------------
# Closed forms for the two worked families


def example1_tail(mu: float, sigma2: float, a: float) -> float:
    """``P{Y* >= a}`` for ``h = a``: exactly ``1 / (1 + a mu / sigma2)``."""
    _check_pos(mu=mu, sigma2=sigma2)
    _check_nonneg(a=a)
    return 1.0 / (1.0 + a * mu / sigma2)


def example2_tail(mu: float, sigma2: float, b: float, a: float) -> float:
    """``P{Y* >= a}`` for ``h(y) = b + y``.

    At ``a = 0`` this returns the plateau value of the ``0 < a <= b`` branch
    (a convention; trivially ``P{Y* >= 0} = 1``).
    """
    _check_pos(mu=mu, sigma2=sigma2, b=b)
    _check_nonneg(a=a)
    root = math.sqrt(mu * b / (mu * b + sigma2))
    if a <= b:
        # 1 - root, written without the cancellation
        return sigma2 / (mu * b + sigma2) / (1.0 + root)
    return root * (math.sqrt(1.0 + sigma2 / (mu * (2.0 * a - b))) - 1.0)


def example2_b_star(mu: float, sigma2: float) -> float:
    """Affine offset ``16 sigma2 / (9 mu)`` giving a flat 1/5 tail up to ``b``."""
    _check_pos(mu=mu, sigma2=sigma2)
    return 16.0 * sigma2 / (9.0 * mu)


def affine_cumulative_hazard(mu: float, sigma2: float, b: float, c: float) -> float:
    """Closed-form cumulative hazard of the affine family up to depth ``c``."""
    _check_pos(mu=mu, sigma2=sigma2, b=b)
    _check_nonneg(c=c)
    if math.isinf(c):
        return 0.5 * math.log((mu * b + sigma2) / (mu * b))
    v = b + 2.0 * c
    return 0.5 * math.log(v / (mu * v + sigma2)) - 0.5 * math.log(b / (mu * b + sigma2))


def constant_cumulative_hazard(mu: float, sigma2: float, a: float, c: float) -> float:
    """Closed-form cumulative hazard of the constant family up to depth ``c``."""
    _check_pos(mu=mu, sigma2=sigma2, a=a)
    _check_nonneg(c=c)
    if math.isinf(c):
        return math.log1p(sigma2 / (mu * a))
    return math.log((c + a) / a) - math.log((mu * (c + a) + sigma2) / (mu * a + sigma2))


def constant_time_of_depth(mu: float, sigma2: float, a: float, c: float) -> float:
    """Closed-form descent time to depth ``c`` for ``h = a``."""
    _check_pos(mu=mu, sigma2=sigma2, a=a)
    _check_nonneg(c=c)
    return c / mu - sigma2 / mu**2 * math.log((mu * (c + a) + sigma2) / (mu * a + sigma2))


def tail_inequality_holds(alpha: float) -> bool:
    """Scalar inequality ``sqrt(1 + alpha/2) - 1 >= alpha / (4 (1 + alpha))``."""
    return math.sqrt(1.0 + alpha / 2.0) - 1.0 >= alpha / (4.0 * (1.0 + alpha))


def analytic_tail(spec: BigJumpSpec, a: float) -> float:
    """Best available reference for ``P{Y* >= a}``.

    Uses the affine closed form (including its ``a = 0``
    convention) and the survival-law integral otherwise.
    """
    if isinstance(spec.h, Affine):
        return example2_tail(spec.mu, spec.sigma2, spec.h.b, a)
    return jump_tail(spec, a)


# ---------------------------------------------------------------------------
# Exact piecewise antiderivatives (vectorised)


class DescentProfile:
    """Exact cumulative hazard and descent time for piecewise-affine ``w``.

    On a piece where ``w = w0 + beta (y - y0)`` the hazard integrand is
    ``(1/w - mu/(mu w + sigma2)) / beta`` in ``w`` and the time integrand is
    ``w / (mu w + sigma2) / beta``, both elementary.
    """

    def __init__(self, spec: BigJumpSpec):
        self.spec = spec
        segs = spec.h.segments()
        self.starts = np.array([s.start for s in segs])
        self.w0 = np.array([s.w0 for s in segs])
        self.beta = np.array([s.slope for s in segs])
        lengths = np.array([s.end - s.start for s in segs[:-1]])
        mu, s2 = spec.mu, spec.sigma2

        # Cumulative values at the start of every piece.
        dI = self._hazard_increment(self.w0[:-1], self.beta[:-1], lengths)
        dT = self._time_increment(self.w0[:-1], self.beta[:-1], lengths)
        self.hazard_at_start = np.concatenate([[0.0], np.cumsum(dI)])
        self.time_at_start = np.concatenate([[0.0], np.cumsum(dT)])
        w_last, b_last = self.w0[-1], self.beta[-1]
        self.total_hazard = float(
            self.hazard_at_start[-1] + math.log1p(s2 / (mu * w_last)) / b_last
        )

    def _hazard_increment(self, w0, beta, dy):
        mu, s2 = self.spec.mu, self.spec.sigma2
        dw = beta * dy
        return (np.log1p(dw / w0) - np.log1p(mu * dw / (mu * w0 + s2))) / beta

    def _time_increment(self, w0, beta, dy):
        mu, s2 = self.spec.mu, self.spec.sigma2
        dw = beta * dy
        return (dw / mu - s2 / mu**2 * np.log1p(mu * dw / (mu * w0 + s2))) / beta

    def _locate(self, c):
        k = np.searchsorted(self.starts, c, side="right") - 1
        return np.clip(k, 0, len(self.starts) - 1)

    def cumulative_hazard(self, c):
        c = np.asarray(c, dtype=float)
        k = self._locate(c)
        finite = np.isfinite(c)
        cc = np.where(finite, c, 0.0)
        val = self.hazard_at_start[k] + self._hazard_increment(
            self.w0[k], self.beta[k], cc - self.starts[k]
        )
        out = np.where(finite, val, self.total_hazard)
        return out if out.ndim else float(out)

    def time_of_depth(self, c):
        c = np.asarray(c, dtype=float)
        k = self._locate(c)
        finite = np.isfinite(c)
        cc = np.where(finite, c, 0.0)
        val = self.time_at_start[k] + self._time_increment(
            self.w0[k], self.beta[k], cc - self.starts[k]
        )
        out = np.where(finite, val, np.inf)
        return out if out.ndim else float(out)

    def depth_for_hazard(self, e):
        """Depth ``c`` with ``I(c) = e``; ``inf`` when ``e >= I(inf)``."""
        e = np.asarray(e, dtype=float)
        mu, s2 = self.spec.mu, self.spec.sigma2
        escape = e >= self.total_hazard
        ee = np.where(escape, 0.0, e)
        k = np.searchsorted(self.hazard_at_start, ee, side="right") - 1
        k = np.clip(k, 0, len(self.starts) - 1)
        w0, beta = self.w0[k], self.beta[k]
        d = beta * (ee - self.hazard_at_start[k])
        # Solve log(w/w0) - log((mu w + s2)/(mu w0 + s2)) = d for w.
        s = s2 / (mu * w0 + s2)
        denom = s - (1.0 - s) * np.expm1(d)
        with np.errstate(divide="ignore", invalid="ignore"):
            w = w0 * np.exp(d) * s / denom
            c = self.starts[k] + (w - w0) / beta
        c = np.where(escape | ~(denom > 0), np.inf, np.maximum(c, self.starts[k]))
        return c if c.ndim else float(c)

    def depth_at_time(self, t, iterations: int = 110):
        """Vectorised inverse of :meth:`time_of_depth` by bisection.

        The speed lies in ``[mu, mu + sigma2 / w(0)]``, which brackets the root.
        The iteration count is fixed so each element's result is independent of
        the batch it was computed in.
        """
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("times must be nonnegative")
        finite = np.isfinite(t)
        tt = np.where(finite, t, 0.0)
        mu, s2 = self.spec.mu, self.spec.sigma2
        lo = mu * tt
        hi = (mu + s2 / self.w0[0]) * tt
        for _ in range(iterations):
            mid = 0.5 * (lo + hi)
            below = self.time_of_depth(mid) < tt
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        out = np.where(finite, 0.5 * (lo + hi), np.inf)
        return out if out.ndim else float(out)

    def survival(self, t):
        """``P(T >= t) = exp(-I(y(t)))``."""
        return np.exp(-np.asarray(self.cumulative_hazard(self.depth_at_time(t))))


def log_grid(lo: float, hi: float, points: int) -> list[float]:
    """``points`` values spaced evenly in log between positive ``lo`` and ``hi``."""
    if points == 1:
        return [lo]
    r = math.log(hi / lo) / (points - 1)
    return [lo * math.exp(r * k) for k in range(points)]


def linear_grid(lo: float, hi: float, points: int) -> list[float]:
    if points == 1:
        return [lo]
    return [lo + (hi - lo) * k / (points - 1) for k in range(points)]


def make_spec(mu: float, sigma2: float, h: JumpTarget | float, family: str | None = None) -> BigJumpSpec:
    """Convenience constructor: ``make_spec(1, 1, 2.0, "const")``."""
    if not isinstance(h, (Constant, Affine, Tabulated)):
        if family == "const":
            h = Constant(h)
        elif family == "affine":
            h = Affine(h)
        else:
            raise ValueError(f"unknown family {family!r}")
    return BigJumpSpec(mu, sigma2, h)
