"""Scalar quadrature and monotone root finding.

Both routines are deliberately simple: the integrands in this package are
smooth, positive and bounded on every piece, and every inverse problem is
monotone, so robustness matters more than speed.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

from .errors import NumericalError

RTOL = 1e-10
ATOL = 1e-14
MAX_DEPTH = 60
MAX_INTERVALS = 200_000

BISECT_RTOL = 1e-12
BISECT_MAX_ITER = 200


def _simpson(fa: float, fm: float, fb: float, width: float) -> float:
    return width * (fa + 4.0 * fm + fb) / 6.0


def adaptive_simpson(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    rtol: float = RTOL,
    atol: float = ATOL,
) -> float:
    """Integrate ``f`` over the finite interval [lo, hi].

    Classic adaptive Simpson with Richardson correction. The per-interval
    tolerance is split in half at every bisection, starting from
    ``max(rtol * |coarse estimate|, atol)``.
    """
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError("adaptive_simpson needs finite limits; use integrate()")
    if hi == lo:
        return 0.0
    sign = 1.0
    if hi < lo:
        lo, hi, sign = hi, lo, -1.0

    fa, fb = f(lo), f(hi)

    # Seed with 16 panels so the first error estimate is not fooled by symmetry.
    panels = 16
    edges = [lo + (hi - lo) * k / panels for k in range(panels + 1)]
    vals = [fa] + [f(x) for x in edges[1:-1]] + [fb]
    coarse = 0.0
    stack = []
    for k in range(panels):
        a, b = edges[k], edges[k + 1]
        m = 0.5 * (a + b)
        fmk = f(m)
        s = _simpson(vals[k], fmk, vals[k + 1], b - a)
        coarse += s
        stack.append((a, b, vals[k], fmk, vals[k + 1], s, 0))
    if not math.isfinite(coarse):
        raise NumericalError("non-finite integrand", lo=lo, hi=hi, estimate=coarse)
    tol = max(rtol * abs(coarse), atol)

    total = 0.0
    comp = 0.0
    processed = 0
    while stack:
        a, b, fa_, fm_, fb_, s, depth = stack.pop()
        processed += 1
        if processed > MAX_INTERVALS:
            raise NumericalError(
                "adaptive Simpson interval budget exhausted",
                lo=lo, hi=hi, partial=total, pending=len(stack),
            )
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = _simpson(fa_, flm, fm_, m - a)
        right = _simpson(fm_, frm, fb_, b - m)
        err = left + right - s
        local_tol = tol * (b - a) / (hi - lo)
        if abs(err) <= 15.0 * local_tol or (b - a) <= 1e-15 * max(1.0, abs(a)):
            piece = left + right + err / 15.0
            # Kahan summation keeps many small pieces from drifting.
            y = piece - comp
            t = total + y
            comp = (t - total) - y
            total = t
        elif depth >= MAX_DEPTH:
            raise NumericalError(
                "adaptive Simpson did not converge",
                lo=lo, hi=hi, at=(a, b), error=err, tolerance=local_tol,
            )
        else:
            stack.append((m, b, fm_, frm, fb_, right, depth + 1))
            stack.append((a, m, fa_, flm, fm_, left, depth + 1))
    return sign * total


def integrate(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    breakpoints: Sequence[float] = (),
    rtol: float = RTOL,
    atol: float = ATOL,
) -> float:
    """Integrate over [lo, hi], splitting at ``breakpoints``.

    ``hi`` may be ``math.inf``; the tail beyond the last finite point ``s`` is
    mapped to the unit interval with ``y = s + u / (1 - u)``.
    """
    if lo < 0 or hi < lo:
        raise ValueError(f"bad integration range [{lo}, {hi}]")
    if hi == lo:
        return 0.0
    cuts = sorted({p for p in breakpoints if lo < p < hi and math.isfinite(p)})
    pts = [lo] + cuts
    if math.isfinite(hi):
        pts.append(hi)
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        total += adaptive_simpson(f, a, b, rtol=rtol, atol=atol)
    if math.isinf(hi):
        start = pts[-1]

        def mapped(u: float) -> float:
            if u >= 1.0:
                return 0.0
            one_minus = 1.0 - u
            return f(start + u / one_minus) / (one_minus * one_minus)

        total += adaptive_simpson(mapped, 0.0, 1.0, rtol=rtol, atol=atol)
    return total


def bisect_increasing(
    f: Callable[[float], float],
    target: float,
    lo: float = 0.0,
    rtol: float = BISECT_RTOL,
    max_iter: int = BISECT_MAX_ITER,
) -> float:
    """Solve ``f(x) = target`` for nondecreasing ``f`` on [lo, inf).

    The bracket starts at [lo, lo + 1] and doubles its upper end until it
    straddles the target. Stops when the bracket width falls below
    ``rtol * max(|x|, tiny)``.
    """
    if f(lo) >= target:
        return lo
    width = 1.0
    hi = lo + width
    iters = 0
    while f(hi) < target:
        lo = hi
        width *= 2.0
        hi = lo + width
        iters += 1
        if iters > max_iter or math.isinf(hi):
            raise NumericalError(
                "could not bracket root", target=target, last_hi=hi, iterations=iters
            )
    for _ in range(max_iter - iters):
        mid = 0.5 * (lo + hi)
        if f(mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= rtol * max(abs(hi), 1e-300):
            return 0.5 * (lo + hi)
    raise NumericalError(
        "bisection iteration cap reached", target=target, bracket=(lo, hi)
    )
