"""Adaptive Simpson quadrature.

Deliberately hand-rolled: quadrature is the deterministic oracle that the
closed forms are checked against, so it must not share code with them.
"""

from __future__ import annotations

from .errors import ResourceLimitError

DEFAULT_TOL = 1e-10
MAX_INTERVALS = 10 ** 6


def adaptive_simpson(f, a: float, b: float, tol: float = DEFAULT_TOL,
                     max_intervals: int = MAX_INTERVALS) -> float:
    """Integrate f over [a, b] to absolute tolerance tol.

    Classic recursive Simpson with Richardson acceptance, run on an explicit
    stack; raises if the interval budget is exhausted before convergence.
    """
    if not b > a:
        if b == a:
            return 0.0
        raise ValueError("integration bounds must satisfy a <= b")
    fa, fb = f(a), f(b)
    mid = 0.5 * (a + b)
    fm = f(mid)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    stack = [(a, b, fa, fm, fb, whole, tol)]
    total = 0.0
    used = 0
    while stack:
        x0, x1, f0, fmid, f1, s, t = stack.pop()
        used += 1
        if used > max_intervals:
            raise ResourceLimitError("adaptive_simpson interval budget exhausted")
        xm = 0.5 * (x0 + x1)
        xl = 0.5 * (x0 + xm)
        xr = 0.5 * (xm + x1)
        fl, fr = f(xl), f(xr)
        sl = (xm - x0) / 6.0 * (f0 + 4.0 * fl + fmid)
        sr = (x1 - xm) / 6.0 * (fmid + 4.0 * fr + f1)
        err = sl + sr - s
        # 15x factor from the Richardson error model of Simpson halving
        if abs(err) <= 15.0 * t or (x1 - x0) < 1e-15 * (b - a):
            total += sl + sr + err / 15.0
        else:
            half = 0.5 * t
            stack.append((x0, xm, f0, fl, fmid, sl, half))
            stack.append((xm, x1, fmid, fr, f1, sr, half))
    return total


def integrate_piecewise(f, breakpoints, tol: float = DEFAULT_TOL) -> float:
    """Integrate f across consecutive [b_i, b_i+1] panels (skips empty ones)."""
    pts = list(breakpoints)
    if len(pts) < 2:
        raise ValueError("need at least two breakpoints")
    total = 0.0
    panels = [(lo, hi) for lo, hi in zip(pts[:-1], pts[1:]) if hi > lo]
    if not panels:
        return 0.0
    per = tol / len(panels)
    for lo, hi in panels:
        total += adaptive_simpson(f, lo, hi, tol=per)
    return total
