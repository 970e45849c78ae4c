"""Special functions used by the closed-form loss expressions.

ln_gamma and beta_fn delegate to scipy's log-gamma; gauss_2f1 is a direct
power series because the hypergeometric route must stay an independent check
against the other closed forms.
"""

from __future__ import annotations

import numpy as np
from scipy.special import gammaln

_2F1_TOL = 1e-15
_2F1_MAX_TERMS = 200000


def ln_gamma(x):
    """log Gamma(x) for positive real x (vectorized)."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("ln_gamma requires positive arguments")
    out = gammaln(x)
    return float(out) if out.ndim == 0 else out


def beta_fn(x: float, y: float) -> float:
    """Euler beta via ln_gamma; relative error well under 1e-10."""
    if x <= 0 or y <= 0:
        raise ValueError("beta_fn requires positive arguments")
    return float(np.exp(ln_gamma(x) + ln_gamma(y) - ln_gamma(x + y)))


def gauss_2f1(a: float, b: float, c: float, z: float) -> float:
    """Gauss hypergeometric 2F1(a, b; c; z) by power series.

    Valid for |z| < 1 (and z = 0 trivially).  Terms are accumulated until
    the next one falls below 1e-15 of the running sum.
    """
    if c <= 0 and float(c).is_integer():
        raise ValueError("gauss_2f1 undefined for non-positive integer c")
    if not -1.0 < z < 1.0:
        raise ValueError("gauss_2f1 power series requires |z| < 1")
    total = 1.0
    term = 1.0
    for n in range(_2F1_MAX_TERMS):
        term *= (a + n) * (b + n) / ((c + n) * (n + 1)) * z
        total += term
        if abs(term) < _2F1_TOL * abs(total):
            return total
    raise ValueError("gauss_2f1 series failed to converge")
