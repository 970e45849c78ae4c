"""Distribution of the eigenweighted squared projection of an isotropic vector.

For a unit-norm isotropic complex n-vector f and a spectrum l1 >= ... >= ln,
the random variable w = sum_i l_i |f_i|^2 has a piecewise-polynomial law on
[ln, l1].  Closed forms are implemented for n = 2, 3, 4 (cdf and pdf) and for
the top segment [l2, l1] at any n; everything else falls back to sampling.

Branch bookkeeping: a segment of zero width (tied eigenvalues) is skipped, so
spectra with repeated trailing values evaluate through the surviving branches.
A branch is refused only when its own denominators involve a gap below
1e-9 * l1.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial, pi

import numpy as np

from .errors import DegenerateSpectrumError, UnsupportedRegionError, UnsupportedModelError
from .linalg import check_spectrum
from .rng import RngStream

GAP_RTOL = 1e-9
_CHUNK = 1 << 16


@dataclass(frozen=True)
class WeightedNormLaw:
    """Law of the eigenweighted norm for one spectrum (descending, l1 > 0)."""

    lam: np.ndarray

    def __post_init__(self):
        lam = check_spectrum(self.lam, n_min=2)
        object.__setattr__(self, "lam", lam)

    @property
    def n(self) -> int:
        return self.lam.size

    @property
    def support(self) -> tuple[float, float]:
        return float(self.lam[-1]), float(self.lam[0])


def _gap_ok(lam, *pairs) -> bool:
    tol = GAP_RTOL * lam[0]
    return all(lam[i] - lam[j] >= tol for i, j in pairs)


def _require_gaps(lam, *pairs):
    if not _gap_ok(lam, *pairs):
        raise DegenerateSpectrumError(
            "branch denominator gap below 1e-9 of the leading eigenvalue")


def _top_cdf(lam, x):
    # 1 - (l1-x)^(n-1) / prod_{j>=2} (l1-lj), valid on [l2, l1]
    _require_gaps(lam, *((0, j) for j in range(1, lam.size)))
    prod = np.prod(lam[0] - lam[1:])
    return 1.0 - (lam[0] - x) ** (lam.size - 1) / prod


def _int_rise_fall(a, b, lo, hi):
    # integral of (t-a)(b-t) dt from lo to hi, computed in shifted form
    u0, u1 = lo - a, hi - a
    w = b - a
    return w * (u1 * u1 - u0 * u0) / 2.0 - (u1 ** 3 - u0 ** 3) / 3.0


def cdf(law: WeightedNormLaw, x: float) -> float:
    """Exact CDF at x.

    n in {2, 3, 4}: any x.  n >= 5: only x at or above l2 (or at/below the
    support bottom); interior points below l2 raise, callers sample instead.
    """
    lam = law.lam
    n = law.n
    if x <= lam[-1]:
        return 0.0
    if x >= lam[0]:
        return 1.0
    if n == 2:
        _require_gaps(lam, (0, 1))
        return (x - lam[1]) / (lam[0] - lam[1])
    if n == 3:
        if x >= lam[1]:
            return _top_cdf(lam, x)
        _require_gaps(lam, (0, 2), (1, 2))
        return (x - lam[2]) ** 2 / ((lam[0] - lam[2]) * (lam[1] - lam[2]))
    if n == 4:
        return _cdf4(lam, x)
    if x >= lam[1]:
        return _top_cdf(lam, x)
    raise UnsupportedRegionError(
        f"no closed-form CDF below the second eigenvalue for n={n}")


def _cdf4(lam, x):
    l1, l2, l3, l4 = lam
    if x >= l2:
        return _top_cdf(lam, x)
    if x <= l3:
        _require_gaps(lam, (0, 3), (1, 3), (2, 3))
        return (x - l4) ** 3 / ((l1 - l4) * (l2 - l4) * (l3 - l4))
    # middle segment [l3, l2]
    _require_gaps(lam, (0, 2), (1, 3), (1, 2), (0, 3))
    if l3 - l4 >= GAP_RTOL * l1:
        base = (l3 - l4) ** 2 / ((l1 - l4) * (l2 - l4))
    else:
        base = 0.0
    k = 3.0 / ((l1 - l3) * (l2 - l4))
    part = (_int_rise_fall(l3, l2, l3, x) / (l2 - l3)
            + _int_rise_fall(l4, l1, l3, x) / (l1 - l4))
    return base + k * part


def pdf(law: WeightedNormLaw, x: float) -> float:
    """Exact density at x; n in {2, 3, 4} only."""
    lam = law.lam
    n = law.n
    if n not in (2, 3, 4):
        raise UnsupportedModelError(f"no closed-form density for n={n}")
    if x < lam[-1] or x > lam[0]:
        return 0.0
    if n == 2:
        _require_gaps(lam, (0, 1))
        return 1.0 / (lam[0] - lam[1])
    if n == 3:
        if x >= lam[1]:
            _require_gaps(lam, (0, 1), (0, 2))
            return 2.0 * (lam[0] - x) / ((lam[0] - lam[1]) * (lam[0] - lam[2]))
        _require_gaps(lam, (0, 2), (1, 2))
        return 2.0 * (x - lam[2]) / ((lam[0] - lam[2]) * (lam[1] - lam[2]))
    l1, l2, l3, l4 = lam
    if x >= l2:
        _require_gaps(lam, (0, 1), (0, 2), (0, 3))
        return 3.0 * (l1 - x) ** 2 / ((l1 - l2) * (l1 - l3) * (l1 - l4))
    if x <= l3:
        _require_gaps(lam, (0, 3), (1, 3), (2, 3))
        return 3.0 * (x - l4) ** 2 / ((l1 - l4) * (l2 - l4) * (l3 - l4))
    _require_gaps(lam, (0, 2), (1, 3), (1, 2), (0, 3))
    return 3.0 / ((l1 - l3) * (l2 - l4)) * (
        (x - l3) * (l2 - x) / (l2 - l3) + (x - l4) * (l1 - x) / (l1 - l4))


def sample_weighted_norms(law: WeightedNormLaw, n_samples: int, stream: RngStream) -> np.ndarray:
    """Draw eigenweighted norms; fixed chunking keeps the result independent
    of worker layout (chunk c always uses the substream derived with key c)."""
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    lam = law.lam
    out = np.empty(n_samples)
    pos = 0
    chunk_idx = 0
    while pos < n_samples:
        take = min(_CHUNK, n_samples - pos)
        g = stream.derive(chunk_idx).generator().standard_normal((take, lam.size, 2))
        q = g[..., 0] ** 2 + g[..., 1] ** 2
        out[pos:pos + take] = (q @ lam) / q.sum(axis=1)
        pos += take
        chunk_idx += 1
    return out


def empirical_cdf(law: WeightedNormLaw, n_samples: int, stream: RngStream) -> np.ndarray:
    """Sorted sample of the law; evaluate the empirical CDF by searchsorted."""
    out = sample_weighted_norms(law, n_samples, stream)
    out.sort()
    return out


def empirical_cdf_eval(sorted_samples: np.ndarray, x) -> np.ndarray:
    """Empirical CDF of a sorted sample evaluated at x (scalar or array)."""
    n = sorted_samples.size
    return np.searchsorted(sorted_samples, x, side="right") / n


def ball_volume(n: int, r2: float) -> float:
    """Volume of the complex n-ball of squared radius r2: pi^n r2^n / n!."""
    if n < 1:
        raise ValueError("n must be positive")
    if r2 < 0:
        raise ValueError("squared radius must be non-negative")
    return pi ** n * r2 ** n / factorial(n)


def ellipsoid_cap_volume_2(lam, x: float, r2: float) -> float:
    """Volume of {w in C^2: |w|^2 <= r2, sum_i lam_i |w_i|^2 >= x}.

    The slice of the ball where the weighted norm is at least x; at x = 0 it
    is the whole ball, and it empties once x exceeds r2*l1.  The mixed
    derivative of this volume at r = 1 recovers the n=2 weighted-norm
    density, which the tests exercise by finite differences.
    """
    lam = check_spectrum(lam, n_min=2)
    if lam.size != 2:
        raise UnsupportedModelError("ellipsoid cap volume implemented for n=2 only")
    l1, l2 = lam
    if l1 - l2 < GAP_RTOL * l1:
        raise DegenerateSpectrumError("l1 = l2 has no two-branch geometry")
    if x < 0 or r2 < 0:
        raise ValueError("x and r2 must be non-negative")
    if x >= r2 * l1:
        return 0.0
    if x >= r2 * l2:
        return (pi ** 2 / 2.0) * (r2 * l1 - x) ** 2 / (l1 * (l1 - l2))
    return (pi ** 2 / 2.0) * (r2 * r2 - x * x / (l1 * l2))
