"""Beamforming-gain and rate loss of RVQ codebooks: exact laws, approximants,
asymptotics, and Monte Carlo counterparts.

Conventions used throughout:

* ``lam`` is the descending spectrum of the channel Gram matrix; values are
  normalized internally to ``lam[0] = 1`` (every quantity here is either
  scale-free or carries the SNR separately), so scale invariance is exact.
* ``m = 2**bits`` is the codebook size.
* Gain loss is ``(lam[0] - best gain)/lam[0]`` in [0, 1]; rate loss is the
  mean shortfall from the perfect-feedback rate, in bits.

Closed forms are capped at bits <= 20; the downward term accumulation is run
in the log domain so binomial-style sums stay stable at any supported size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .channel import ChannelRealization, ChannelModel, sample_channel
from .errors import (DegenerateSpectrumError, InstabilityGuardError,
                     ResourceLimitError, UnsupportedModelError)
from .linalg import check_spectrum
from .quadrature import integrate_piecewise
from .rng import RngStream
from .wnorm import GAP_RTOL, WeightedNormLaw, cdf
from .special import ln_gamma, beta_fn, gauss_2f1

MAX_CLOSED_FORM_BITS = 20
MAX_OUTER_TERMS = 10 ** 4
_SERIES_RTOL = 1e-15
_LN2 = math.log(2.0)
_MC_CHUNK_TARGET = 1 << 16


@dataclass(frozen=True)
class LossEstimate:
    value: float
    method: str
    stderr: float | None = None
    warning: str | None = None


@dataclass(frozen=True)
class QuantizationFactors:
    """Ingredients of the large-codebook gain-loss approximant."""

    m: int
    a_n: float      # 1 / (m (n-1) + 1)
    p: float        # 2/(n-1) - 1
    d: float        # 1 - prod_j (l1-l2)/(l1-lj), the decay base
    kappa: float    # Gamma(1/(n-1))


@dataclass(frozen=True)
class MiFactors2:
    """Two-antenna rate-loss factors: z = rho(l1-l2)/(1+rho l2), s = (1+rho l2)/rho."""

    z: float
    s: float


@dataclass(frozen=True)
class HardeningApprox:
    """Spread diagnostics of a covariance spectrum (descriptive only)."""

    d1: float
    d2: float


def _check_bits(bits: int, cap: int | None = None) -> int:
    if bits < 0:
        raise ValueError("bits must be non-negative")
    if cap is not None and bits > cap:
        raise ResourceLimitError(f"closed forms support bits <= {cap}")
    return 1 << bits


def _normalized(lam, n_min=2):
    lam = check_spectrum(lam, n_min=n_min)
    return lam / lam[0]


def _require_gap12(lam):
    if lam[0] - lam[1] < GAP_RTOL * lam[0]:
        raise DegenerateSpectrumError("top eigenvalue gap below 1e-9 relative")


def _require_all_gaps(lam):
    if np.min(-np.diff(lam)) < GAP_RTOL * lam[0]:
        raise DegenerateSpectrumError("spectrum has a gap below 1e-9 relative")


def _theorem_sum(m: int, q: float, d: float, k_min: int = 0) -> float:
    """sum_{k=k_min}^{m} d^(m-k) G(m+1) G(m+q-k) / (G(m-k+1) G(m+q)).

    Accumulated downward from k = m; terms decay geometrically in that
    direction once past the peak, so the sum is truncated when a term drops
    below 1e-15 of the running total.
    """
    if not 0.0 <= d < 1.0:
        raise DegenerateSpectrumError("decay base must lie in [0, 1)")
    if d == 0.0:
        if k_min > m:
            return 0.0
        return math.exp(ln_gamma(q) + gammaln(m + 1.0) - gammaln(m + q))
    base = gammaln(m + 1.0) - gammaln(m + q)
    ln_d = math.log(d)
    total = 0.0
    hi = m
    block = 4096
    while hi >= k_min:
        lo = max(k_min, hi - block + 1)
        k = np.arange(hi, lo - 1, -1, dtype=float)
        t = np.exp((m - k) * ln_d + base + gammaln(m + q - k) - gammaln(m - k + 1.0))
        total += float(t.sum())
        past_peak = d * (m + q - lo) < (m - lo + 1.0)
        if past_peak and t[-1] < _SERIES_RTOL * total:
            break
        hi = lo - 1
    return total


def quantization_factors(lam, bits: int) -> QuantizationFactors:
    """Approximant ingredients for a spectrum and codebook size."""
    lam = _normalized(lam)
    n = lam.size
    m = _check_bits(bits, MAX_CLOSED_FORM_BITS)
    _require_gap12(lam)
    d = 1.0 - float(np.prod((lam[0] - lam[1]) / (lam[0] - lam[1:])))
    q = 1.0 / (n - 1)
    return QuantizationFactors(m=m, a_n=q / (m + q), p=2.0 * q - 1.0, d=d,
                               kappa=math.gamma(q))


# ---------------------------------------------------------------------------
# gain loss


def delta1_exact(lam, bits: int) -> LossEstimate:
    """Closed-form mean gain loss for two or three antennas."""
    lam = _normalized(lam)
    n = lam.size
    m = _check_bits(bits, MAX_CLOSED_FORM_BITS)
    if n == 2:
        _require_gap12(lam)
        return LossEstimate((1.0 - lam[1]) / (m + 1.0), "exact")
    if n == 3:
        _require_all_gaps(lam)
        r = (lam[1] - lam[2]) / (lam[0] - lam[2])
        s = _theorem_sum(m, 0.5, r, k_min=1)
        value = ((1.0 - lam[2]) * r ** m + (1.0 - lam[1]) * s) / (2.0 * m + 1.0)
        return LossEstimate(value, "exact")
    raise UnsupportedModelError("closed form available for 2 or 3 antennas only")


def delta1_appx(lam, bits: int) -> LossEstimate:
    """Dominant-segment approximant of the mean gain loss (any n >= 2).

    Exact for n = 2 and for rank-one spectra; a provable under-estimate in
    general with relative defect bounded by epsilon_b.
    """
    lam = _normalized(lam)
    n = lam.size
    qf = quantization_factors(lam, bits)
    q = 1.0 / (n - 1)
    c = _theorem_sum(qf.m, q, qf.d)
    return LossEstimate(qf.a_n * (1.0 - lam[1]) * c, "approx")


def delta1_quadrature(lam, bits: int, tol: float = 1e-12) -> LossEstimate:
    """Deterministic oracle: integrate the gain-law CDF to the m-th power."""
    lam = _normalized(lam)
    if lam.size > 4:
        raise UnsupportedModelError("full CDF unavailable beyond 4 antennas")
    m = _check_bits(bits)
    law = WeightedNormLaw(lam)
    value = integrate_piecewise(lambda x: cdf(law, x) ** m,
                                list(lam[::-1]), tol=tol)
    return LossEstimate(value, "quadrature")


def delta1_miso(n_t: int, bits: int) -> LossEstimate:
    """Rank-one (single receive stream) closed form: m * Beta(m, n/(n-1))."""
    if n_t < 2:
        raise ValueError("n_t must be at least 2")
    m = _check_bits(bits, MAX_CLOSED_FORM_BITS)
    return LossEstimate(m * beta_fn(m, n_t / (n_t - 1.0)), "exact")


def delta1_asympt(lam, bits: int) -> LossEstimate:
    """Large-codebook asymptote of the mean gain loss (n >= 3).

    This is the genuine limit of the closed-form approximant, so the ratio
    delta1_appx / delta1_asympt tends to one as bits grow.
    """
    lam = _normalized(lam)
    n = lam.size
    _check_bits(bits)
    _require_gap12(lam)
    if n < 3:
        raise UnsupportedModelError("asymptote defined for n >= 3")
    q = 1.0 / (n - 1)
    gap_ratio = float(np.prod((lam[0] - lam[1]) / (lam[0] - lam[1:])))
    value = (math.gamma(q) * 2.0 ** (-bits * q) / (n - 1.0)
             * (1.0 - lam[1]) * gap_ratio ** -q)
    return LossEstimate(value, "asymptotic")


def epsilon_b(lam, bits: int) -> float:
    """Relative-defect bound of delta1_appx (can exceed 1 at small bits)."""
    return 2.0 ** epsilon_b_log2(lam, bits)


def epsilon_b_log2(lam, bits: int) -> float:
    """log2 of the defect bound; usable far past floating-point underflow."""
    lam = _normalized(lam)
    qf = quantization_factors(lam, bits)
    if lam[1] - lam[-1] <= 0.0:
        return -math.inf
    if qf.d == 0.0:
        return -math.inf
    appx = delta1_appx(lam, bits).value
    return (math.log2(lam[1] - lam[-1]) + qf.m * math.log2(qf.d)
            - math.log2(appx))


def _gain_loss_samples(gram: np.ndarray, top: float, bits: int,
                       n_codebooks: int, stream: RngStream) -> np.ndarray:
    """Per-codebook normalized gain-loss samples, chunk-stable for any worker
    layout (chunk c always uses the substream derived with key c)."""
    m = 1 << bits
    n = gram.shape[0]
    per_chunk = max(1, _MC_CHUNK_TARGET // (m * n))
    out = np.empty(n_codebooks)
    pos = 0
    chunk = 0
    while pos < n_codebooks:
        take = min(per_chunk, n_codebooks - pos)
        g = stream.derive(chunk).generator().standard_normal((take, m, n, 2))
        f = g[..., 0] + 1j * g[..., 1]
        num = np.einsum("cki,ij,ckj->ck", f.conj(), gram, f).real
        den = np.einsum("cki,cki->ck", f.conj(), f).real
        best = (num / den).max(axis=1)
        out[pos:pos + take] = (top - best) / top
        pos += take
        chunk += 1
    return out


def delta1_mc(channel: ChannelRealization, bits: int, n_codebooks: int,
              stream: RngStream) -> LossEstimate:
    """Monte Carlo mean gain loss over fresh codebooks for one channel."""
    _check_bits(bits)
    if n_codebooks < 2:
        raise ValueError("need at least 2 codebooks for a standard error")
    top = float(channel.spectrum[0])
    if top <= 0:
        raise ValueError("zero channel")
    samples = _gain_loss_samples(channel.gram, top, bits, n_codebooks, stream)
    return LossEstimate(float(samples.mean()), "monte-carlo",
                        stderr=float(samples.std(ddof=1) / math.sqrt(n_codebooks)))


def delta1_closed(lam, bits: int) -> LossEstimate:
    """Best closed form for the dimension: exact (n <= 3) or approximant,
    falling back to quadrature with a warning when gaps are degenerate."""
    lam = _normalized(lam)
    try:
        if lam.size <= 3:
            return delta1_exact(lam, bits)
        return delta1_appx(lam, bits)
    except DegenerateSpectrumError:
        est = delta1_quadrature(lam, bits)
        return LossEstimate(est.value, est.method, warning="degenerate-gap fallback")


# ---------------------------------------------------------------------------
# rate loss


def mi_factors2(lam, rho: float) -> MiFactors2:
    # z pairs rho with raw eigenvalues; it is invariant under
    # (lam, rho) -> (c lam, rho/c), so no normalization here
    lam = check_spectrum(lam)
    if lam.size != 2:
        raise UnsupportedModelError("two-antenna factors only")
    if rho <= 0:
        raise ValueError("rho must be positive")
    return MiFactors2(z=rho * (lam[0] - lam[1]) / (1.0 + rho * lam[1]),
                      s=(1.0 + rho * lam[1]) / rho)


def delta2_exact2(lam, rho: float, bits: int) -> LossEstimate:
    """Two-antenna closed-form mean rate loss.

    Evaluated through two cancellation-free expansions around z: an
    alternating tail series for z < 1 and a reciprocal-power sum for z >= 1
    (the direct bracket form alternates in sign with the codebook size and is
    unstable; see the z-tail identity in the tests).
    """
    lam = check_spectrum(lam)
    if lam.size != 2:
        raise UnsupportedModelError("two-antenna closed form only")
    _require_gap12(lam)
    m = _check_bits(bits, MAX_CLOSED_FORM_BITS)
    z = mi_factors2(lam, rho).z
    if z < 1.0:
        total = 0.0
        term_base = 1.0
        j = 1
        while True:
            term_base *= z
            term = ((-1.0) ** (j + 1)) * term_base / (m + j)
            total += term
            if abs(term) < 1e-17 * max(abs(total), 1e-300) or j > 10 ** 6:
                break
            j += 1
        return LossEstimate(total / _LN2, "exact")
    u = np.arange(m, dtype=float)
    series = float(np.sum(((-1.0) ** u) * z ** (-u) / (m - u)))
    delta = ((-1.0) ** m) * z ** (-float(m)) * math.log1p(z) + series
    return LossEstimate(delta / _LN2, "exact")


def delta2_quadrature(lam, rho: float, bits: int, tol: float = 1e-12) -> LossEstimate:
    """Deterministic rate-loss oracle by direct integration."""
    scale = float(check_spectrum(lam)[0])
    lam = _normalized(lam)
    if lam.size > 4:
        raise UnsupportedModelError("full CDF unavailable beyond 4 antennas")
    if rho <= 0:
        raise ValueError("rho must be positive")
    m = _check_bits(bits)
    law = WeightedNormLaw(lam)
    rho_hat = rho * scale  # the loss depends on rho and the spectrum jointly
    value = integrate_piecewise(
        lambda x: cdf(law, x) ** m / (1.0 + rho_hat * x),
        list(lam[::-1]), tol=tol * _LN2 / max(rho_hat, 1.0))
    return LossEstimate(rho_hat * value / _LN2, "quadrature")


def delta2_appx(lam, rho: float, bits: int) -> LossEstimate:
    """Dominant-segment rate-loss approximant for n >= 3.

    Outer geometric-style series with per-order inner sums; truncated at
    1e-12 relative with a hard cap of 1e4 orders.
    """
    lam = check_spectrum(lam)
    n = lam.size
    if n < 3:
        raise UnsupportedModelError("use delta2_exact2 for two antennas")
    if rho <= 0:
        raise ValueError("rho must be positive")
    qf = quantization_factors(lam, bits)
    m, d = qf.m, qf.d
    a = float(np.exp(np.mean(np.log(lam[0] - lam[1:]))))
    gamma = rho * a / (1.0 + rho * lam[0])
    pref = rho * a / (_LN2 * (n - 1.0) * (1.0 + rho * lam[0]))
    total = 0.0
    for i in range(MAX_OUTER_TERMS):
        q_i = (i + 1.0) / (n - 1.0)
        term = (gamma ** i * (1.0 - d) ** q_i / (m + q_i)
                * _theorem_sum(m, q_i, d))
        total += term
        if term < 1e-12 * total:
            return LossEstimate(pref * total, "approx")
    raise ResourceLimitError("outer series failed to converge within 1e4 orders")


def delta2_method2(lam, rho: float, bits: int) -> LossEstimate:
    """Alternating binomial/hypergeometric route to the rate-loss approximant.

    Kept as an independent cross-check; the unguarded alternating sum loses
    all precision quickly, so evaluation is refused above 3 bits.
    """
    lam = check_spectrum(lam)
    n = lam.size
    if n < 3:
        raise UnsupportedModelError("use delta2_exact2 for two antennas")
    if rho <= 0:
        raise ValueError("rho must be positive")
    if bits > 3:
        raise InstabilityGuardError("alternating sum unstable above 3 bits")
    m = _check_bits(bits)
    _require_gap12(lam)
    a = float(np.exp(np.mean(np.log(lam[0] - lam[1:]))))
    w = rho * (lam[0] - lam[1]) / (1.0 + rho * lam[0])
    y = (lam[0] - lam[1]) / a
    total = 0.0
    for k in range(m + 1):
        e = (n - 1) * k + 1
        total += (math.comb(m, k) * (-1.0) ** k * y ** e / e
                  * gauss_2f1(1.0, e, e + 1.0, w))
    return LossEstimate(rho * a / (1.0 + rho * lam[0]) * total / _LN2, "approx")


def epsilon_b_prime(lam, rho: float, bits: int) -> float:
    """Relative-defect bound of delta2_appx (can exceed 1 at small bits)."""
    return 2.0 ** epsilon_b_prime_log2(lam, rho, bits)


def epsilon_b_prime_log2(lam, rho: float, bits: int) -> float:
    lam = check_spectrum(lam)
    qf = quantization_factors(lam, bits)
    if lam[1] - lam[-1] <= 0.0 or qf.d == 0.0:
        return -math.inf
    appx = delta2_appx(lam, rho, bits).value
    return (math.log2(rho * (lam[1] - lam[-1]) / ((1.0 + rho * lam[-1]) * _LN2))
            + qf.m * math.log2(qf.d) - math.log2(appx))


def delta2_asympt(lam, rho: float, bits: int, method: str = "prop3") -> LossEstimate:
    """Large-codebook rate-loss asymptotes.

    Two published variants differ in SNR weighting and bracket shape; both
    are exposed and reported side by side rather than adjudicated.
    """
    lam = check_spectrum(lam)
    n = lam.size
    if rho <= 0:
        raise ValueError("rho must be positive")
    _check_bits(bits)
    _require_gap12(lam)
    m = 1 << bits
    d = 1.0 - float(np.prod((lam[0] - lam[1]) / (lam[0] - lam[1:])))
    kappa = math.gamma(1.0 / (n - 1))
    if method == "prop3":
        if n == 2:
            z = mi_factors2(lam, rho).z
            if z < 1.0:
                return LossEstimate(z / (_LN2 * (m + 1.0)), "asymptotic")
            if m < 2:
                raise ValueError("z >= 1 branch needs at least 1 bit")
            if z == 1.0:
                return LossEstimate(1.0 / (_LN2 * 2.0 * (m - 1.0)), "asymptotic")
            return LossEstimate((z - 1.0) / (_LN2 * 2.0 * z * math.log(z) * (m - 1.0)),
                                "asymptotic")
        value = (2.0 ** (-bits / (n - 1.0)) / (_LN2 * (n - 1.0))
                 * rho * (lam[0] - lam[1]) / (1.0 + rho * lam[0])
                 * (kappa + d / (1.0 - d)))
        return LossEstimate(value, "asymptotic")
    if method == "corollary3":
        value = (2.0 ** (-bits / (n - 1.0)) * kappa / (_LN2 * (n - 1.0))
                 * rho * (lam[0] - lam[1]) / (1.0 + rho * lam[1])
                 * (1.0 + d / ((1.0 - d) * (n - 1.0))))
        return LossEstimate(value, "asymptotic")
    raise ValueError(f"unknown method {method!r}")


def _rate_loss_samples(gram: np.ndarray, top: float, rho: float, bits: int,
                       n_codebooks: int, stream: RngStream) -> np.ndarray:
    m = 1 << bits
    n = gram.shape[0]
    per_chunk = max(1, _MC_CHUNK_TARGET // (m * n))
    out = np.empty(n_codebooks)
    i_perf = math.log2(1.0 + rho * top)
    pos = 0
    chunk = 0
    while pos < n_codebooks:
        take = min(per_chunk, n_codebooks - pos)
        g = stream.derive(chunk).generator().standard_normal((take, m, n, 2))
        f = g[..., 0] + 1j * g[..., 1]
        num = np.einsum("cki,ij,ckj->ck", f.conj(), gram, f).real
        den = np.einsum("cki,cki->ck", f.conj(), f).real
        best = (num / den).max(axis=1)
        out[pos:pos + take] = i_perf - np.log2(1.0 + rho * best)
        pos += take
        chunk += 1
    return out


def delta2_mc(channel: ChannelRealization, rho: float, bits: int,
              n_codebooks: int, stream: RngStream) -> LossEstimate:
    """Monte Carlo mean rate loss over fresh codebooks for one channel."""
    _check_bits(bits)
    if rho <= 0:
        raise ValueError("rho must be positive")
    if n_codebooks < 2:
        raise ValueError("need at least 2 codebooks for a standard error")
    top = float(channel.spectrum[0])
    if top <= 0:
        raise ValueError("zero channel")
    samples = _rate_loss_samples(channel.gram, top, rho, bits, n_codebooks, stream)
    return LossEstimate(float(samples.mean()), "monte-carlo",
                        stderr=float(samples.std(ddof=1) / math.sqrt(n_codebooks)))


# ---------------------------------------------------------------------------
# channel-averaged losses


def _channel_average(model: ChannelModel, bits: int, n_channels: int,
                     n_codebooks: int, stream: RngStream, sampler) -> LossEstimate:
    if n_channels < 2:
        raise ValueError("need at least 2 channel draws for a standard error")
    means = np.empty(n_channels)
    for i in range(n_channels):
        sub = stream.derive(i)
        ch = sample_channel(model, sub.derive("channel").generator())
        means[i] = sampler(ch, sub.derive("codebooks")).mean()
    return LossEstimate(float(means.mean()), "monte-carlo",
                        stderr=float(means.std(ddof=1) / math.sqrt(n_channels)))


def avg_delta_snr(model: ChannelModel, bits: int, n_channels: int,
                  n_codebooks: int, stream: RngStream) -> LossEstimate:
    """Channel- and codebook-averaged normalized gain loss."""
    _check_bits(bits)

    def sampler(ch, sub):
        return _gain_loss_samples(ch.gram, float(ch.spectrum[0]), bits,
                                  n_codebooks, sub)

    return _channel_average(model, bits, n_channels, n_codebooks, stream, sampler)


def avg_delta_mi(model: ChannelModel, rho: float, bits: int, n_channels: int,
                 n_codebooks: int, stream: RngStream) -> LossEstimate:
    """Channel- and codebook-averaged rate loss in bits."""
    _check_bits(bits)
    if rho <= 0:
        raise ValueError("rho must be positive")

    def sampler(ch, sub):
        return _rate_loss_samples(ch.gram, float(ch.spectrum[0]), rho, bits,
                                  n_codebooks, sub)

    return _channel_average(model, bits, n_channels, n_codebooks, stream, sampler)


def hardening_approx(sigma_spectrum) -> HardeningApprox:
    """Spread diagnostics of a transmit-covariance spectrum.

    d1 is the normalized top gap, d2 grows with how far the trailing
    eigenvalues sit below the top pair.  Descriptive figures of merit only;
    nothing downstream consumes them.
    """
    lam = check_spectrum(sigma_spectrum, n_min=2)
    if lam[0] - lam[1] < GAP_RTOL * lam[0]:
        raise DegenerateSpectrumError("top pair degenerate; diagnostics undefined")
    d1 = (lam[0] - lam[1]) / lam[0]
    d2 = 1.0 + float(np.prod((lam[0] - lam[2:]) / (lam[0] - lam[1])))
    return HardeningApprox(d1=float(d1), d2=d2)
