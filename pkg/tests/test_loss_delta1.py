"""Mean gain-loss evaluators: closed forms, quadrature oracle, sampling."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import diag_channel
from rvqlab.channel import FixedSpectrumModel, sample_channel
from rvqlab.errors import (DegenerateSpectrumError, ResourceLimitError,
                           UnsupportedModelError)
from rvqlab.loss import (delta1_appx, delta1_asympt, delta1_closed,
                         delta1_exact, delta1_mc, delta1_miso,
                         delta1_quadrature, epsilon_b, epsilon_b_log2,
                         quantization_factors)
from rvqlab.rng import RngStream


def test_quantization_factors():
    qf = quantization_factors([4.0, 3.0, 2.0, 1.0], 2)
    assert qf.m == 4
    assert qf.a_n == pytest.approx(1.0 / 13.0, rel=1e-12)
    assert qf.d == pytest.approx(5.0 / 6.0, rel=1e-12)
    assert qf.kappa == pytest.approx(math.gamma(1.0 / 3.0), rel=1e-12)
    assert quantization_factors([4.0, 1.0, 1.0, 1.0], 2).d == 0.0


def test_exact_landmarks():
    assert delta1_exact([2.0, 1.0], 1).value == pytest.approx(1.0 / 6.0,
                                                              abs=1e-15)
    assert delta1_exact([3.0, 2.0, 1.0], 0).value == pytest.approx(1.0 / 3.0,
                                                                   abs=1e-15)


def test_exact_rank_one_two_antennas():
    for bits in range(0, 9):
        want = 1.0 / (2 ** bits + 1.0)
        assert delta1_exact([1.0, 0.0], bits).value == pytest.approx(want,
                                                                     rel=1e-14)


def test_exact_matches_quadrature():
    for lam in ([2.0, 1.0], [3.0, 2.0, 1.0]):
        for bits in (0, 2, 5, 9):
            ex = delta1_exact(lam, bits).value
            quad = delta1_quadrature(lam, bits).value
            assert abs(ex - quad) < 1e-10


def test_quadrature_landmarks():
    assert delta1_quadrature([2.0, 1.0], 3).value == pytest.approx(1.0 / 18.0,
                                                                   abs=1e-11)
    assert delta1_quadrature([3.0, 2.0, 1.0], 0).value == pytest.approx(
        1.0 / 3.0, abs=1e-11)


def test_quadrature_rank_one_matches_miso():
    quad = delta1_quadrature([1.0, 0.0, 0.0, 0.0], 3).value
    assert quad == pytest.approx(delta1_miso(4, 3).value, abs=1e-9)


def test_scale_invariance():
    for fn in (delta1_exact, delta1_quadrature):
        assert fn([6.0, 4.0, 2.0], 4).value == pytest.approx(
            fn([3.0, 2.0, 1.0], 4).value, abs=1e-12)
    assert delta1_appx([8.0, 6.0, 4.0, 2.0], 4).value == pytest.approx(
        delta1_appx([4.0, 3.0, 2.0, 1.0], 4).value, abs=1e-12)


def test_appx_two_antennas_collapses_to_exact():
    for bits in (0, 3, 7):
        assert delta1_appx([2.0, 1.0], bits).value == pytest.approx(
            delta1_exact([2.0, 1.0], bits).value, rel=1e-12)


def test_appx_flat_tail_is_exact():
    # with a flat trailing spectrum the approximant truncates nothing
    a = delta1_appx([4.0, 1.0, 1.0, 1.0], 4).value
    q = delta1_quadrature([4.0, 1.0, 1.0, 1.0], 4).value
    assert a == pytest.approx(q, abs=1e-8)


def test_appx_quadrature_sandwich():
    lam = [4.0, 3.0, 2.0, 1.0]
    for bits in range(1, 9):
        a = delta1_appx(lam, bits).value
        q = delta1_quadrature(lam, bits).value
        eps = epsilon_b(lam, bits)
        assert a <= q * (1.0 + 1e-10)
        if eps < 1.0:
            assert q <= a / (1.0 - eps) * (1.0 + 1e-10)


def test_monotone_in_bits():
    for lam, fn in (([3.0, 2.0, 1.0], delta1_exact),
                    ([4.0, 3.0, 2.0, 1.0], delta1_appx),
                    ([4.0, 3.0, 2.0, 1.0], delta1_quadrature)):
        vals = [fn(lam, b).value for b in range(0, 8)]
        assert np.all(np.diff(vals) < 0.0)


def test_closed_form_bit_cap():
    with pytest.raises(ResourceLimitError):
        delta1_exact([2.0, 1.0], 21)


def test_degenerate_gap_rejected():
    with pytest.raises(DegenerateSpectrumError):
        delta1_exact([2.0, 2.0], 3)
    with pytest.raises(DegenerateSpectrumError):
        delta1_appx([2.0, 2.0, 1.0], 3)


def test_closed_dispatch_and_fallback():
    assert delta1_closed([3.0, 2.0, 1.0], 4).method == "exact"
    assert delta1_closed([4.0, 3.0, 2.0, 1.0], 4).method == "approx"
    est = delta1_closed([2.0, 2.0, 1.0], 3)
    assert est.method == "quadrature"
    assert est.warning is not None
    assert est.value == pytest.approx(delta1_quadrature([2.0, 2.0, 1.0], 3).value,
                                      abs=1e-10)


def test_epsilon_vanishes_with_flat_tail():
    assert epsilon_b([4.0, 1.0, 1.0, 1.0], 3) == 0.0


def test_epsilon_direct_value():
    lam = [4.0, 3.0, 2.0, 1.0]
    want = (2.0 / 4.0) * (5.0 / 6.0) ** 4 / delta1_appx(lam, 2).value
    assert epsilon_b(lam, 2) == pytest.approx(want, rel=1e-12)


def test_epsilon_log_trend():
    # log2 eps tracks m*log2(d): slope of one against the other
    lam = [4.0, 3.0, 2.0, 1.0]
    d = quantization_factors(lam, 1).d
    xs = np.array([(2 ** b) * math.log2(d) for b in range(4, 11)])
    ys = np.array([epsilon_b_log2(lam, b) for b in range(4, 11)])
    slope = np.polyfit(xs, ys, 1)[0]
    assert slope == pytest.approx(1.0, rel=0.05)


def test_miso_landmarks():
    assert delta1_miso(2, 0).value == pytest.approx(0.5, rel=1e-12)
    assert delta1_miso(2, 3).value == pytest.approx(1.0 / 9.0, rel=1e-12)


def test_miso_decay_slope():
    ys = [math.log2(delta1_miso(4, b).value) for b in range(6, 15)]
    slope = np.polyfit(range(6, 15), ys, 1)[0]
    assert slope == pytest.approx(-1.0 / 3.0, rel=0.05)


def test_asympt_needs_three_antennas():
    with pytest.raises(UnsupportedModelError):
        delta1_asympt([2.0, 1.0], 8)


def test_asympt_rank_one_matches_miso_limit():
    # both routes share the same leading term for a rank-one spectrum
    for n in (3, 4):
        lam = [1.0] + [0.0] * (n - 1)
        ratio = delta1_miso(n, 14).value / delta1_asympt(lam, 14).value
        assert ratio == pytest.approx(1.0, abs=1e-3)


def test_asympt_is_the_limit_of_exact():
    ratio = delta1_exact([3.0, 2.0, 1.0], 12).value / delta1_asympt(
        [3.0, 2.0, 1.0], 12).value
    assert ratio == pytest.approx(1.0, abs=0.01)


def test_mc_flat_spectrum_is_zero():
    est = delta1_mc(diag_channel([2.0, 2.0, 2.0]), 2, 50,
                    RngStream(1).derive("flat"))
    # only normalization roundoff survives when every direction is equal
    assert abs(est.value) < 1e-14


def test_mc_matches_exact():
    est = delta1_mc(diag_channel([2.0, 1.0]), 1, 10 ** 4,
                    RngStream(1).derive("mc21"))
    assert abs(est.value - 1.0 / 6.0) <= 4 * est.stderr
    assert est.method == "monte-carlo"


def test_mc_rank_one_matches_miso():
    model = FixedSpectrumModel([1.0, 0.0, 0.0], frozen=True)
    ch = sample_channel(model, RngStream(2).derive("r1").generator())
    est = delta1_mc(ch, 2, 8000, RngStream(2).derive("mcr1"))
    assert abs(est.value - delta1_miso(3, 2).value) <= 4 * est.stderr


def test_mc_guards():
    with pytest.raises(ValueError):
        delta1_mc(diag_channel([2.0, 1.0]), 2, 1, RngStream(3))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 6))
def test_sandwich_random_spectra(seed, bits):
    rng = np.random.default_rng(seed)
    lam = np.sort(rng.uniform(0.2, 4.0, size=4))[::-1]
    if lam[0] - lam[1] < 1e-3 * lam[0]:
        return
    try:
        a = delta1_appx(lam, bits).value
        q = delta1_quadrature(lam, bits).value
    except DegenerateSpectrumError:
        return
    assert 0.0 <= q <= 1.0
    assert a <= q * (1.0 + 1e-9)
    eps = epsilon_b(lam, bits)
    if eps < 1.0:
        assert q <= a / (1.0 - eps) * (1.0 + 1e-9)
