"""Tests for skewed codebooks: losses, bounds, diagnostics, and the search."""

import math

import numpy as np
import pytest
from scipy.linalg import fractional_matrix_power

from helpers import diag_channel, random_channel, random_full_rank
from rvqlab.channel import FixedSpectrumModel, sample_channel
from rvqlab.errors import (DegenerateSpectrumError, SingularCovarianceError,
                           SingularSkewError, UnsupportedModelError)
from rvqlab.linalg import hermitian_eig
from rvqlab.loss import delta1_exact, delta1_mc
from rvqlab.rng import RngStream, sample_unitary
from rvqlab.skew import (SkewMatrix, build_skew_a2, delta1_sk_asympt,
                         delta1_sk_exact2, delta1_sk_mc, delta1_sk_partial3,
                         delta1_sk_upper2, dsk_factor, effective_spectra,
                         optimize_skew_a1, pencil_eigs_2, reverse_cs_check,
                         sample_quotients, skew_diagnostics)


def _gen(name):
    return RngStream(20240801).derive(name).generator()


# ---------------------------------------------------------------------------
# construction


def test_skew_matrix_spectra():
    sk = SkewMatrix(np.diag([2.0, 1.0]))
    np.testing.assert_allclose(sk.eig_ata, [4.0, 1.0], atol=1e-12)
    np.testing.assert_allclose(sk.eig_aat, [4.0, 1.0], atol=1e-12)
    assert sk.n_t == 2


def test_skew_matrix_rejects_nonsquare():
    with pytest.raises(ValueError):
        SkewMatrix(np.ones((2, 3)))


def test_skew_matrix_rejects_singular():
    with pytest.raises(SingularSkewError):
        SkewMatrix(np.diag([1.0, 1.0, 0.0]))


# ---------------------------------------------------------------------------
# effective spectra and quotients


def test_effective_spectra_identity():
    ch = diag_channel([3.0, 2.0, 1.0])
    mu, ata, aat = effective_spectra(ch, SkewMatrix(np.eye(3)))
    np.testing.assert_allclose(mu, [3.0, 2.0, 1.0], atol=1e-12)
    np.testing.assert_allclose(ata, np.ones(3), atol=1e-12)
    np.testing.assert_allclose(aat, np.ones(3), atol=1e-12)


def test_effective_spectra_scale():
    gen = _gen("scale")
    ch = random_channel(gen, 3, 3)
    a = random_full_rank(gen, 3)
    mu1, ata1, _ = effective_spectra(ch, SkewMatrix(a))
    mu2, ata2, _ = effective_spectra(ch, SkewMatrix(3.0 * a))
    np.testing.assert_allclose(mu2, 9.0 * mu1, rtol=1e-12)
    np.testing.assert_allclose(ata2, 9.0 * ata1, rtol=1e-12)


def test_effective_top_is_submultiplicative():
    gen = _gen("subm")
    for _ in range(30):
        ch = random_channel(gen, 3, 3)
        sk = SkewMatrix(random_full_rank(gen, 3))
        mu, ata, _ = effective_spectra(ch, sk)
        assert mu[0] <= ata[0] * ch.spectrum[0] * (1 + 1e-12)


def test_quotients_of_identity_stay_in_support():
    ch = random_channel(_gen("quot"), 4, 4)
    q = sample_quotients(ch, SkewMatrix(np.eye(4)), 3000,
                         RngStream(1).derive("q"))
    assert q.min() >= ch.spectrum[-1] - 1e-9
    assert q.max() <= ch.spectrum[0] + 1e-9


def test_quotient_moments_grow_with_order():
    # power-mean chain of the empirical measure, feeding the tail bound
    ch = random_channel(_gen("lyap"), 4, 4)
    sk = SkewMatrix(random_full_rank(_gen("lyapa"), 4))
    q = sample_quotients(ch, sk, 10 ** 5, RngStream(2).derive("ly"))
    qn = q / q.max()
    gk = np.array([np.mean(qn ** k) ** (1.0 / k) for k in range(1, 7)])
    assert np.all(np.diff(gk) > -1e-12)


# ---------------------------------------------------------------------------
# two-antenna pencil machinery


def test_pencil_interior_point():
    ch = diag_channel([2.0, 1.0])
    eigs = pencil_eigs_2(ch, SkewMatrix(np.eye(2)), 1.5)
    assert eigs.gamma1 == pytest.approx(0.5, abs=1e-12)
    assert eigs.gamma2 == pytest.approx(-0.5, abs=1e-12)


def test_pencil_endpoints_degenerate():
    ch = diag_channel([2.0, 1.0])
    sk = SkewMatrix(np.eye(2))
    assert pencil_eigs_2(ch, sk, 2.0).gamma1 == pytest.approx(0.0, abs=1e-12)
    assert pencil_eigs_2(ch, sk, 1.0).gamma2 == pytest.approx(0.0, abs=1e-12)


def test_pencil_guards():
    ch = diag_channel([2.0, 1.0])
    sk = SkewMatrix(np.eye(2))
    with pytest.raises(ValueError):
        pencil_eigs_2(ch, sk, 2.5)
    with pytest.raises(UnsupportedModelError):
        pencil_eigs_2(diag_channel([3.0, 2.0, 1.0]), SkewMatrix(np.eye(3)), 2.5)


def test_exact2_identity_matches_plain_loss():
    ch = diag_channel([2.0, 1.0])
    for bits in (0, 1, 3):
        got = delta1_sk_exact2(ch, SkewMatrix(np.eye(2)), bits).value
        want = delta1_exact([2.0, 1.0], bits).value
        assert got == pytest.approx(want, abs=1e-9)


def test_exact2_unitary_skew_matches_plain_loss():
    ch = diag_channel([2.0, 1.0])
    for i in range(20):
        u = sample_unitary(2, _gen(f"u{i}"))
        got = delta1_sk_exact2(ch, SkewMatrix(u), 2).value
        assert got == pytest.approx(delta1_exact([2.0, 1.0], 2).value, abs=1e-9)


def test_exact2_agrees_with_monte_carlo():
    ch = random_channel(_gen("x2"), 2, 2)
    sk = SkewMatrix(random_full_rank(_gen("a2"), 2))
    exact = delta1_sk_exact2(ch, sk, 2).value
    est = delta1_sk_mc(ch, sk, 2, 4000, RngStream(3).derive("mc"))
    assert abs(est.value - exact) <= 4 * est.stderr


def test_upper2_identity_closed_form():
    lam = [2.0, 1.0]
    ch = diag_channel(lam)
    for bits in (0, 1, 2, 4):
        m = 2 ** bits
        want = (1.0 - lam[1] / lam[0]) / (m + 1.0)
        assert delta1_sk_upper2(ch, SkewMatrix(np.eye(2)), bits).value == \
            pytest.approx(want, abs=1e-12)


def test_upper2_dominates_exact2():
    gen = _gen("dom")
    for _ in range(30):
        ch = random_channel(gen, 2, 2)
        sk = SkewMatrix(random_full_rank(gen, 2))
        ub = delta1_sk_upper2(ch, sk, 3).value
        ex = delta1_sk_exact2(ch, sk, 3).value
        assert ub >= ex - 1e-12


def test_upper2_scale_invariant_in_skew():
    ch = random_channel(_gen("sc"), 2, 2)
    a = random_full_rank(_gen("sca"), 2)
    v1 = delta1_sk_upper2(ch, SkewMatrix(a), 3).value
    v2 = delta1_sk_upper2(ch, SkewMatrix(5.0 * a), 3).value
    assert v2 == pytest.approx(v1, rel=1e-10)


# ---------------------------------------------------------------------------
# Monte Carlo loss


def test_sk_mc_unitary_matches_raw_codebook():
    ch = random_channel(_gen("mcun"), 3, 3)
    u = sample_unitary(3, _gen("mcu"))
    raw = delta1_mc(ch, 2, 4000, RngStream(4).derive("r"))
    sk = delta1_sk_mc(ch, SkewMatrix(u), 2, 4000, RngStream(4).derive("s"))
    assert abs(raw.value - sk.value) <= 4 * math.hypot(raw.stderr, sk.stderr)


def test_sk_mc_near_projector_kills_the_loss():
    ch = random_channel(_gen("proj"), 4, 4)
    u = ch.u_dominant
    a = np.outer(u, u.conj()) + 1e-3 * (np.eye(4) - np.outer(u, u.conj()))
    est = delta1_sk_mc(ch, SkewMatrix(a), 2, 400, RngStream(5).derive("p"))
    assert 0 <= est.value < 1e-4


def test_sk_mc_guards():
    ch = diag_channel([2.0, 1.0])
    sk = SkewMatrix(np.eye(2))
    with pytest.raises(ValueError):
        delta1_sk_mc(ch, sk, -1, 10, RngStream(6))
    with pytest.raises(ValueError):
        delta1_sk_mc(ch, sk, 2, 1, RngStream(6))
    with pytest.raises(ValueError):
        delta1_sk_mc(ch, SkewMatrix(np.eye(3)), 2, 10, RngStream(6))


# ---------------------------------------------------------------------------
# decay base and bound trends


def test_dsk_identity_values():
    assert dsk_factor(diag_channel([4.0, 3.0, 2.0, 1.0]),
                      SkewMatrix(np.eye(4))) == pytest.approx(-3.5, rel=1e-12)
    assert dsk_factor(diag_channel([4.0, 1.0, 1.0, 1.0]),
                      SkewMatrix(np.eye(4))) == pytest.approx(0.0, abs=1e-12)


def test_dsk_stays_below_one():
    gen = _gen("dsk")
    for _ in range(30):
        ch = random_channel(gen, 4, 4)
        assert dsk_factor(ch, SkewMatrix(random_full_rank(gen, 4))) < 1.0


def test_dsk_needs_three_antennas():
    with pytest.raises(UnsupportedModelError):
        dsk_factor(diag_channel([2.0, 1.0]), SkewMatrix(np.eye(2)))


def test_sk_asympt_flat_tail_identity():
    ch = diag_channel([4.0, 1.0, 1.0, 1.0])
    for bits in (4, 10):
        want = math.gamma(1 / 3) * 2.0 ** (-bits / 3) / 3.0 * 0.75
        got = delta1_sk_asympt(ch, SkewMatrix(np.eye(4)), bits).value
        assert got == pytest.approx(want, rel=1e-12)


def test_sk_asympt_scale_invariant_in_skew():
    ch = random_channel(_gen("asc"), 4, 4)
    a = random_full_rank(_gen("asca"), 4)
    v1 = delta1_sk_asympt(ch, SkewMatrix(a), 8).value
    v2 = delta1_sk_asympt(ch, SkewMatrix(0.2 * a), 8).value
    assert v2 == pytest.approx(v1, rel=1e-10)


def test_sk_asympt_tracks_monte_carlo_at_depth():
    ch = diag_channel([4.0, 1.0, 1.0, 1.0])
    sk = SkewMatrix(np.eye(4))
    asy = delta1_sk_asympt(ch, sk, 10).value
    est = delta1_sk_mc(ch, sk, 10, 300, RngStream(7).derive("deep"))
    assert asy >= est.value - 4 * est.stderr


def test_sk_asympt_refuses_small_arrays():
    with pytest.raises(UnsupportedModelError, match="delta1_sk_partial3"):
        delta1_sk_asympt(diag_channel([3.0, 2.0, 1.0]), SkewMatrix(np.eye(3)), 8)
    with pytest.raises(UnsupportedModelError):
        delta1_sk_asympt(diag_channel([2.0, 1.0]), SkewMatrix(np.eye(2)), 8)


def test_partial3_value_and_warning():
    est = delta1_sk_partial3(diag_channel([3.0, 2.0, 1.0]),
                             SkewMatrix(np.eye(3)), 4)
    want = 0.25 * (1.0 + 0.75 * math.sqrt(math.pi)) / 3.0
    assert est.value == pytest.approx(want, rel=1e-12)
    assert "partial bound" in est.warning
    with pytest.raises(UnsupportedModelError):
        delta1_sk_partial3(diag_channel([2.0, 1.0]), SkewMatrix(np.eye(2)), 4)


# ---------------------------------------------------------------------------
# diagnostics


def test_diagnostics_aligned_skew():
    gen = _gen("align")
    ch = random_channel(gen, 4, 4)
    eig = hermitian_eig(ch.gram)
    w = sample_unitary(4, gen)
    sk = SkewMatrix(eig.vectors @ np.diag([2.0, 1.5, 1.2, 0.7]) @ w.conj().T)
    d = skew_diagnostics(ch, sk, 0.5)
    assert abs(d.m1) < 1e-12
    want_m2 = (ch.spectrum[0] / ch.spectrum[-1]) * (2.0 / 0.7) ** 2
    assert d.m2 == pytest.approx(want_m2, rel=1e-10)
    assert d.l6 == pytest.approx(0.5 * d.m1 + 0.5 * d.m2, rel=1e-12)


def test_diagnostics_inverse_root_skew():
    ch = random_channel(_gen("inv"), 4, 4)
    sk = SkewMatrix(fractional_matrix_power(ch.gram, -0.5))
    d = skew_diagnostics(ch, sk, 1.0)
    assert d.m1 == pytest.approx(1.0 - ch.spectrum[-1] / ch.spectrum[0],
                                 rel=1e-9)
    assert d.m2 == pytest.approx(1.0, abs=1e-10)
    assert d.l6 == pytest.approx(d.m1, rel=1e-12)


def test_diagnostics_alpha_endpoints():
    ch = random_channel(_gen("ends"), 3, 3)
    sk = SkewMatrix(random_full_rank(_gen("endsa"), 3))
    d1 = skew_diagnostics(ch, sk, 1.0)
    d0 = skew_diagnostics(ch, sk, 0.0)
    assert d1.l6 == pytest.approx(d1.m1, rel=1e-12)
    assert d0.l6 == pytest.approx(d0.m2, rel=1e-12)
    with pytest.raises(ValueError):
        skew_diagnostics(ch, sk, 1.5)


# ---------------------------------------------------------------------------
# statistics-based construction


def test_build_a2_power_one_is_covariance():
    sigma = np.diag([6.4, 4.8, 3.2, 1.6])
    sk = build_skew_a2(sigma, 1.0, 1.0)
    np.testing.assert_allclose(sk.a, sigma, atol=1e-12)


def test_build_a2_half_power_is_square_root():
    sigma = np.diag([4.0, 1.0])
    sk = build_skew_a2(sigma, 1.0, 0.5)
    np.testing.assert_allclose(sk.a @ sk.a, sigma, atol=1e-12)


def test_build_a2_power_zero_is_identity():
    sk = build_skew_a2(np.diag([4.0, 1.0]), 1.0, 0.0)
    np.testing.assert_allclose(sk.a, np.eye(2), atol=1e-12)


def test_build_a2_whitener():
    gen = _gen("whit")
    z = gen.standard_normal((3, 3)) + 1j * gen.standard_normal((3, 3))
    sigma = z @ z.conj().T + 0.5 * np.eye(3)
    sk = build_skew_a2(sigma, 0.0, 1.0)
    np.testing.assert_allclose(sk.a @ sk.a @ sigma, np.eye(3), atol=1e-9)


def test_build_a2_guards():
    with pytest.raises(SingularCovarianceError):
        build_skew_a2(np.diag([1.0, 0.0]), 1.0, 1.0)
    with pytest.raises(ValueError):
        build_skew_a2(np.eye(2), 1.5, 1.0)
    with pytest.raises(ValueError):
        build_skew_a2(np.eye(2), 0.5, -1.0)


# ---------------------------------------------------------------------------
# moment tail bound


def test_reverse_cs_uniform_grid():
    s = (np.arange(4000) + 0.5) / 4000
    bound, emp = reverse_cs_check(s, 1, 0.25)
    assert bound == pytest.approx(0.1875, abs=1e-6)
    assert emp == pytest.approx(0.75)


def test_reverse_cs_constant_samples():
    bound, emp = reverse_cs_check(np.full(100, 2.0), 2, 1.0)
    assert bound == pytest.approx(9.0 / 16.0, rel=1e-12)
    assert emp == 1.0


def test_reverse_cs_really_lower_bounds_quotient_tail():
    ch = random_channel(_gen("tail"), 2, 2)
    sk = SkewMatrix(random_full_rank(_gen("taila"), 2))
    q = sample_quotients(ch, sk, 10 ** 4, RngStream(8).derive("t"))
    qn = q / q.max()
    bound, emp = reverse_cs_check(qn, 2, 0.3)
    assert bound <= emp + 1e-12


def test_reverse_cs_guards():
    with pytest.raises(ValueError):
        reverse_cs_check((np.arange(100) + 0.5) / 100, 1, 0.9)
    with pytest.raises(ValueError):
        reverse_cs_check(np.array([-1.0, 0.5]), 1, 0.1)
    with pytest.raises(ValueError):
        reverse_cs_check(np.array([]), 1, 0.1)
    with pytest.raises(ValueError):
        reverse_cs_check(np.array([0.5]), 0, 0.1)


# ---------------------------------------------------------------------------
# direct search


def test_search_alignment_objective_reaches_zero():
    model = FixedSpectrumModel([4.0, 3.0, 2.0, 1.0], frozen=True)
    res = optimize_skew_a1(model, 1.0, 4, RngStream(9).derive("a1"), 250)
    assert abs(res.objective) <= 1e-3
    assert isinstance(res.skew, SkewMatrix)
    assert res.skew.n_t == 4
    assert res.n_evals >= 1


def test_search_conditioning_objective_reaches_one():
    model = FixedSpectrumModel([4.0, 3.0, 2.0, 1.0], frozen=True)
    res = optimize_skew_a1(model, 0.0, 4, RngStream(9).derive("a0"), 250)
    assert res.objective >= 1.0 - 1e-9
    assert res.objective == pytest.approx(1.0, rel=5e-2)
    # never worse than not skewing at all, measured on the same draws
    gen = RngStream(9).derive("a0").derive("channels").generator()
    conds = [0.0] * 4
    for i in range(4):
        ch = sample_channel(model, gen)
        conds[i] = ch.spectrum[0] / ch.spectrum[-1]
    assert res.objective <= np.mean(conds) + 1e-9


def test_search_guards():
    model = FixedSpectrumModel([2.0, 1.0], frozen=True)
    with pytest.raises(ValueError):
        optimize_skew_a1(model, 2.0, 2, RngStream(10), 50)
    with pytest.raises(ValueError):
        optimize_skew_a1(model, 0.5, 2, RngStream(10), 0)
    with pytest.raises(ValueError):
        optimize_skew_a1(model, 0.5, 0, RngStream(10), 50)
