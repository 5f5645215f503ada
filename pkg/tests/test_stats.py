from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import integrate

from hybridtrace import stats as S


def test_li_against_quadrature():
    for T in (3.0, 50.0, 1000.0):
        ref, _ = integrate.quad(lambda t: 1 / math.log(t), 2, T)
        assert math.isclose(S.li(T), ref, rel_tol=1e-10)
    with pytest.raises(S.StatsError):
        S.li(1.5)


def test_mu_is_probability_with_known_moments():
    assert abs(S.mu_integral(lambda t: np.ones_like(t)) - 1) < 1e-12
    # sin^2(t/2) = (1 - cos t)/2, so mu(cos) = -1/2 and mu(cos 2t) = 0
    assert abs(S.mu_integral(np.cos) + 0.5) < 1e-12
    assert abs(S.mu_integral(lambda t: np.cos(2 * t))) < 1e-12


def test_mu_arc_additive():
    assert math.isclose(S.mu_arc(0, 2 * math.pi), 1.0)
    assert math.isclose(S.mu_arc(0, 1.0) + S.mu_arc(1.0, 4.0), S.mu_arc(0, 4.0))
    ref, _ = integrate.quad(S.mu_density, 0.5, 2.5)
    assert math.isclose(S.mu_arc(0.5, 2.5), ref, rel_tol=1e-12)


def test_H_errors():
    with pytest.raises(S.StatsError):
        S.H(1.0, 0)
    with pytest.raises(S.StatsError):
        S.H(np.array([0.0, 1.0]), 1)
    with pytest.raises(S.StatsError):
        S.sign_sum_residual(1.0, 0)


@pytest.mark.parametrize("m", [1, 2, 5])
def test_H_norm(m):
    for k in (m, -m):
        v = S.mu_integral(lambda t: np.abs(S.H(t, k)) ** 2)
        assert abs(v - S.H_NORM_SQ) < 1e-10


def test_weyl_profile_reconstructs_trig_polynomial():
    f = lambda t: 1 + np.cos(t) - 0.5 * np.sin(3 * t)  # noqa: E731
    prof = S.weyl_profile(f, 6)
    assert prof.reconstruction_error < 1e-10
    assert abs(prof.mu() - S.mu_integral(f)) < 1e-12
    th = np.linspace(0.2, 6.0, 11)
    assert np.allclose(prof.reconstruct(th), f(th))
    with pytest.raises(S.StatsError):
        S.weyl_profile(f, 0)


def test_count_and_units_bookkeeping(ledger2_60):
    for T in (10.0, 30.0, 60.0):
        c = S.count_vs_li(ledger2_60, T)
        u = S.units_sum(ledger2_60, lambda t: np.ones_like(t), math.sqrt(T))
        assert 2 * u.S == c.N
    assert S.count_vs_li(ledger2_60, 60.0).N == 28


def test_odd_sums_vanish(ledger2_60):
    assert S.weighted_sum_vs_li(ledger2_60, np.sin, 60.0).S == 0.0
    g = S.smoothed_geodesic_sum(ledger2_60, np.sin, math.log(60.0))
    assert g.S == 0.0


def test_weighted_sum_of_one_is_count(ledger2_60):
    w = S.weighted_sum_vs_li(ledger2_60, lambda t: np.ones_like(t), 60.0)
    assert w.S == S.count_vs_li(ledger2_60, 60.0).N


def test_arcs(ledger2_60):
    reps = S.arc_test(ledger2_60, [(0, 1), (0, 0.5), (0.5, 1), (0.75, 0.25)], 60.0)
    assert reps[0].empirical == 1.0 and math.isclose(reps[0].mu, 1.0)
    # angles come in +- pairs, so the two half circles are equally populated
    assert math.isclose(reps[1].empirical, reps[2].empirical)
    assert math.isclose(reps[3].mu, 1 - S.mu_arc(math.pi / 2, 3 * math.pi / 2))
    with pytest.raises(S.StatsError):
        S.arc_test(ledger2_60, [(0, 1.5)], 60.0)


def test_cutoff_and_parity_errors(ledger2_60):
    with pytest.raises(S.StatsError):
        S.count_vs_li(ledger2_60, 100.0)
    with pytest.raises(S.StatsError):
        S.units_sum(ledger2_60, np.sin, 5.0)
    with pytest.raises(S.StatsError):
        S.smoothed_geodesic_sum(ledger2_60, np.cos, 0.0)
