from __future__ import annotations

import cmath
import math

import numpy as np
import pytest

from hybridtrace import ledger as L
from hybridtrace import traceform as TF
from hybridtrace.qfield import cusp_regulator, hilbert_volume
from hybridtrace.stats import H
from hybridtrace.transforms import TestFunction, h_tilde


def cfg(ledger, m=2, a=3.0, **kw):
    kw.setdefault("vol", hilbert_volume(ledger.spec))
    kw.setdefault("regulators", [cusp_regulator(ledger.spec)])
    return TF.TraceConfig(m, ledger=ledger, tf=TestFunction("bump", a), **kw)


@pytest.fixture(scope="module")
def empty(q2):
    return L.build(q2, 1.01)


def test_config_validation(ledger2_60):
    with pytest.raises(TF.TraceError):
        cfg(ledger2_60, m=0)
    with pytest.raises(TF.TraceError):
        cfg(ledger2_60, vol=-1.0)
    with pytest.raises(TF.TraceError):
        cfg(ledger2_60, regulators=[])


def test_identity_term_scaling(ledger2_60):
    base = TF.identity_term(cfg(ledger2_60, m=1)).value
    assert math.isclose(TF.identity_term(cfg(ledger2_60, m=2)).value, 3 * base, rel_tol=1e-12)
    vol = hilbert_volume(ledger2_60.spec)
    assert math.isclose(TF.identity_term(cfg(ledger2_60, m=1, vol=2 * vol)).value, 2 * base, rel_tol=1e-12)


def test_character_sum():
    th = 0.7
    assert abs(TF.character_sum(th, 1) - 1) < 1e-15
    assert abs(TF.character_sum(th, 3) - (1 + 2 * math.cos(th) + 2 * math.cos(2 * th))) < 1e-14
    assert abs(TF.character_sum(th, 2, 3) - (1 + 2 * math.cos(3 * th))) < 1e-14


def test_eh_sum_synthetic_class():
    tf = TestFunction("bump", 2.5)
    th = 1.1
    got = TF.eh_sum([(1.0, th, 1)], tf, 2).value
    hh = lambda x: float(tf.hhat(np.array([x]))[0])  # noqa: E731
    want = -(hh(1.0) / (2 * math.sinh(0.5)) * (1 + 2 * math.cos(th)) + hh(2.0) / (2 * math.sinh(1.0)) * (1 + 2 * math.cos(2 * th)))
    assert math.isclose(got, want, rel_tol=1e-13)
    assert TF.eh_sum([(3.0, th, 1)], tf, 2).value == 0.0


def test_eh_term_empty_and_short_ledger(empty, ledger2_60):
    assert TF.eh_term(cfg(empty, a=math.log(1.01) * 0.9)).value == 0.0
    with pytest.raises(TF.TraceError, match="rebuild"):
        TF.eh_term(cfg(ledger2_60, a=5.0))


def test_cusp_term_strict_boundary(ledger2_60):
    R = 0.8814
    tf_a = 2.0
    c = cfg(ledger2_60, m=1, a=tf_a, regulators=[R])
    hh = lambda x: float(c.tf.hhat(np.array([x]))[0])  # noqa: E731
    # 2R < a contributes, 4R > a does not
    want = -R * (hh(0.0) + 2 * hh(2 * R) * math.exp(-2 * R * 0.5))
    assert math.isclose(TF.cusp_term(c).value, want, rel_tol=1e-14)
    # 2lR = a exactly is excluded
    c2 = cfg(ledger2_60, m=1, a=2.0, regulators=[1.0])
    assert TF.cusp_term(c2).value == -1.0 * hh(0.0)


def test_elliptic_term(q2, ledger2_60):
    census = L.enumerate_elliptic(q2)
    assert TF.elliptic_term(cfg(ledger2_60, elliptic=census, torsion_free=True)) is None
    assert TF.elliptic_term(cfg(ledger2_60)).value == 0.0
    tf = TestFunction("bump", 3.0)
    want = sum(
        h_tilde(tf, r["theta2"], 0) / (r["M"] * math.sin(0.5 * r["theta2"])) * complex(H(r["theta1"], 2)) for r in census
    )
    got = TF.elliptic_term(cfg(ledger2_60, elliptic=census))
    assert abs(got.value - want.real) < 1e-12 and got.error < 1e-8


def test_elliptic_sum_needs_inverse_closure():
    rec = {"theta1": 2 * math.pi / 3, "theta2": 2 * math.pi / 3, "M": 3}
    with pytest.raises(TF.TraceError):
        TF.elliptic_sum([rec], TestFunction("bump", 2.0), 2)


def test_estimate_is_linear_in_test_function(q2, ledger2_60):
    census = L.enumerate_elliptic(q2)
    c = cfg(ledger2_60, elliptic=census)
    r1 = TF.spectral_estimate(c)
    c.tf = c.tf.scaled(3.0)
    r3 = TF.spectral_estimate(c)
    assert math.isclose(r3.spectral_estimate, 3 * r1.spectral_estimate, rel_tol=1e-10)
    js = r1.to_json()
    assert js["config"]["m"] == 2 and "elliptic census" in js["truncation_note"]


def test_torsion_free_note(ledger2_60):
    rep = TF.spectral_estimate(cfg(ledger2_60, torsion_free=True))
    assert rep.elliptic_term is None and "torsion-free" in rep.truncation_note


@pytest.mark.parametrize("m", [1, 2, 3, 7, 12, 13])
def test_modular_identity(m):
    assert TF.modular_consistency(m) == -0.5


def test_modular_cusp_dims():
    assert [TF.modular_cusp_dim(m) for m in range(1, 9)] == [0, 0, 0, 0, 0, 1, 0, 1]
    with pytest.raises(TF.TraceError):
        TF.modular_consistency(0)


def test_zeta_conjugate_symmetry(ledger2_60):
    for s in (1.5 + 2j, 2.2 - 0.3j):
        for fn in (TF.zeta_truncated, TF.zeta_log_derivative):
            a, b = fn(s, 2, ledger2_60).value, fn(s.conjugate(), 2, ledger2_60).value
            assert abs(a - b.conjugate()) < 1e-12 * max(1.0, abs(a))


def test_zeta_empty_ledger(empty):
    assert TF.zeta_truncated(2.0, 2, empty).value == 1
    assert TF.zeta_log_derivative(2.0, 2, empty).value == 0


def test_zeta_domain(ledger2_60):
    for fn in (TF.zeta_truncated, TF.zeta_log_derivative):
        with pytest.raises(TF.ZetaDomainError):
            fn(1.0 + 3j, 1, ledger2_60)
        with pytest.raises(TF.TraceError):
            fn(2.0, 0, ledger2_60)


def test_zeta_tail_bound_controls_truncation(ledger2_60):
    s = 1.5 + 1j
    coarse = TF.zeta_log_derivative(s, 2, ledger2_60, tail_eps=1e-4)
    fine = TF.zeta_log_derivative(s, 2, ledger2_60)
    assert abs(coarse.value - fine.value) <= coarse.tail_bound
    assert fine.terms > coarse.terms
    lz = cmath.log(TF.zeta_truncated(s, 2, ledger2_60).value)
    assert math.isfinite(lz.real)
