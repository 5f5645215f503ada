from __future__ import annotations

import math
from fractions import Fraction

import mpmath
import pytest

from hybridtrace import ledger as L
from hybridtrace.forms import generators
from hybridtrace.qfield import FieldError, FieldSpec, Place, dedekind_zeta_minus1


def test_empty_ledger(q2):
    lg = L.build(q2, 1.01)
    assert len(lg) == 0
    assert L.Ledger.from_jsonl(lg.to_jsonl()).to_jsonl() == lg.to_jsonl()


def test_jsonl_round_trip(ledger2_60):
    text = ledger2_60.to_jsonl()
    back = L.Ledger.from_jsonl(text)
    assert back.to_jsonl() == text
    assert back.multiset() == ledger2_60.multiset()


def test_csv_columns(ledger2_60):
    lines = ledger2_60.to_csv().splitlines()
    assert lines[0] == "rho,length,theta,h,D,d"
    assert len(lines) == len(ledger2_60) + 1


def test_bad_file():
    with pytest.raises(FieldError):
        L.Ledger.from_jsonl('{"format": "something-else"}\n')


def test_restrict(ledger2_60):
    small = ledger2_60.restrict(20)
    assert all(e.rho <= 20 for e in small)
    assert len(small) == sum(1 for e in ledger2_60 if e.rho <= 20)
    with pytest.raises(FieldError):
        ledger2_60.restrict(100)


def test_build_is_prefix_consistent(q2, ledger2_60):
    assert L.build(q2, 20).multiset() == ledger2_60.restrict(20).multiset()


def test_entries(ledger2_60):
    for e in ledger2_60:
        assert 1 < e.rho <= 60
        assert mpmath.almosteq(e.length, mpmath.log(e.rho), 1e-14)
        assert 0 <= e.theta <= 2 * math.pi
        assert e.multiplicity == 2 * e.h and e.h >= 1
        assert mpmath.almosteq(e.unit.iota2 ** 2, e.rho, 1e-14)


def test_sorted_by_rho(ledger2_60):
    rhos = [float(e.rho) for e in ledger2_60]
    assert rhos == sorted(rhos)


@pytest.mark.parametrize("H", [6, 8])
def test_matrix_oracle_delta5(q5, H):
    lg = L.build(q5, 10)
    census = L.matrix_census(q5, 10, H=H)
    assert census.certified
    assert lg.multiset() == census.classes


def test_matrix_oracle_delta2_T60(q2, ledger2_60):
    census = L.matrix_census(q2, 60, H=8)
    assert ledger2_60.multiset() == census.classes
    assert sum(census.classes.values()) == 28


def test_pell_cap_too_small(q2):
    with pytest.raises(FieldError):
        L.build(q2, 60, pell_cap=2.0)


def test_powers(ledger2_60):
    e = ledger2_60.entries[0]
    pw = L.powers_up_to(e, 5 * float(e.length) + 1e-9)
    assert [p[0] for p in pw] == [1, 2, 3, 4, 5]
    for l, ell, z in pw:
        assert mpmath.almosteq(ell, l * e.length, 1e-14)
        assert mpmath.almosteq(L.power_eigenvalue(e, l), z, 1e-12)


def test_primitivity(q2):
    g = L.matrix_census(q2, 10, H=6).representatives[0]
    assert L.is_primitive(g)
    g2 = g @ g
    assert not L.is_primitive(g2)
    r = L.matrix_root(g2, 2)
    assert r is not None and (r @ r).psl_eq(g2)


# -- elliptic census ----------------------------------------------------------------------

@pytest.mark.parametrize("delta", [2, 3, 5, 13])
def test_elliptic_euler_characteristic(delta):
    """chi = 2 zeta_F(-1) + sum over elliptic classes of (1/M - 1) relation:
    the orbifold Euler characteristic of the Hilbert modular surface gives
    2 zeta_F(-1) + sum 1/M = 4 (with one cusp)."""
    spec = FieldSpec(delta)
    recs = L.enumerate_elliptic(spec)
    s = sum(Fraction(1, r["M"]) for r in recs)
    assert 2 * dedekind_zeta_minus1(spec) + s == 4
    assert all(r["certified"] for r in recs)


def test_elliptic_records(q2):
    for r in L.enumerate_elliptic(q2):
        assert r["M"] >= 2 and r["order"] is not None
        assert 0 <= r["theta1"] < 2 * math.pi and 0 <= r["theta2"] < 2 * math.pi
        # an element of order k rotates by a multiple of 2pi/k at both places
        for th in (r["theta1"], r["theta2"]):
            k = r["order"]
            assert abs(math.remainder(th * k, 2 * math.pi)) < 1e-9


def test_elliptic_census_closed_under_inversion(q2):
    recs = L.enumerate_elliptic(q2)
    pts = [(r["theta1"], r["theta2"]) for r in recs]

    def dist(x, y):
        return max(abs(math.remainder(x[0] - y[0], 2 * math.pi)), abs(math.remainder(x[1] - y[1], 2 * math.pi)))

    for a, b in pts:
        assert min(dist((-a, -b), p) for p in pts) < 1e-9


def test_rotation_angle_sign_invariant(q2):
    S = generators(q2)[0]
    for p in (Place.P1, Place.P2):
        assert math.isclose(L.rotation_angle(S, p), L.rotation_angle(-S, p))
        assert math.isclose(L.rotation_angle(S, p), math.pi)


def test_worker_count(monkeypatch):
    monkeypatch.setenv("HTL_THREADS", "1")
    assert L.worker_count() == 1
