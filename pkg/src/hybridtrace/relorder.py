"""Relative quadratic orders O_{D,d} over O_F and their Pell-type fundamental units.

A :class:`MixedDisc` carries a discriminant ``D`` that is negative at ``P1``
and positive at ``P2``.  Discriminants are kept primitive, i.e. the ideal
``(D)`` equals the primitive discriminant ``d``; a general form discriminant
``g^2 D`` is reduced to this representative by :func:`MixedDisc.from_discriminant`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import mpmath

from .qfield import (
    FieldError,
    FieldSpec,
    Place,
    QuadElem,
    canonical_associate,
    elements_in_box,
    sqrt_exact,
)

_DPS = 40


@dataclass(frozen=True)
class MixedDisc:
    D: QuadElem
    d_gen: QuadElem

    def __post_init__(self) -> None:
        if self.D.spec != self.d_gen.spec:
            raise FieldError("D and d_gen live in different fields")
        if not (self.D.sign(Place.P1) < 0 < self.D.sign(Place.P2)):
            raise FieldError(f"D={self.D} must be negative at P1 and positive at P2")
        if canonical_associate(self.d_gen) != self.d_gen:
            raise FieldError(f"d_gen={self.d_gen} is not the canonical ideal generator")
        q = self.D.exact_div(self.d_gen)
        if q is None or not q.is_unit():
            raise FieldError(f"(D) must equal the primitive discriminant ideal (d_gen); D={self.D}, d={self.d_gen}")

    @property
    def spec(self) -> FieldSpec:
        return self.D.spec

    @classmethod
    def from_D(cls, D: QuadElem) -> MixedDisc:
        return cls(D, canonical_associate(D))

    @classmethod
    def from_discriminant(cls, disc: QuadElem, divisor: QuadElem) -> MixedDisc:
        """Primitive representative of a form with discriminant ``disc`` and divisor ``divisor``."""
        D = disc.exact_div(divisor * divisor)
        if D is None:
            raise FieldError("divisor^2 does not divide the discriminant")
        return cls.from_D(D)

    def key(self) -> tuple:
        return (self.D.a, self.D.b, self.d_gen.a, self.d_gen.b)

    def to_json(self) -> dict:
        return {"D": self.D.to_json(), "d": self.d_gen.to_json()}

    @classmethod
    def from_json(cls, obj: dict, spec: FieldSpec) -> MixedDisc:
        return cls(QuadElem.from_json(obj["D"], spec), QuadElem.from_json(obj["d"], spec))


@dataclass(frozen=True)
class NotFoundBelowCap:
    cap: float

    def __bool__(self) -> bool:
        return False


def _unit_value(t: QuadElem, u: QuadElem, D: QuadElem, place: Place):
    """(iota(t) + iota(u) sqrt(iota(D)))/2 as an mpmath number (complex at a negative place)."""
    with mpmath.workdps(_DPS):
        dv = D.mpf(place)
        root = mpmath.sqrt(dv) if dv >= 0 else mpmath.mpc(0, mpmath.sqrt(-dv))
        return (t.mpf(place) + u.mpf(place) * root) / 2


@dataclass(frozen=True)
class PellUnit:
    t: QuadElem
    u: QuadElem
    parent: MixedDisc

    def __post_init__(self) -> None:
        D = self.parent.D
        if self.t * self.t - D * self.u * self.u != self.t.spec.integer(4):
            raise FieldError(f"t^2 - D u^2 != 4 for t={self.t}, u={self.u}, D={D}")

    @cached_property
    def iota2(self):
        return _unit_value(self.t, self.u, self.parent.D, Place.P2)

    @cached_property
    def iota1(self):
        return _unit_value(self.t, self.u, self.parent.D, Place.P1)

    @property
    def elliptic(self):
        return elliptic_eigenvalue(self)

    def to_json(self) -> dict:
        eig = elliptic_eigenvalue(self)
        arg = mpmath.arg(eig)
        return {
            "t": self.t.to_json(),
            "u": self.u.to_json(),
            "D": self.parent.D.to_json(),
            "d": self.parent.d_gen.to_json(),
            "iota2": mpmath.nstr(self.iota2, 20),
            "theta": mpmath.nstr(2 * arg, 20),
            "arg_eps": mpmath.nstr(arg, 20),
        }


def order_membership(t: QuadElem, u: QuadElem, md: MixedDisc) -> bool:
    """Is (t + u sqrt(D))/2 in O_{D,d}?"""
    D = md.D
    four = D.spec.integer(4)
    if not four.divides(t * t - D * u * u):
        return False
    return md.d_gen.divides(u * u * D)


def solve_pell(md: MixedDisc, cap: float) -> PellUnit | NotFoundBelowCap:
    """Fundamental solution of t^2 - D u^2 = 4 with 1 < iota_2(eps) <= cap.

    For eps = (t+u sqrt D)/2 with iota_2(eps) = E > 1 and |iota_1(eps)| = 1:
    iota_2(u) sqrt(iota_2 D) = E - 1/E <= cap and |iota_1(u)| sqrt(-iota_1 D) <= 2,
    so the box below contains every candidate u.
    """
    if cap <= 1:
        raise FieldError("cap must exceed 1")
    D = md.D
    spec = D.spec
    b1 = 2.0 / math.sqrt(-D.real(Place.P1))
    b2 = cap / math.sqrt(D.real(Place.P2))
    best = None
    for u in elements_in_box(spec, b1, b2):
        if u.sign(Place.P2) <= 0:
            continue
        t = sqrt_exact(D * u * u + spec.integer(4))
        if t is None:
            continue
        e = PellUnit(t, u, md)
        if e.iota2 > cap:
            continue
        if best is None or e.iota2 < best.iota2:
            best = e
    return best if best is not None else NotFoundBelowCap(cap)


def unit_power(e: PellUnit, l: int) -> tuple[QuadElem, QuadElem]:
    """Coefficients (t_l, u_l) of eps^l = (t_l + u_l sqrt D)/2."""
    if l < 1:
        raise FieldError("power must be >= 1")
    D = e.parent.D
    two = D.spec.integer(2)
    t, u = e.t, e.u
    tl, ul = t, u
    for _ in range(l - 1):
        tl, ul = (tl * t + D * ul * u).exact_div(two), (tl * u + ul * t).exact_div(two)
        assert tl is not None and ul is not None
    return tl, ul


def elliptic_eigenvalue(e: PellUnit, precision: int = 53):
    """iota_1(eps) on the unit circle, conjugated so that its argument lies in [0, pi]."""
    with mpmath.workprec(max(precision, 53) + 20):
        z = _unit_value(e.t, e.u, e.parent.D, Place.P1)
        z = mpmath.mpc(z)
        if z.imag < 0:
            z = mpmath.conj(z)
        return z


def pell_scan(md: MixedDisc, cap: float) -> PellUnit | NotFoundBelowCap:
    """Exhaustive scan over traces: the minimal eps with 1 < iota_2(eps) <= cap.

    Independent of :func:`solve_pell`: it runs over t (2 < iota_2 t <= cap + 1/cap,
    |iota_1 t| <= 2) and recovers u from u^2 = (t^2 - 4)/D.
    """
    if cap <= 1:
        raise FieldError("cap must exceed 1")
    D = md.D
    spec = D.spec
    four = spec.integer(4)
    best = None
    for t in elements_in_box(spec, 2.0, cap + 1.0 / cap):
        if t.real(Place.P2) <= 2:
            continue
        u2 = (t * t - four).exact_div(D)
        if u2 is None:
            continue
        u = sqrt_exact(u2)
        if u is None or u.is_zero():
            continue
        if u.sign(Place.P2) < 0:
            u = -u
        e = PellUnit(t, u, md)
        if 1 < e.iota2 <= cap and (best is None or e.iota2 < best.iota2):
            best = e
    return best if best is not None else NotFoundBelowCap(cap)


def mixed_discs(spec: FieldSpec, height: int) -> list[MixedDisc]:
    """Every D in O_F with basis coordinates of absolute value <= height that is
    negative at P1 and positive at P2."""
    out = []
    for p in range(-height, height + 1):
        for q in range(-height, height + 1):
            D = spec.elem(2 * p + q, q) if spec.ring_shift else spec.elem(p, q)
            if D.sign(Place.P1) < 0 < D.sign(Place.P2):
                out.append(MixedDisc.from_D(D))
    return out
