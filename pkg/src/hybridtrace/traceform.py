"""Geometric side of the weight-m hybrid trace formula over a real quadratic field,
the exact PSL_2(Z) consistency identity, and truncated partial zeta functions.

Angles follow the ledger convention: a stored pair carries theta = 2 arg(eps_gamma),
so eps_gamma^{2k} = e^{ik theta}, and each pair counts 2h conjugacy classes.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .ledger import Ledger
from .stats import H
from .transforms import TestFunction, h_tilde, orbital_identity

_ROUND = 1e-15


class TraceError(ValueError):
    pass


class ZetaDomainError(TraceError):
    pass


@dataclass(frozen=True)
class Term:
    value: float
    error: float

    def to_json(self) -> dict:
        return {"value": self.value, "error": self.error}


@dataclass
class TraceConfig:
    m: int
    vol: float
    regulators: Sequence[float]
    ledger: Ledger
    tf: TestFunction
    elliptic: list[dict] | None = None
    torsion_free: bool = False

    def __post_init__(self) -> None:
        if not isinstance(self.m, int) or self.m < 1:
            raise TraceError(f"weight m must be a positive integer, got {self.m!r}")
        if not self.vol > 0:
            raise TraceError("vol must be positive")
        if not self.regulators or any(not r > 0 for r in self.regulators):
            raise TraceError("regulators must be a nonempty list of positive reals")

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "vol": self.vol,
            "regulators": list(self.regulators),
            "tf": self.tf.to_json(),
            "ledger": {"delta": self.ledger.spec.delta, "T": self.ledger.T, "entries": len(self.ledger)},
            "elliptic_classes": None if self.elliptic is None else len(self.elliptic),
            "torsion_free": self.torsion_free,
        }


@dataclass
class TraceReport:
    identity_term: Term
    eh_term: Term
    elliptic_term: Term | None
    cusp_term: Term
    spectral_estimate: float
    error_budget: float
    truncation_note: str
    warnings: list[str] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "config": self.config,
            "identity_term": self.identity_term.to_json(),
            "eh_term": self.eh_term.to_json(),
            "elliptic_term": None if self.elliptic_term is None else self.elliptic_term.to_json(),
            "cusp_term": self.cusp_term.to_json(),
            "spectral_estimate": self.spectral_estimate,
            "error_budget": self.error_budget,
            "truncation_note": self.truncation_note,
            "warnings": list(self.warnings),
        }


# -- terms ------------------------------------------------------------------------------------

def identity_term(cfg: TraceConfig) -> Term:
    """(2m-1) vol/(4pi)^2 int_R h(r) r tanh(pi r) dr."""
    val, tail = orbital_identity(cfg.tf)
    c = (2 * cfg.m - 1) * cfg.vol / (4 * math.pi)
    return Term(c * val, abs(c) * tail + _ROUND * abs(c * val))


def character_sum(theta: float, m: int, l: int = 1) -> complex:
    """sum_{|k|<m} e^{ikl theta}."""
    return sum(cmath.exp(1j * k * l * theta) for k in range(-(m - 1), m))


def eh_sum(classes: Iterable[tuple[float, float, int]], tf: TestFunction, m: int) -> Term:
    """-sum over pairs (length, theta, h) of h sum_l length hhat(l length)/(2 sinh(l length/2)) chi_m(l theta).

    Each pair stands for 2h classes, which cancels the overall 1/2.
    """
    total = 0j
    scale = 0.0
    for ell, theta, h in classes:
        l = 1
        while l * ell < tf.a:
            x = l * ell
            w = ell * float(tf.hhat(np.array([x]))[0]) / (2 * math.sinh(0.5 * x))
            c = h * w * character_sum(theta, m, l)
            total += c
            scale += abs(c)
            l += 1
    if abs(total.imag) > 1e-9 * max(scale, 1.0):
        raise TraceError(f"hyperbolic character sum has imaginary part {total.imag}")
    return Term(-total.real, _ROUND * (scale + 1.0) * 10)


def eh_term(cfg: TraceConfig) -> Term:
    need = math.exp(cfg.tf.a)
    if cfg.ledger.T < need * (1 - 1e-12):
        raise TraceError(
            f"ledger built to T={cfg.ledger.T} but the test function needs every class with rho < e^a = {need:.6g}; "
            f"rebuild the ledger with T >= {need:.6g}"
        )
    return eh_sum(((float(e.length), float(e.theta), e.h) for e in cfg.ledger), cfg.tf, cfg.m)


def elliptic_sum(census: Iterable[dict], tf: TestFunction, m: int) -> Term:
    """sum over classes of h~(theta_2, 0)/(M sin(theta_2/2)) H_m(theta_1)."""
    fine = TestFunction(tf.family, tf.a, nodes=2 * tf.nodes, scale=tf.scale)
    total = 0j
    err = 0.0
    for rec in census:
        th1, th2, M = float(rec["theta1"]), float(rec["theta2"]), int(rec["M"])
        ht = h_tilde(tf, th2, 0)
        ht_fine = h_tilde(fine, th2, 0)
        hm = complex(H(th1, m))
        f = hm / (M * math.sin(0.5 * th2))
        total += ht * f
        err += abs((ht_fine - ht) * f)
    if abs(total.imag) > 1e-8 * max(abs(total), 1.0):
        raise TraceError(f"elliptic sum has imaginary part {total.imag}; the census is not closed under inversion")
    return Term(total.real, err + _ROUND * abs(total))


def elliptic_term(cfg: TraceConfig) -> Term | None:
    if cfg.torsion_free:
        return None
    if not cfg.elliptic:
        return Term(0.0, 0.0)
    return elliptic_sum(cfg.elliptic, cfg.tf, cfg.m)


def cusp_term(cfg: TraceConfig) -> Term:
    """-sum_i R_i (hhat(0) + 2 sum_{l>=1, 2lR_i < a} hhat(2lR_i) e^{-2lR_i (m - 1/2)})."""
    total = 0.0
    for R in cfg.regulators:
        s = float(cfg.tf.hhat(np.array([0.0]))[0])
        l = 1
        while 2 * l * R < cfg.tf.a:
            x = 2 * l * R
            s += 2 * float(cfg.tf.hhat(np.array([x]))[0]) * math.exp(-x * (cfg.m - 0.5))
            l += 1
        total -= R * s
    return Term(total, _ROUND * (abs(total) + 1.0))


def spectral_estimate(cfg: TraceConfig) -> TraceReport:
    """Sum of the geometric terms, an estimate of sum_k h(r_k) - delta_{m,1} h(i/2)."""
    ident = identity_term(cfg)
    eh = eh_term(cfg)
    ell = elliptic_term(cfg)
    cusp = cusp_term(cfg)
    terms = [t for t in (ident, eh, ell, cusp) if t is not None]
    est = sum(t.value for t in terms)
    budget = sum(t.error for t in terms)
    notes = [f"hyperbolic classes with rho <= {cfg.ledger.T:g} (support needs e^a = {math.exp(cfg.tf.a):.6g})"]
    if cfg.ledger.completeness_note:
        notes.append(cfg.ledger.completeness_note)
    if cfg.torsion_free:
        notes.append("elliptic term omitted (torsion-free lattice)")
    elif cfg.elliptic is None:
        notes.append("no elliptic census supplied; elliptic term set to 0")
    else:
        uncert = sum(1 for r in cfg.elliptic if not r.get("certified", True))
        notes.append(f"elliptic census of {len(cfg.elliptic)} classes ({uncert} uncertified)")
    warnings = []
    if cfg.m >= 2 and est < -budget:
        warnings.append(f"WARNING: negative estimate {est:.6g} beyond the error budget {budget:.3g}")
    return TraceReport(ident, eh, ell, cusp, est, budget, "; ".join(notes), warnings, cfg.to_json())


# -- PSL_2(Z) -----------------------------------------------------------------------------------

@dataclass(frozen=True)
class _Eisenstein:
    """x + y sqrt(-3) with rational coordinates."""

    x: Fraction
    y: Fraction

    def __add__(self, o: _Eisenstein) -> _Eisenstein:
        return _Eisenstein(self.x + o.x, self.y + o.y)

    def __sub__(self, o: _Eisenstein) -> _Eisenstein:
        return _Eisenstein(self.x - o.x, self.y - o.y)

    def __mul__(self, o: _Eisenstein) -> _Eisenstein:
        return _Eisenstein(self.x * o.x - 3 * self.y * o.y, self.x * o.y + self.y * o.x)

    def conj(self) -> _Eisenstein:
        return _Eisenstein(self.x, -self.y)

    def __truediv__(self, o: _Eisenstein) -> _Eisenstein:
        n = o.x * o.x + 3 * o.y * o.y
        p = self * o.conj()
        return _Eisenstein(p.x / n, p.y / n)

    def __pow__(self, k: int) -> _Eisenstein:
        r = _Eisenstein(Fraction(1), Fraction(0))
        for _ in range(k):
            r = r * self
        return r


def _h_exact(z: _Eisenstein, m: int) -> _Eisenstein:
    one = _Eisenstein(Fraction(1), Fraction(0))
    return z ** m / (one - z)


def modular_cusp_dim(m: int) -> int:
    """Dimension of weight-2m cusp forms for PSL_2(Z)."""
    if m == 1:
        return 0
    return m // 6 - 1 if m % 6 == 1 else m // 6


def modular_consistency(m: int) -> Fraction:
    """dim - delta_{m,1} - vol (2m-1)/(4pi) - sum 1/M e^{im theta}/(1 - e^{i theta}) for PSL_2(Z).

    vol = pi/3; elliptic classes: theta = pi with M = 2, and theta = +-2pi/3 with M = 3.
    The value is -1/2 for every m >= 1.
    """
    if not isinstance(m, int) or m < 1:
        raise TraceError("m must be a positive integer")
    minus_one = _Eisenstein(Fraction(-1), Fraction(0))
    omega = _Eisenstein(Fraction(-1, 2), Fraction(1, 2))
    ell = _h_exact(minus_one, m) * _Eisenstein(Fraction(1, 2), Fraction(0))
    w = _h_exact(omega, m)
    ell = ell + (w + _h_exact(omega.conj(), m)) * _Eisenstein(Fraction(1, 3), Fraction(0))
    if ell.y != 0:
        raise TraceError("elliptic contribution is not rational")
    return Fraction(modular_cusp_dim(m)) - (1 if m == 1 else 0) - Fraction(2 * m - 1, 12) - ell.x


# -- zeta ---------------------------------------------------------------------------------------

@dataclass(frozen=True)
class ZetaValue:
    value: complex
    tail_bound: float
    terms: int

    def to_json(self) -> dict:
        return {"re": self.value.real, "im": self.value.imag, "tail_bound": self.tail_bound, "terms": self.terms}


def _zeta_classes(ledger: Ledger) -> list[tuple[float, float, int]]:
    return [(float(e.length), float(e.theta), e.h) for e in ledger]


def _check_s(s: complex) -> complex:
    s = complex(s)
    if not s.real > 1:
        raise ZetaDomainError(f"Re(s) = {s.real} <= 1 lies outside the region of convergence")
    return s


def zeta_log_derivative(s: complex, m: int, ledger: Ledger, tail_eps: float = 1e-16) -> ZetaValue:
    """Z'/Z(s) = -sum_pairs 2h length sum_l rho^{-sl}/(1 - rho^{-l}) chi_m(l theta)."""
    s = _check_s(s)
    if m < 1:
        raise TraceError("m must be >= 1")
    total = 0j
    tail = 0.0
    n = 0
    for ell, theta, h in _zeta_classes(ledger):
        rho_inv = math.exp(-ell)
        l = 1
        while True:
            x = math.exp(-s.real * l * ell)
            if x < tail_eps:
                break
            total -= 2 * h * ell * cmath.exp(-s * l * ell) / (1 - rho_inv ** l) * character_sum(theta, m, l)
            n += 1
            l += 1
        # geometric remainder of the l-sum
        tail += 2 * h * ell * (2 * m - 1) * x / ((1 - rho_inv) * (1 - math.exp(-s.real * ell)))
    return ZetaValue(total, tail, n)


def zeta_truncated(s: complex, m: int, ledger: Ledger, tail_eps: float = 1e-16) -> ZetaValue:
    """prod_pairs prod_{j>=0, |k|<m} (1 - e^{ik theta} rho^{-s-j})^{-2h}, j cut where rho^{-Re s - j} < tail_eps."""
    s = _check_s(s)
    if m < 1:
        raise TraceError("m must be >= 1")
    logz = 0j
    tail = 0.0
    n = 0
    for ell, theta, h in _zeta_classes(ledger):
        j = 0
        while True:
            x = math.exp(-(s.real + j) * ell)
            if x < tail_eps:
                break
            base = cmath.exp(-(s + j) * ell)
            for k in range(-(m - 1), m):
                logz -= 2 * h * cmath.log(1 - cmath.exp(1j * k * theta) * base)
                n += 1
            j += 1
        tail += 2 * h * (2 * m - 1) * 2 * x / (1 - math.exp(-ell))
    return ZetaValue(cmath.exp(logz), tail, n)
