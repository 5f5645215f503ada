"""Counting and equidistribution statistics over a ledger.

Angles are the k_theta parameters: a stored class carries theta = 2 arg(eps_gamma)
and its inverse carries -theta.  Every stored pair stands for 2h classes (h for
each member), which is the bookkeeping behind the 2 Li(T) predictions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import special

from .ledger import Ledger

AngleFn = Callable[[np.ndarray], np.ndarray]
_MU_GRID = 4096


class StatsError(ValueError):
    pass


def li(T: float) -> float:
    """Li(T) = int_2^T dt / log t = Ei(log T) - Ei(log 2)."""
    if T < 2:
        raise StatsError("Li(T) needs T >= 2")
    return float(special.expi(math.log(T)) - special.expi(math.log(2.0)))


def _grid(n: int = _MU_GRID) -> np.ndarray:
    # midpoints: the same spectral accuracy as the trapezoid rule, and theta = 0 is never sampled
    return (np.arange(n) + 0.5) * 2 * math.pi / n


def mu_density(theta):
    return np.sin(0.5 * np.asarray(theta)) ** 2 / math.pi


def mu_integral(f: AngleFn, n: int = _MU_GRID) -> float:
    """int f dmu over [0, 2pi) by the periodic midpoint rule (exact for trigonometric
    polynomials of degree < n - 1)."""
    th = _grid(n)
    vals = np.asarray(f(th)) * mu_density(th)
    return float(np.real(np.sum(vals)) * 2 * math.pi / n)


def mu_arc(start: float, end: float) -> float:
    """mu([start, end]) for 0 <= start <= end <= 2pi, from the antiderivative (t - sin t)/(2 pi)."""
    F = lambda t: (t - math.sin(t)) / (2 * math.pi)  # noqa: E731
    return F(end) - F(start)


def H(theta, m: int):
    """H_m(theta) = e^{im theta} / (1 - e^{i sgn(m) theta})."""
    if m == 0:
        raise StatsError("H_m needs m != 0")
    th = np.asarray(theta, dtype=float)
    if np.any(np.abs(np.remainder(th + math.pi, 2 * math.pi) - math.pi) < 1e-14):
        raise StatsError("H_m is singular at theta = 0 mod 2pi")
    s = 1 if m > 0 else -1
    return np.exp(1j * m * th) / (1 - np.exp(1j * s * th))


def sign_sum_residual(theta, m: int) -> float:
    """max |H_m + H_{-m} + sum_{|k|<m} e^{ik theta}| over the given angles (zero identically)."""
    if m < 1:
        raise StatsError("m must be >= 1")
    th = np.asarray(theta, dtype=float)
    chi = sum(np.exp(1j * k * th) for k in range(-(m - 1), m))
    return float(np.max(np.abs(H(th, m) + H(th, -m) + chi)))


H_NORM_SQ = 0.5  # int |H_m|^2 dmu = (1/4pi) int_0^{2pi} dtheta


@dataclass
class WeylProfile:
    """Coefficients a_f(m) = int f conj(H_m) dmu for 0 < |m| <= order.

    The H_m are orthogonal with squared norm 1/2, so f = 2 sum a_f(m) H_m and
    mu(f) = -(a_f(1) + a_f(-1)).
    """

    coeffs: dict[int, complex]
    order: int
    reconstruction_error: float = float("nan")

    def mu(self) -> complex:
        return -(self.coeffs[1] + self.coeffs[-1])

    def reconstruct(self, theta):
        th = np.asarray(theta, dtype=float)
        return sum(2 * c * H(th, m) for m, c in self.coeffs.items())


def weyl_profile(f: AngleFn, order: int, n: int = _MU_GRID) -> WeylProfile:
    if order < 1:
        raise StatsError("order must be >= 1")
    th = _grid(n)
    fv = np.asarray(f(th), dtype=complex)
    w = mu_density(th) * 2 * math.pi / n
    coeffs = {}
    for m in [k for j in range(1, order + 1) for k in (j, -j)]:
        coeffs[m] = complex(np.sum(fv * np.conj(H(th, m)) * w))
    prof = WeylProfile(coeffs, order)
    err = np.sqrt(np.sum(np.abs(prof.reconstruct(th) - fv) ** 2 * w))
    prof.reconstruction_error = float(err)
    return prof


# -- ledger statistics ------------------------------------------------------------------------

def _check_T(ledger: Ledger, T: float) -> None:
    if T > ledger.T * (1 + 1e-12):
        raise StatsError(f"T={T} exceeds the ledger cutoff {ledger.T}")


def _arrays(ledger: Ledger, rho_max: float):
    rho, theta, h, ell = [], [], [], []
    for e in ledger:
        r = float(e.rho)
        if r <= rho_max:
            rho.append(r)
            theta.append(float(e.theta))
            h.append(e.h)
            ell.append(float(e.length))
    return np.array(rho), np.array(theta), np.array(h, dtype=float), np.array(ell)


@dataclass
class CountReport:
    T: float
    N: int
    prediction: float
    ratio: float


def count_vs_li(ledger: Ledger, T: float) -> CountReport:
    """N(T) = sum of 2h over stored pairs with rho <= T, against 2 Li(T)."""
    _check_T(ledger, T)
    N = sum(2 * e.h for e in ledger if e.rho <= T)
    pred = 2 * li(T) if T >= 2 else 0.0
    return CountReport(T, N, pred, N / pred if pred else float("nan"))


@dataclass
class WeightedReport:
    T: float
    S: float
    prediction: float
    residual: float
    envelope_C: float


def weighted_sum_vs_li(ledger: Ledger, f: AngleFn, T: float) -> WeightedReport:
    """sum over classes (both members of each pair, weight h) of f(theta), against 2 Li(T) mu(f)."""
    _check_T(ledger, T)
    _, th, h, _ = _arrays(ledger, T)
    S = float(np.sum(h * (np.asarray(f(th)) + np.asarray(f(-th))))) if th.size else 0.0
    pred = 2 * li(T) * mu_integral(f) if T >= 2 else 0.0
    res = S - pred
    return WeightedReport(T, S, pred, res, abs(res) / T ** 0.75)


@dataclass
class GeodesicReport:
    x: float
    S: float
    prediction: float
    residual: float
    envelope_C: float


def smoothed_geodesic_sum(ledger: Ledger, f: AngleFn, x: float) -> GeodesicReport:
    """sum over classes and powers with l*length <= x of length0 f(l theta)/(2 sinh(l length/2)),
    against 4 e^{x/2} mu(f).  The envelope uses the exponent x (1/2 + 7/64) of the spectral gap."""
    if not x > 0:
        raise StatsError("x must be positive")
    _check_T(ledger, math.exp(x))
    _, th, h, ell = _arrays(ledger, math.exp(x))
    S = 0.0
    for t0, hh, l0 in zip(th, h, ell):
        l = 1
        while l * l0 <= x:
            w = l0 / (2 * math.sinh(0.5 * l * l0))
            S += hh * w * float(np.real(f(np.array([l * t0]))[0] + f(np.array([-l * t0]))[0]))
            l += 1
    pred = 4 * math.exp(0.5 * x) * mu_integral(f)
    res = S - pred
    return GeodesicReport(x, S, pred, res, abs(res) / math.exp(x * (0.5 + 7 / 64)))


@dataclass
class ArcReport:
    arc: tuple[float, float]
    empirical: float
    mu: float
    discrepancy: float


def arc_test(ledger: Ledger, arcs: list[tuple[float, float]], T: float) -> list[ArcReport]:
    """Fraction of classes (weight h, both members of each pair) with theta in each arc.

    Arcs are given in turns: (0, 0.5) is [0, pi].  An arc with end < start
    wraps through 0; (0, 1) is the whole circle.
    """
    _check_T(ledger, T)
    _, th, h, _ = _arrays(ledger, T)
    angles = np.concatenate([np.remainder(th, 2 * math.pi), np.remainder(-th, 2 * math.pi)])
    weights = np.concatenate([h, h])
    total = float(weights.sum())
    out = []
    for a0, a1 in arcs:
        if not (0 <= a0 <= 1 and 0 <= a1 <= 1):
            raise StatsError("arc endpoints are turns in [0, 1]")
        s, e = 2 * math.pi * a0, 2 * math.pi * a1
        if a1 >= a0:
            inside = (angles >= s) & (angles <= e) if (a0, a1) != (0, 1) else np.ones_like(angles, bool)
            mu = mu_arc(s, e)
        else:
            inside = (angles >= s) | (angles <= e)
            mu = mu_arc(s, 2 * math.pi) + mu_arc(0, e)
        emp = float(weights[inside].sum() / total) if total else float("nan")
        out.append(ArcReport((a0, a1), emp, mu, abs(emp - mu) if total else float("nan")))
    return out


@dataclass
class UnitsReport:
    T: float
    S: float
    prediction: float
    ratio: float = field(default=float("nan"))


def units_sum(ledger: Ledger, f: AngleFn, T: float, even_tol: float = 1e-12) -> UnitsReport:
    """sum over discriminant classes with iota_2(eps) < T of h f(theta), against mu(f) Li(T^2).

    With rho = iota_2(eps)^2 this is half of N(T^2), by construction.
    """
    _check_T(ledger, T * T)
    probe = np.linspace(0.1, 6.2, 17)
    if np.max(np.abs(np.asarray(f(probe)) - np.asarray(f(-probe)))) > even_tol:
        raise StatsError("units_sum needs f even under theta -> -theta")
    S = 0.0
    for e in ledger:
        if e.unit.iota2 < T:
            S += e.h * float(np.real(f(np.array([float(e.theta)]))[0]))
    pred = mu_integral(f) * li(T * T) if T * T >= 2 else 0.0
    return UnitsReport(T, S, pred, S / pred if pred else float("nan"))
