"""Paley-Wiener test functions and the integral transforms attached to them.

A test function is given through its Fourier transform ``hhat``, even and
supported in [-a, a]; ``h(r) = int hhat(u) e^{iru} du``.  The weight-m point
pair invariant is ``f(z, w) = (-1)^m rho(u(z, w)) [(conj z - w)/(z - conj w)]^m``
with ``rho`` obtained from ``Q(w) = hhat(2 asinh(sqrt(w)/2))``.

All quadratures are Gauss-Legendre on the natural compact interval; the
``*_with_error`` variants compare against a half-resolution rule.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy import integrate

FAMILIES = ("bump", "coswin", "hann2")
THETA_MIN = 1e-3


class TransformError(ValueError):
    pass


@lru_cache(maxsize=64)
def _gl(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def _gl_interval(lo: float, hi: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = _gl(n)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1), half * w


@dataclass(frozen=True)
class TestFunction:
    """hhat from a closed-form family, scaled by ``scale``.

    * ``bump``:   exp(-1/(1 - (u/a)^2)), smooth with all derivatives vanishing at +-a;
    * ``coswin``: cos(pi u / 2a)^3, C^2 at +-a;
    * ``hann2``:  cos(pi u / 2a)^4, C^3 at +-a.
    """

    family: str = "bump"
    a: float = 1.0
    nodes: int = 256
    scale: float = 1.0

    __test__ = False  # not a pytest class

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise TransformError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if not self.a > 0:
            raise TransformError("support a must be positive")
        if self.nodes < 8:
            raise TransformError("need at least 8 quadrature nodes")

    def scaled(self, c: float) -> TestFunction:
        return replace(self, scale=self.scale * c)

    def to_json(self) -> dict:
        return {"family": self.family, "a": self.a, "nodes": self.nodes, "scale": self.scale}

    @classmethod
    def from_json(cls, obj: dict) -> TestFunction:
        return cls(obj["family"], float(obj["a"]), int(obj.get("nodes", 256)), float(obj.get("scale", 1.0)))

    # -- hhat and derivatives ---------------------------------------------------------------------

    def hhat(self, u):
        u = np.asarray(u, dtype=float)
        x = np.abs(u) / self.a
        inside = x < 1
        out = np.zeros_like(u)
        xi = x[inside]
        if self.family == "bump":
            out[inside] = np.exp(-1.0 / (1.0 - xi * xi))
        else:
            c = np.cos(0.5 * math.pi * xi)
            out[inside] = c ** (3 if self.family == "coswin" else 4)
        return self.scale * out

    def hhat_prime(self, u):
        u = np.asarray(u, dtype=float)
        x = u / self.a
        inside = np.abs(x) < 1
        out = np.zeros_like(u)
        xi = x[inside]
        if self.family == "bump":
            one = 1.0 - xi * xi
            out[inside] = np.exp(-1.0 / one) * (-2.0 * xi / (self.a * one * one))
        else:
            k = 0.5 * math.pi / self.a
            p = 3 if self.family == "coswin" else 4
            out[inside] = -p * k * np.cos(k * self.a * xi) ** (p - 1) * np.sin(k * self.a * xi)
        return self.scale * out

    @property
    def support_w(self) -> float:
        """4 sinh^2(a/2): Q and rho vanish beyond it."""
        return 4.0 * math.sinh(0.5 * self.a) ** 2


# -- h -------------------------------------------------------------------------------------------

_MAX_COS_NODES = 200_000


def _cos_nodes(tf: TestFunction, rmax: float) -> int:
    n = max(tf.nodes, int(2 * tf.a * rmax) + 64)
    if n > _MAX_COS_NODES:
        raise TransformError(f"|r|={rmax} needs more than {_MAX_COS_NODES} cosine nodes")
    return n


def h_real(tf: TestFunction, r):
    """h(r) = 2 int_0^a hhat(u) cos(ru) du."""
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    n = _cos_nodes(tf, float(np.max(np.abs(r_arr))) if r_arr.size else 0.0)
    u, w = _gl_interval(0.0, tf.a, n)
    vals = 2.0 * (np.cos(np.outer(r_arr, u)) @ (w * tf.hhat(u)))
    return vals if np.ndim(r) else float(vals[0])


def h_imag(tf: TestFunction, b):
    """h(ib) = 2 int_0^a hhat(u) cosh(bu) du."""
    b_arr = np.atleast_1d(np.asarray(b, dtype=float))
    u, w = _gl_interval(0.0, tf.a, tf.nodes)
    vals = 2.0 * (np.cosh(np.outer(b_arr, u)) @ (w * tf.hhat(u)))
    return vals if np.ndim(b) else float(vals[0])


def h_real_with_error(tf: TestFunction, r: float) -> tuple[float, float]:
    coarse = replace(tf, nodes=max(8, tf.nodes // 2))
    v = h_real(tf, r)
    return v, abs(v - h_real(coarse, r))


def h_imag_with_error(tf: TestFunction, b: float) -> tuple[float, float]:
    coarse = replace(tf, nodes=max(8, tf.nodes // 2))
    v = h_imag(tf, b)
    return v, abs(v - h_imag(coarse, b))


def h_exact(tf: TestFunction, r):
    """Closed-form h for the cosine-power families (used as an oracle)."""
    if tf.family == "bump":
        raise TransformError("no closed form for the bump family")
    r = np.asarray(r, dtype=float)
    a = tf.a
    k = math.pi / a

    def cos_pair(kk):
        # int_{-a}^{a} cos(kk u) cos(r u) du
        return _sinc_int(r - kk, a) + _sinc_int(r + kk, a)

    if tf.family == "coswin":
        # cos^3 x = (3 cos x + cos 3x)/4 with x = k u / 2
        val = 0.75 * cos_pair(0.5 * k) + 0.25 * cos_pair(1.5 * k)
    else:
        # cos^4 x = 3/8 + cos 2x / 2 + cos 4x / 8
        val = 0.375 * 2 * _sinc_int(r, a) + 0.5 * cos_pair(k) + 0.125 * cos_pair(2 * k)
    return tf.scale * val


def _sinc_int(s, a):
    """sin(s a)/s, continuous at s = 0."""
    s = np.asarray(s, dtype=float)
    return a * np.sinc(s * a / math.pi)


# -- Q and rho ----------------------------------------------------------------------------------

@dataclass(frozen=True)
class AuxQ:
    tf: TestFunction

    def __call__(self, w):
        w = np.asarray(w, dtype=float)
        u = 2.0 * np.arcsinh(0.5 * np.sqrt(np.maximum(w, 0.0)))
        return self.tf.hhat(u)

    def derivative(self, w):
        """Q'(w) = hhat'(u) / (2 sinh u) with w = 4 sinh^2(u/2)."""
        w = np.asarray(w, dtype=float)
        u = 2.0 * np.arcsinh(0.5 * np.sqrt(np.maximum(w, 0.0)))
        u = np.where(u == 0.0, 1e-200, u)
        return self.tf.hhat_prime(u) / (2.0 * np.sinh(u))


def q_from_hhat(tf: TestFunction) -> AuxQ:
    return AuxQ(tf)


@dataclass(frozen=True)
class AuxRho:
    Q: AuxQ
    m: int
    nodes: int = 200

    @property
    def support(self) -> float:
        return self.Q.tf.support_w

    def __call__(self, y):
        """rho(y) = -(1/pi) int Q'(y + t^2) [(sqrt(y+4+t^2) - t)/(sqrt(y+4+t^2) + t)]^m dt."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        W = self.support
        out = np.zeros_like(y)
        live = (y >= 0) & (y < W)
        if np.any(live):
            yl = y[live][:, None]
            s, ws = _gl(self.nodes)
            half = np.sqrt(W - yl)
            t = half * s[None, :]
            root = np.sqrt(yl + 4 + t * t)
            kern = ((root - t) / (root + t)) ** self.m if self.m else 1.0
            vals = self.Q.derivative(yl + t * t) * kern
            out[live] = -(vals * ws[None, :]).sum(axis=1) * half[:, 0] / math.pi
        return out


def rho_from_q(Q: AuxQ, m: int, nodes: int = 200) -> AuxRho:
    return AuxRho(Q, int(m), nodes)


def rho_for(tf: TestFunction, m: int, nodes: int = 200) -> AuxRho:
    return rho_from_q(q_from_hhat(tf), m, nodes)


def q_from_rho(rho: AuxRho, w, nodes: int = 200):
    """Q(w) = int rho(w + v^2) [(sqrt(w+4) + iv)/(sqrt(w+4) - iv)]^m dv (real part; the odd part cancels)."""
    w = np.atleast_1d(np.asarray(w, dtype=float))
    W = rho.support
    out = np.zeros_like(w)
    live = (w >= 0) & (w < W)
    if np.any(live):
        wl = w[live][:, None]
        s, ws = _gl(nodes)
        half = np.sqrt(W - wl)
        v = half * s[None, :]
        root = np.sqrt(wl + 4)
        kern = ((root + 1j * v) / (root - 1j * v)) ** rho.m
        vals = rho((wl + v * v).ravel()).reshape(v.shape) * kern
        out[live] = np.real((vals * ws[None, :]).sum(axis=1)) * half[:, 0]
    return out


# -- point pair invariant ---------------------------------------------------------------------

def pointpair_eval(tf: TestFunction, m: int, z: complex, w: complex, rho: AuxRho | None = None) -> complex:
    """(-1)^m rho(|z - w|^2 / (Im z Im w)) [(conj z - w)/(z - conj w)]^m."""
    if z.imag <= 0 or w.imag <= 0:
        raise TransformError("points must lie in the upper half plane")
    rho = rho or rho_for(tf, m)
    y = abs(z - w) ** 2 / (z.imag * w.imag)
    bracket = (z.conjugate() - w) / (z - w.conjugate())
    return (-1) ** m * float(rho(y)[0]) * bracket ** m


def selberg_transform(tf: TestFunction, m: int, r: float, nodes: int = 160) -> complex:
    """int_H f(i, z) y^{1/2 + ir} dx dy / y^2 by product Gauss-Legendre over the support disc."""
    rho = rho_for(tf, m)
    W = tf.support_w
    # u(i, z) = (x^2 + (y-1)^2)/y < W  <=>  (y-1)^2 < W y, |x| < sqrt(W y - (y-1)^2)
    disc = math.sqrt(W * W + 4 * W)
    y_lo, y_hi = (2 + W - disc) / 2, (2 + W + disc) / 2
    s, ws = _gl(nodes)
    # y = y_lo + (y_hi - y_lo) sin^2-type map keeps the sqrt endpoint behaviour smooth
    phi = 0.5 * math.pi * (s + 1) / 2
    y = y_lo + (y_hi - y_lo) * np.sin(phi) ** 2
    dy = (y_hi - y_lo) * np.sin(2 * phi) * (0.5 * math.pi / 2)
    total = 0.0 + 0.0j
    for yi, wy, dyi in zip(y, ws, dy):
        xmax = math.sqrt(max(W * yi - (yi - 1) ** 2, 0.0))
        if xmax == 0.0:
            continue
        x = xmax * s
        zz = x + 1j * yi
        u = (x * x + (yi - 1) ** 2) / yi
        bracket = ((-1j - zz) / (1j - np.conj(zz))) ** m
        f = (-1) ** m * rho(u) * bracket
        inner = np.sum(ws * f) * xmax
        total += inner * yi ** (0.5 + 1j * r) / yi ** 2 * wy * dyi
    return complex(total)


# -- orbital integrals ----------------------------------------------------------------------------

def orbital_identity_geometric(tf: TestFunction, m: int = 0) -> float:
    """I_m(1) = -(1/4pi) int cosh(mu) hhat'(u)/sinh(u/2) du (the odd part of e^{-mu} drops out)."""
    u, w = _gl_interval(0.0, tf.a, tf.nodes)
    vals = np.cosh(m * u) * tf.hhat_prime(u) / np.sinh(0.5 * u)
    return float(-2.0 * np.dot(w, vals) / (4 * math.pi))


def default_spectral_cutoff(tf: TestFunction) -> float:
    """R beyond which h is negligible: sub-exponential decay for the bump, polynomial otherwise."""
    return 600.0 / tf.a if tf.family == "bump" else 2.0e4 / tf.a


def spectral_integral(tf: TestFunction, weight, R: float | None = None, panel: float = 1.0) -> tuple[float, float]:
    """int_0^R h(r) weight(r) dr by composite 16-point Gauss-Legendre, with a crude tail bound.

    The bump family uses quadrature values of h; the cosine families use the
    closed form, which keeps large cutoffs cheap.
    """
    R = default_spectral_cutoff(tf) if R is None else R
    npan = int(math.ceil(R / panel))
    s, ws = _gl(16)
    edges = np.arange(npan) * panel
    r = (edges[:, None] + 0.5 * panel * (s[None, :] + 1)).ravel()
    w = np.tile(0.5 * panel * ws, npan)
    hv = (h_real(tf, r) if tf.family == "bump" else h_exact(tf, r)) * weight(r)
    tail = float(np.max(np.abs(hv[-16:]))) * panel
    return float(np.dot(w, hv)), tail


def orbital_identity(tf: TestFunction, R: float | None = None) -> tuple[float, float]:
    """I_0(1) = (1/4pi) int h(r) r tanh(pi r) dr, as (value, tail bound)."""
    val, tail = spectral_integral(tf, lambda r: r * np.tanh(math.pi * r), R)
    return 2.0 * val / (4 * math.pi), 2.0 * tail / (4 * math.pi)


def orbital_hyperbolic(tf: TestFunction, ell: float) -> float:
    """hhat(l)/sinh(l/2); zero once l >= a."""
    if not ell > 0:
        raise TransformError("length must be positive")
    if ell >= tf.a:
        return 0.0
    return float(tf.hhat(np.array([ell]))[0] / math.sinh(0.5 * ell))


def orbital_hyperbolic_direct(tf: TestFunction, ell: float, nodes: int = 200) -> float:
    """Weight-0 orbital integral of a_l by quadrature over a fundamental domain of <a_l> in H.

    With z = r e^{i phi}, r in [1, e^l), the integrand rho(4 sinh^2(l/2)/sin^2 phi)
    does not depend on r; the result is divided by the centralizer volume l.
    The Haar normalization used here gives half of :func:`orbital_hyperbolic`.
    """
    rho = rho_for(tf, 0)
    W = 4 * math.sinh(0.5 * ell) ** 2
    if W >= tf.support_w:
        return 0.0
    # rho(W/sin^2 phi) vanishes unless sin^2 phi > W / support
    phi0 = math.asin(math.sqrt(W / tf.support_w))
    phi, wp = _gl_interval(phi0, math.pi - phi0, nodes)
    rr, wr = _gl_interval(1.0, math.exp(ell), 24)
    sphi2 = np.sin(phi) ** 2
    inner = rho(W / sphi2) / sphi2
    radial = np.sum(wr / rr)
    return float(np.dot(wp, inner) * radial / ell)


def h_tilde(tf: TestFunction, theta: float, m: int, theta_min: float = THETA_MIN) -> complex:
    """(i/4) int hhat(u) e^{(2m-1)(u + i theta)/2} (e^u - e^{i theta}) / (cosh u - cos theta) du.

    Complex-valued in general; only m = 0 gives a real number.
    """
    d = abs(math.remainder(theta, 2 * math.pi))
    if d < theta_min:
        raise TransformError(f"theta={theta} is within {theta_min} of the singular point 0 mod 2pi")
    u, w = _gl_interval(-tf.a, tf.a, 2 * tf.nodes)
    eth = complex(math.cos(theta), math.sin(theta))
    kern = np.exp(0.5 * (2 * m - 1) * (u + 1j * theta)) * (np.exp(u) - eth) / (np.cosh(u) - math.cos(theta))
    return complex(0.25j * np.dot(w, tf.hhat(u) * kern))


def orbital_elliptic(tf: TestFunction, theta: float, m: int) -> complex:
    return h_tilde(tf, theta, m) / math.sin(0.5 * theta)


# -- identity checks --------------------------------------------------------------------------

def elliptic_difference_check(tf: TestFunction, theta: float, m: int) -> tuple[complex, complex, float]:
    """[h~(theta,m) - h~(theta,m-1)]/sin(theta/2) against e^{im theta}/(1 - e^{i theta}) h(i(m - 1/2)), m >= 1."""
    if m < 1:
        raise TransformError("m must be >= 1")
    lhs = (h_tilde(tf, theta, m) - h_tilde(tf, theta, m - 1)) / math.sin(0.5 * theta)
    e = complex(math.cos(theta), math.sin(theta))
    rhs = e ** m / (1 - e) * h_imag(tf, m - 0.5)
    return lhs, rhs, abs(lhs - rhs)


def cusp_integral_identity_check(tf: TestFunction, b: float) -> tuple[float, float, float]:
    """(b/pi) int h(t) cos(at)/(b^2 + t^2) dt  against  e^{-ab} h(ib), a the support of hhat."""
    if not b > 0:
        raise TransformError("b must be positive")
    a = tf.a

    def integrand(t):
        return h_real(tf, t) / (b * b + t * t)

    # QAWF Fourier rule on [0, inf); the integrand is even in t
    val, _ = integrate.quad(integrand, 0.0, np.inf, weight="cos", wvar=a, limlst=200)
    lhs = 2.0 * b / math.pi * val
    rhs = math.exp(-a * b) * h_imag(tf, b)
    return lhs, rhs, abs(lhs - rhs)


def ihp_vanishing_check(tf: TestFunction, m: int, t: float, nodes: int = 400) -> float:
    """|int rho(alpha^2 (x^2+1)) [(x alpha + i beta)/(x alpha - i beta)]^m log(1+x^2) dx|,
    alpha = 2 sinh t, beta = 2 cosh t.  Exactly 0 when the support condition leaves no x."""
    alpha, beta = 2 * math.sinh(t), 2 * math.cosh(t)
    W = tf.support_w
    if alpha * alpha >= W:
        return 0.0
    xmax = math.sqrt(W / (alpha * alpha) - 1) if alpha != 0 else None
    if xmax is None:
        # alpha = 0: rho(0) log(1+x^2) over the whole line diverges unless rho(0) = 0
        raise TransformError("t = 0 gives a divergent integral")
    rho = rho_for(tf, m)
    x, w = _gl_interval(-xmax, xmax, nodes)
    f = rho(alpha * alpha * (x * x + 1)) * ((x * alpha + 1j * beta) / (x * alpha - 1j * beta)) ** m
    return float(abs(np.dot(w, f * np.log1p(x * x))))


def ip_integral(tf: TestFunction, m: int, nodes: int = 400) -> complex:
    """I_m^p = int_0^inf f_m(1, n_x) log x dx with f_m(1, n_x) = (-1)^m rho_m(x^2) [(x+2i)/(x-2i)]^m."""
    rho = rho_for(tf, m)
    xmax = math.sqrt(tf.support_w)
    # x = xmax s^2 clusters nodes at the log singularity
    s, ws = _gl_interval(0.0, 1.0, nodes)
    x = xmax * s * s
    jac = 2 * xmax * s
    f = (-1) ** m * rho(x * x) * ((x + 2j) / (x - 2j)) ** m
    return complex(np.dot(ws, f * np.log(x) * jac))


def ip_difference_check(tf: TestFunction, m: int, nodes: int = 400) -> tuple[float, float, float]:
    """I_m^p - I_{m-1}^p against (2m-1)/(8pi) int h(t)/((m-1/2)^2 + t^2) dt - h(i(2m-1)/2)/4."""
    if m < 1:
        raise TransformError("m must be >= 1")
    lhs_c = ip_integral(tf, m, nodes) - ip_integral(tf, m - 1, nodes)
    c = m - 0.5
    val, _ = spectral_integral(tf, lambda t: 1.0 / (c * c + t * t))
    rhs = (2 * m - 1) / (8 * math.pi) * 2 * val - 0.25 * h_imag(tf, c)
    lhs = lhs_c.real
    return lhs, rhs, abs(lhs - rhs)
