from __future__ import annotations

import math

import numpy as np
import pytest

from hybridtrace import transforms as T

BUMP = T.TestFunction("bump", 2.0)


@pytest.mark.parametrize("fam", T.FAMILIES)
def test_hhat_even_and_supported(fam):
    tf = T.TestFunction(fam, 1.5)
    u = np.linspace(-2, 2, 41)
    assert np.allclose(tf.hhat(u), tf.hhat(-u))
    assert np.all(tf.hhat(u[np.abs(u) >= 1.5]) == 0)


@pytest.mark.parametrize("fam", T.FAMILIES)
def test_hhat_prime_matches_finite_difference(fam):
    tf = T.TestFunction(fam, 1.5)
    u = np.linspace(-1.4, 1.4, 15)
    eps = 1e-6
    fd = (tf.hhat(u + eps) - tf.hhat(u - eps)) / (2 * eps)
    assert np.allclose(tf.hhat_prime(u), fd, atol=1e-7)


@pytest.mark.parametrize("fam", ["coswin", "hann2"])
def test_h_real_matches_closed_form(fam):
    tf = T.TestFunction(fam, 1.5)
    r = np.linspace(0, 20, 9)
    assert np.max(np.abs(T.h_real(tf, r) - T.h_exact(tf, r))) < 1e-10


def test_scaled_is_linear():
    r = np.array([0.0, 0.7, 3.0])
    assert np.allclose(T.h_real(BUMP.scaled(2.5), r), 2.5 * T.h_real(BUMP, r))


def test_json_round_trip():
    assert T.TestFunction.from_json(BUMP.scaled(3.0).to_json()) == BUMP.scaled(3.0)


def test_bad_test_functions():
    with pytest.raises(T.TransformError):
        T.TestFunction("gauss", 1.0)
    with pytest.raises(T.TransformError):
        T.TestFunction("bump", 0.0)
    with pytest.raises(T.TransformError):
        T.TestFunction("bump", 1.0, nodes=2)
    with pytest.raises(T.TransformError):
        T.h_real(BUMP, 1e9)


@pytest.mark.parametrize("m", [0, 1, 2])
def test_rho_q_round_trip(m):
    rho = T.rho_for(BUMP, m)
    w = np.linspace(0, 0.95 * BUMP.support_w, 20)
    assert np.max(np.abs(T.q_from_rho(rho, w) - T.q_from_hhat(BUMP)(w))) < 1e-6
    assert np.all(rho(np.array([1.01, 2.0]) * BUMP.support_w) == 0)


@pytest.mark.parametrize("m", [0, 1, 2])
@pytest.mark.parametrize("r", [0.0, 1.3])
def test_selberg_transform_recovers_h(m, r):
    v = T.selberg_transform(BUMP, m, r)
    assert abs(v - T.h_real(BUMP, r)) < 1e-10


def test_pointpair_invariance():
    # f(gz, gw) = f(z, w) for g in SL_2(R) up to the automorphy phase, which cancels for m = 0
    z, w = 0.3 + 1.1j, -0.2 + 0.9j
    a, b, c, d = 2.0, 1.0, 1.0, 1.0
    g = lambda x: (a * x + b) / (c * x + d)  # noqa: E731
    assert abs(T.pointpair_eval(BUMP, 0, g(z), g(w)) - T.pointpair_eval(BUMP, 0, z, w)) < 1e-12
    with pytest.raises(T.TransformError):
        T.pointpair_eval(BUMP, 0, -1j, w)


@pytest.mark.parametrize("fam,a", [("bump", 2.0), ("hann2", 1.5)])
def test_identity_orbital_geometric_vs_spectral(fam, a):
    tf = T.TestFunction(fam, a)
    spec, tail = T.orbital_identity(tf)
    assert abs(spec - T.orbital_identity_geometric(tf, 0)) < 1e-8 + tail


@pytest.mark.parametrize("ell", [0.5, 1.2, 1.9])
def test_hyperbolic_orbital_direct(ell):
    assert math.isclose(2 * T.orbital_hyperbolic_direct(BUMP, ell), T.orbital_hyperbolic(BUMP, ell), rel_tol=1e-9)


def test_hyperbolic_orbital_support():
    assert T.orbital_hyperbolic(BUMP, 2.0) == 0.0
    assert T.orbital_hyperbolic_direct(BUMP, 2.5) == 0.0
    with pytest.raises(T.TransformError):
        T.orbital_hyperbolic(BUMP, 0.0)


def test_h_tilde_real_for_m0_only():
    assert abs(T.h_tilde(BUMP, 1.0, 0).imag) < 1e-12
    assert abs(T.h_tilde(BUMP, 1.0, 2).imag) > 1e-6


def test_h_tilde_singular_point():
    with pytest.raises(T.TransformError):
        T.h_tilde(BUMP, 2 * math.pi + 1e-5, 1)
