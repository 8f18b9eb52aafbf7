import cmath
import math

import mpmath
import numpy as np
import pytest

from tauspec import specfun as sf
from tauspec.errors import DomainError

from conftest import rel

TWO_PI_I = 2j * math.pi


def test_log_gamma_simple_values():
    assert abs(sf.log_gamma(1)) < 1e-15
    assert rel(sf.log_gamma(0.5), 0.5 * math.log(math.pi)) < 1e-14


def test_log_gamma_against_shifted_recurrence():
    z = 3.7 + 2.1j
    shifted = complex(mpmath.loggamma(z + 8)) - sum(cmath.log(z + k) for k in range(8))
    assert rel(sf.log_gamma(z), shifted) < 1e-13


def test_log_gamma_exponent_matches_gamma(rng):
    for _ in range(40):
        z = complex(rng.uniform(-20, 20), rng.uniform(-20, 20))
        assert rel(cmath.exp(sf.log_gamma(z)), complex(mpmath.gamma(z))) < 1e-13


def test_log_gamma_pole():
    with pytest.raises(DomainError):
        sf.log_gamma(-2)


def test_theta1_vanishes_at_origin():
    assert sf.theta(1, 0.0, 0.3 + 0.7j) == 0


def test_theta1_derivative_at_origin_is_eta_cubed():
    tau = 0.2 + 1.1j
    dtheta = TWO_PI_I * sf.theta(1, 0.0, tau, 1)
    assert rel(dtheta, 2 * math.pi * sf.dedekind_eta(tau) ** 3) < 1e-13


def test_theta3_brute_force_partial_sum():
    z, tau = 0.3, 0.1 + 0.8j
    s = sum(cmath.exp(1j * math.pi * tau * n * n + TWO_PI_I * z * n) for n in range(-60, 61))
    assert rel(sf.theta(3, z, tau), s) < 1e-14


def test_theta_rejects_lower_half_plane():
    with pytest.raises(DomainError):
        sf.theta(3, 0.1, -0.5j)


def test_eta_at_i():
    assert rel(sf.dedekind_eta(1j), math.gamma(0.25) / (2 * math.pi ** 0.75)) < 1e-14


def test_eta_modular_transform():
    tau = 0.2 + 1.1j
    assert rel(sf.dedekind_eta(-1 / tau), cmath.sqrt(-1j * tau) * sf.dedekind_eta(tau)) < 1e-13


def test_eta_phi_consistency():
    tau = 0.1 + 0.9j
    eta, phi, _ = sf.eta_phi(tau)
    assert rel(eta, cmath.exp(TWO_PI_I * tau / 24) * phi) < 1e-14
    prod = np.prod([1 - cmath.exp(TWO_PI_I * tau * k) for k in range(1, 200)])
    assert rel(phi, prod) < 1e-13


def test_eta1_large_imaginary_tau():
    assert rel(sf.eta1(8j), math.pi ** 2 / 6) < 1e-12


def test_eta1_is_log_derivative_of_eta():
    tau, h = 0.15 + 1.05j, 1e-4
    d = (cmath.log(sf.dedekind_eta(tau + h)) - cmath.log(sf.dedekind_eta(tau - h))) / (2 * h)
    assert rel(sf.eta1(tau), -TWO_PI_I * d) < 1e-8


def test_wp_double_pole():
    z = 1e-4
    assert abs(sf.weierstrass(z, 1j)[0] - 1 / z ** 2) < 1e-2


def test_wp_modular():
    z, tau = 0.3, 0.7j
    assert rel(sf.weierstrass(z, tau)[0], tau ** -2 * sf.weierstrass(z / tau, -1 / tau)[0]) < 1e-12


def test_wp_sine_series():
    assert rel(sf.weierstrass(0.25, 2j)[0], sf.wp_sine_series(0.25, 2j, 20)) < 1e-12


def test_wp_lattice_point():
    with pytest.raises(DomainError):
        sf.weierstrass(1.0, 1j)


def test_weierstrass_derivatives_consistent():
    z, tau, h = 0.21 + 0.13j, 0.1 + 0.95j, 1e-3
    wp, wpp, zeta = sf.weierstrass(z, tau)

    def d5(k):
        f = [sf.weierstrass(z + j * h, tau)[k] for j in (-2, -1, 1, 2)]
        return (f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * h)

    assert rel(d5(0), wpp) < 1e-8
    assert rel(-d5(2), wp) < 1e-8


def test_parity(rng):
    for _ in range(30):
        z = complex(rng.uniform(-0.5, 0.5), rng.uniform(-0.3, 0.3))
        tau = complex(rng.uniform(-0.5, 0.5), rng.uniform(0.6, 1.5))
        wp, _, zeta = sf.weierstrass(z, tau)
        wpm, _, zetam = sf.weierstrass(-z, tau)
        assert rel(wpm, wp) < 1e-13
        assert rel(zetam, -zeta) < 1e-13
        assert rel(sf.theta(1, -z, tau), -sf.theta(1, z, tau)) < 1e-13


def test_z_derivatives_against_five_point_stencil(rng):
    h = 1e-3
    for _ in range(10):
        z = complex(rng.uniform(-0.5, 0.5), rng.uniform(-0.2, 0.2))
        tau = complex(rng.uniform(-0.5, 0.5), rng.uniform(0.7, 1.3))
        for kind in (1, 2, 3, 4):
            f = [sf.theta(kind, z + k * h, tau) for k in (-2, -1, 1, 2)]
            fd = (f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * h)
            exact = TWO_PI_I * sf.theta(kind, z, tau, 1)
            assert abs(fd - exact) < 1e-8 * max(1.0, abs(exact))


def test_heat_equation(rng):
    for _ in range(10):
        z = complex(rng.uniform(-0.5, 0.5), rng.uniform(-0.2, 0.2))
        tau = complex(rng.uniform(-0.5, 0.5), rng.uniform(0.7, 1.3))
        for kind in (1, 2, 3, 4):
            assert rel(sf.theta(kind, z, tau, 0, 1), 0.5 * sf.theta(kind, z, tau, 2)) < 1e-12


def test_doubling_identity(rng):
    for _ in range(20):
        z = complex(rng.uniform(-0.5, 0.5), rng.uniform(-0.2, 0.2))
        tau = complex(rng.uniform(-0.5, 0.5), rng.uniform(0.7, 1.3))
        t2 = 2 * tau
        lhs = sf.theta(3, z, t2) ** 2 + sf.theta(2, z, t2) ** 2
        rhs = sf.theta(3, z, tau) * sf.theta(3, 0, tau)
        assert rel(lhs, rhs) < 1e-12


def test_extended_precision_backend(monkeypatch):
    z, tau = 0.17 + 0.05j, 0.3 + 0.9j
    ref = sf.theta(2, z, tau, 2)
    monkeypatch.setenv("TAUSPEC_PRECISION", "extended")
    assert rel(sf.theta(2, z, tau, 2), ref) < 1e-13
