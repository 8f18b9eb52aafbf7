import math

import numpy as np
import pytest
from scipy import special

from tauspec import oracle
from tauspec.errors import DomainError

from conftest import rel

EULER_GAMMA = 0.5772156649015329


def nome_tau(q):
    return 1j * (-math.log(q) / (2 * math.pi))


def test_sqrt6_direct_diagonalization():
    r = oracle.lame_spectrum_direct(-math.sqrt(6), 2, 1.0, 1)
    assert rel(r["+"].energies[0], 48.43513819950) < 1e-9
    assert rel(r["-"].energies[0], 91.8587662451245) < 1e-9


def test_basis_doubling_at_sqrt6_point():
    m = -math.sqrt(6)
    for g in (m * m + m, m * m - m):
        e40 = oracle.lame_operator_spectrum(g, 1j, 2, basis=40).energies
        e80 = oracle.lame_operator_spectrum(g, 1j, 2, basis=80).energies
        assert np.max(np.abs(e40 - e80)) < 1e-10


def test_case_two_matches_case_one_at_unit_modulus():
    m = 2.5
    a = oracle.lame_spectrum_direct(m, 1, 1.0, 3)
    b = oracle.lame_spectrum_direct(m, 2, 1.0, 3)
    for sign in a:
        assert np.max(np.abs(a[sign].energies - b[sign].energies)) < 1e-8


def test_spectrum_is_increasing_and_simple():
    spec = oracle.lame_operator_spectrum(3.75, 1.2j, 5)
    assert np.all(np.diff(spec.energies) > 1e-6)
    assert spec.convergence < 1e-10


def test_small_q_limit():
    m, q = 2.5, 1e-9
    E = oracle.lame_spectrum_direct(m, 1, -math.log(q) / (2 * math.pi), 3)["-"].energies
    for k in range(3):
        target = math.pi ** 2 * (m + k) ** 2 - math.pi ** 2 * m * (m - 1) / 3
        assert abs(E[k] - target) < 1e-5 * target


def test_perturbative_energy_at_zero_q():
    m, k = 2.5, 1
    assert oracle.pt_perturbative_energy(m, k, 0.0) == pytest.approx(
        math.pi ** 2 * (m + k) ** 2 - math.pi ** 2 * m * (m - 1) / 3, rel=1e-15)


@pytest.mark.parametrize("m, k", [(2.5, 0), (2.5, 1), (3.0, 0), (3.0, 2)])
def test_first_order_matrix_element(m, k):
    assert oracle.pt_matrix_element(m, k) == pytest.approx(0.5 + m * (m - 1) / (2 * ((m + k) ** 2 - 1)), rel=1e-12)


@pytest.mark.parametrize("m, k", [(2.5, 0), (2.5, 1), (3.0, 0)])
def test_perturbative_agreement(m, k):
    q = 1e-3
    E = oracle.lame_operator_spectrum(m * (m - 1), nome_tau(q), 3).energies[k]
    assert rel(oracle.pt_perturbative_energy(m, k, q), E) < 3e-5


def test_perturbative_pole():
    with pytest.raises(DomainError):
        oracle.pt_perturbative_energy(1.0, 0, 1e-3)


def test_walls_leading_order():
    for k in (1, 2, 3):
        kappa = oracle.walls_quantization_kappa(2.5, 0.01j, k)
        assert abs(kappa / 0.01j - k) < 0.05 * k


@pytest.mark.parametrize("k", [0, 1])
def test_walls_subleading_series(k):
    m = 2.0
    g = special.digamma(m) + EULER_GAMMA
    for tau_hat in (0.1j, 0.05j):
        tau = -1 / tau_hat
        sigma = (-(k + 1) / (2 * tau) - 1j * (k + 1) * g / (math.pi * tau ** 2)
                 + 2 * (k + 1) * g ** 2 / (math.pi ** 2 * tau ** 3))
        kappa = oracle.walls_quantization_kappa(m, tau_hat, k + 1)
        assert abs(kappa - 2 * sigma) < 10 * (k + 1) ** 4 * abs(tau_hat) ** 4


def test_walls_rejects_large_tau_hat():
    with pytest.raises(DomainError):
        oracle.walls_quantization_kappa(2.0, 0.5j, 1)


def test_mathieu_reference_levels():
    spec = oracle.mathieu_spectrum_direct(1.0, 3)
    ref = [3.059174596901458, 5.285125967179523, 7.714579572992077]
    assert np.max(np.abs(spec.energies - ref)) < 1e-6
    assert spec.convergence < 1e-6


def test_mathieu_monotone_in_t():
    e = [oracle.mathieu_spectrum_direct(t, 1).energies[0] for t in (0.5, 1.0, 2.0)]
    assert e[0] < e[1] < e[2]


def test_mathieu_box_size_independence():
    a = oracle.mathieu_spectrum_direct(1.0, 2).energies
    b = oracle.mathieu_spectrum_direct(1.0, 2, oracle.DiscretizationSpec("finite-difference", 2 ** 13, 12.0)).energies
    assert np.max(np.abs(a - b)) < 1e-8


def test_discretization_validation():
    with pytest.raises(DomainError):
        oracle.DiscretizationSpec("spectral")
    with pytest.raises(DomainError):
        oracle.DiscretizationSpec(size=0)
    with pytest.raises(DomainError):
        oracle.exponent(-1.0)
