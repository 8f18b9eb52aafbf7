import numpy as np
import pytest

from tauspec import nekrasov as nk
from tauspec.errors import DomainError, PoleError
from tauspec.partitions import EMPTY, Partition, enumerate_partitions, partition_pairs

from conftest import rel


def brute_instanton(a, alpha, e1, e2, k):
    """Coefficient of q^k (or t^k when alpha is None) summed pair by pair."""
    total = 0j
    avals = (a, -a)
    for pair in partition_pairs(k):
        term = 1.0 + 0j
        for i in range(2):
            for j in range(2):
                x = avals[i] - avals[j]
                term /= nk.nekrasov_factor(pair[i], pair[j], x, e1, e2)
                if alpha is not None:
                    term *= nk.nekrasov_factor(pair[i], pair[j], x + alpha, e1, e2)
        total += term
    return total


def test_factor_of_empty_pair_is_one():
    assert nk.nekrasov_factor(EMPTY, EMPTY, 0.3 + 0.2j, 1.1, -0.4) == 1


def test_factor_of_single_box():
    x = 0.3 + 0.2j
    assert rel(nk.nekrasov_factor(Partition((1,)), EMPTY, x, 1.1, -0.4), x) < 1e-15


def test_conjugation_identity(rng):
    diagrams = [p for ps in enumerate_partitions(3).values() for p in ps]
    for _ in range(30):
        lam = diagrams[rng.integers(len(diagrams))]
        mu = diagrams[rng.integers(len(diagrams))]
        e1, e2 = rng.uniform(0.4, 1.3), -rng.uniform(0.2, 0.9)
        a, alpha = complex(rng.uniform(0.1, 0.5), rng.uniform(0.1, 0.3)), rng.uniform(0.2, 1.2)
        lhs = nk.nekrasov_factor(lam, mu, 2 * a + alpha, e1, e2)
        rhs = (-1) ** (lam.weight + mu.weight) * nk.nekrasov_factor(mu, lam, e1 + e2 - 2 * a - alpha, e1, e2)
        assert rel(lhs, rhs) < 1e-12


def test_nstar_first_coefficient_closed_form():
    a, al, e1, e2 = 0.31 + 0.1j, 0.7, 1.1, -0.37
    Z = nk.instanton_sum_nstar(nk.OmegaParams(a, al, e1, e2), 3)
    expected = (2 * (al - e1) * (al - e2) * (-4 * a * a + al * al - al * e1 - al * e2 + e1 * e1 + 2 * e1 * e2 + e2 * e2)
                / (e1 * e2 * (-2 * a + e1 + e2) * (2 * a + e1 + e2)))
    assert Z[0] == 1
    assert rel(Z[1], expected) < 1e-12


def test_nstar_massless_is_inverse_phi_squared():
    Z = nk.instanton_sum_nstar(nk.OmegaParams(0.27 + 0.05j, 0.0, 0.9, -0.45), 6)
    assert np.allclose(Z.coeffs, nk.phi_power_series(-2, 6).coeffs, rtol=1e-12, atol=1e-12)


def test_nstar_reflection_symmetry():
    a, al, e1, e2 = 0.22 + 0.13j, 0.61, 0.8, 0.35
    Z1 = nk.instanton_sum_nstar(nk.OmegaParams(a, al, e1, e2), 5).coeffs
    Z2 = nk.instanton_sum_nstar(nk.OmegaParams(a, e1 + e2 - al, e1, e2), 5).coeffs
    assert np.max(np.abs(Z1 - Z2)) < 1e-12 * np.max(np.abs(Z1))


def test_a_reflection_symmetry():
    for alpha in (None, 0.45):
        if alpha is None:
            Z1 = nk.instanton_sum_pure(0.3 + 0.1j, 1.0, -0.6, 5).coeffs
            Z2 = nk.instanton_sum_pure(-0.3 - 0.1j, 1.0, -0.6, 5).coeffs
        else:
            Z1 = nk.instanton_sum_nstar(nk.OmegaParams(0.3 + 0.1j, alpha, 1.0, -0.6), 5).coeffs
            Z2 = nk.instanton_sum_nstar(nk.OmegaParams(-0.3 - 0.1j, alpha, 1.0, -0.6), 5).coeffs
        assert np.max(np.abs(Z1 - Z2)) < 1e-12 * np.max(np.abs(Z1))


def test_brute_force_agreement():
    a, al, e1, e2 = 0.19 + 0.07j, 0.83, 1.2, -0.41
    Z = nk.instanton_sum_nstar(nk.OmegaParams(a, al, e1, e2), 4).coeffs
    P = nk.instanton_sum_pure(a, e1, e2, 4).coeffs
    for k in range(5):
        assert rel(Z[k], brute_instanton(a, al, e1, e2, k)) < 1e-12
        assert rel(P[k], brute_instanton(a, None, e1, e2, k)) < 1e-12


def test_pure_selfdual_closed_forms():
    s = 0.3
    P = nk.selfdual_block_pure(s, 3).coeffs
    assert P[0] == 1
    assert rel(P[1], 1 / (2 * s * s)) < 1e-12
    assert rel(P[2], (8 * s * s + 1) / (4 * s * s * (4 * s * s - 1) ** 2)) < 1e-12
    assert rel(P[3], brute_instanton(s, None, 1.0, -1.0, 3)) < 1e-12


def test_torus_selfdual_block():
    s, m = 0.21, 1.4
    T = nk.selfdual_block_torus(s, m, 3).coeffs
    assert rel(T[1], 1 + (m * m - 1) * m * m / (2 * s * s)) < 1e-12
    phi = nk.phi_power_series(1 - 2 * m * m, 2).coeffs
    Zk = [brute_instanton(s, m, -1.0, 1.0, k) for k in range(3)]
    q2 = phi[2] * Zk[0] + phi[1] * Zk[1] + phi[0] * Zk[2]
    assert rel(T[2], q2) < 1e-12


def test_torus_block_massless_is_inverse_phi():
    T = nk.selfdual_block_torus(0.23 + 0.1j, 0.0, 6).coeffs
    assert np.allclose(T, nk.phi_power_series(-1, 6).coeffs, rtol=1e-12, atol=1e-12)


def test_vectorized_blocks_match_scalar():
    sig = np.array([0.21, 0.3j, 0.2 + 0.4j])
    V = nk.selfdual_blocks_torus(sig, 1.3, 4)
    for i, s in enumerate(sig):
        assert np.allclose(V[i], nk.selfdual_block_torus(s, 1.3, 4).coeffs, rtol=1e-13)
    W = nk.selfdual_blocks_pure(sig, 4)
    for i, s in enumerate(sig):
        assert np.allclose(W[i], nk.selfdual_block_pure(s, 4).coeffs, rtol=1e-13)


def test_pole_guard():
    with pytest.raises(PoleError):
        nk.OmegaParams(0.1, 0.2, 0.0, 1.0)
    with pytest.raises(PoleError):
        nk.instanton_sum_pure(0.5, 1.0, -1.0, 2)
    with pytest.raises(DomainError):
        nk.selfdual_block_torus(0.5, 1.2, 2)


def nsi2s_q2(s, mu):
    u = 4 * mu * mu - 1
    return (0.75 * u + u * u / 64 * (3 * u * u / (4 * (1 - 4 * s * s) ** 2) - u * u / (1 - 4 * s * s) ** 3
                                     + (16 * mu ** 4 - 72 * mu * mu - 15) / (4 * (4 * s * s - 1))
                                     + (9 - 4 * mu * mu) ** 2 / (16 * (1 - s * s))))


def test_ns_pure_first_coefficient():
    s = 0.1 + 0.3j
    F, _ = nk.ns_instanton_coefficients("pure", s, None, 4)
    assert rel(F[1], -2 / (1 - 4 * s * s)) < 1e-12


def test_ns_nstar_printed_coefficients():
    s, mu = 0.2j, 1.3
    F, _ = nk.ns_instanton_coefficients("nstar", s, mu, 4)
    q1 = (4 * mu * mu - 1) * (3 + 4 * mu * mu - 16 * s * s) / (8 * (1 - 4 * s * s))
    assert rel(F[1], q1) < 1e-12
    assert rel(F[2], nsi2s_q2(s, mu)) < 1e-12


def test_ns_nstar_trivial_at_half_mass():
    F, _ = nk.ns_instanton_coefficients("nstar", 0.3 + 0.2j, 0.5, 3)
    assert abs(F[1]) < 1e-12


def test_ns_extrapolation_matches_exact_limit():
    for theory, mu in (("pure", None), ("nstar", 1.3)):
        s = 0.2 + 1.3j
        F, dF = nk.ns_instanton_coefficients(theory, s, mu, 6)
        G, dG = nk.ns_instanton_circle_mean(theory, s, mu, 6)
        assert np.max(np.abs(F - G) / np.abs(F + (F == 0))) < 1e-9
        h = 1e-5
        Fp, _ = nk.ns_instanton_coefficients(theory, s + h, mu, 6)
        Fm, _ = nk.ns_instanton_coefficients(theory, s - h, mu, 6)
        assert np.max(np.abs((Fp - Fm) / (2 * h) - dF)) < 1e-7 * np.max(np.abs(dF))


def test_ns_free_energy_derivatives():
    s, mu, q = 0.3j + 0.05, 1.7, 0.01
    F = nk.ns_free_energy("nstar", s, mu, q, 8)
    h = 1e-5
    Fs = [nk.ns_free_energy("nstar", s + d, mu, q, 8).value for d in (-h, h)]
    assert rel((Fs[1] - Fs[0]) / (2 * h), F.d_sigma) < 1e-7
    lq = np.log(q)
    Fx = [nk.ns_free_energy("nstar", s, mu, np.exp(lq + d), 8).value for d in (-h, h)]
    assert rel((Fx[1] - Fx[0]) / (2 * h), F.x_d_x) < 1e-7
