import cmath
import math

import numpy as np
import pytest

from tauspec import monodromy as mo
from tauspec.errors import ChartError, DomainError
from tauspec.kiev import MonodromyPoint as MP

from conftest import rel


def random_point(rng, chart="I"):
    s = complex(rng.uniform(0.05, 0.45), rng.uniform(-0.2, 0.2))
    m = rng.uniform(-2.5, 2.5)
    eta = complex(rng.uniform(0, 4 * math.pi), rng.uniform(-0.3, 0.3))
    return MP(s, eta, chart=chart, m=m)


def test_eta_tilde_massless_is_identity():
    assert abs(mo.eta_tilde(0.2 + 0.1j, 0.0, 0.7) - 0.7) < 1e-15


def test_eta_tilde_involution():
    s, m, eta = 0.2 + 0.1j, 0.3, 0.7
    back = mo.eta_from_tilde(s, m, mo.eta_tilde(s, m, eta))
    k = (back - eta) / (4 * math.pi)
    assert abs(k - round(k.real)) < 1e-13


def test_eta_tilde_direct_formula():
    direct = 0.7 - 2j * cmath.log(cmath.sin(math.pi * 0.7) / cmath.sin(math.pi * 0.1))
    assert abs(mo.eta_tilde(0.2, 0.3, 0.7) - direct) < 1e-14
    e = cmath.exp(0.5j * mo.eta_tilde(0.2, 0.3, 0.7))
    assert rel(e, cmath.exp(0.35j) * math.sin(0.7 * math.pi) / math.sin(0.1 * math.pi)) < 1e-14


def test_eta_tilde_chart_singularity():
    with pytest.raises(ChartError):
        mo.eta_tilde(0.15, 0.3, 0.5)


@pytest.mark.parametrize("chart", ["I", "II"])
def test_fricke_relation(rng, chart):
    for _ in range(100):
        tp = mo.trace_coordinates(random_point(rng, chart))
        assert abs(mo.fricke_residual(tp)) < 1e-12 * max(1.0, abs(tp.p_AB) ** 2, abs(tp.p_B) ** 2)


def test_traces_match_explicit_matrices(rng):
    for chart in ("I", "II"):
        for _ in range(20):
            pt = random_point(rng, chart)
            tp = mo.trace_coordinates(pt)
            A, B = mo.matrix_A(pt), mo.matrix_B(pt)
            assert abs(np.linalg.det(B) - 1) < 1e-12
            assert rel(np.trace(A), tp.p_A) < 1e-12
            assert abs(np.trace(B) - tp.p_B) < 1e-12 * max(1, abs(tp.p_B))
            assert abs(np.trace(A @ B) - tp.p_AB) < 1e-12 * max(1, abs(tp.p_AB))
            assert abs(np.trace(mo.matrix_0(pt)) - tp.p_0) < 1e-11


def test_massless_commuting_case():
    pt = MP(0.2 + 0.1j, 0.9, m=0.0)
    tp = mo.trace_coordinates(pt)
    A, B = mo.matrix_A(pt), mo.matrix_B(pt)
    assert np.allclose(A @ B, B @ A, atol=1e-13)
    assert abs(tp.p_B - 2 * cmath.cos(0.45)) < 1e-13
    assert abs(tp.p_0 - 2) < 1e-15


def test_chart_consistency(rng):
    for _ in range(20):
        pt = random_point(rng)
        et = mo.eta_tilde(pt.sigma, pt.m, pt.eta)
        a = mo.trace_coordinates(pt)
        b = mo.trace_coordinates(MP(pt.sigma, et, chart="II", m=pt.m))
        for u, v in zip((a.p_A, a.p_B, a.p_AB, a.p_0), (b.p_A, b.p_B, b.p_AB, b.p_0)):
            assert abs(u - v) < 1e-12 * max(1.0, abs(u))


def test_f_ratios_chart_independent(rng):
    for _ in range(20):
        pt = random_point(rng)
        twin = MP(pt.sigma, mo.eta_tilde(pt.sigma, pt.m, pt.eta), chart="II", m=pt.m)
        for kind in ("B21", "B12", "C21", "C12"):
            a, b = mo.f_ratio(kind, pt), mo.f_ratio(kind, twin)
            assert abs(a - b) < 1e-11 * max(1.0, abs(a))
        assert rel(mo.f_ratio_B21_eta_form(pt), mo.f_ratio("B21", pt)) < 1e-12


def test_b_cycle_negative_mass():
    s, m = 0.3j, -1.7
    for k in range(-2, 3):
        assert abs(mo.normalizability_residual("B", -1, MP(s, 2 * math.pi * k, m=m))) < 1e-14
    assert abs(mo.normalizability_residual("B", -1, MP(s, 1.0, m=m))) > 1e-2
    r = mo.normalizability_residual("B", -1, MP(s, 0.8, m=m))
    assert rel(r, -cmath.exp(1j * math.pi * 1.7) * math.sin(0.4) / cmath.sin(2 * math.pi * s)) < 1e-13


def test_b_cycle_positive_mass():
    s, m = 0.3j, 1.7
    for k in range(-2, 3):
        pt = MP(s, 2 * math.pi * k, chart="II", m=m)
        assert abs(mo.normalizability_residual("B", 1, pt)) < 1e-14
    r = mo.normalizability_residual("B", 1, MP(s, 0.8, chart="II", m=m))
    assert rel(r, -cmath.exp(1j * math.pi * m) * math.sin(0.4) / cmath.sin(2 * math.pi * s)) < 1e-13


def test_c_cycle_conditions():
    s, m = 0.2 + 0.25j, 1.4
    cos = lambda x: cmath.cos(math.pi * x)
    sin = lambda x: cmath.sin(math.pi * x)
    # e^{i eta~ - 2 pi i s} equal to cos(s+m/2)/cos(s-m/2) or -sin(s+m/2)/sin(s-m/2)
    for w in (cos(s + m / 2) / cos(s - m / 2), -sin(s + m / 2) / sin(s - m / 2)):
        eta_t = -1j * cmath.log(w * cmath.exp(2j * math.pi * s))
        pt = MP(s, eta_t, chart="II", m=m)
        assert abs(mo.normalizability_residual("C", 1, pt)) < 1e-12
    assert abs(mo.normalizability_residual("C", 1, MP(s, 0.3, chart="II", m=m))) > 1e-3


def test_a_cycle_is_reciprocal():
    pt = MP(0.2 + 0.25j, 0.7, m=-1.3)
    assert rel(mo.normalizability_residual("A", -1, pt) * mo.f_ratio("B12", pt), 1) < 1e-14


def test_argument_checks():
    pt = MP(0.2j, 0.3, m=1.2)
    with pytest.raises(DomainError):
        mo.normalizability_residual("D", 1, pt)
    with pytest.raises(DomainError):
        mo.normalizability_residual("B", 0, pt)
    with pytest.raises(DomainError):
        mo.trace_coordinates(MP(0.5, 0.3, m=1.2))
    with pytest.raises(DomainError):
        mo.trace_coordinates(MP(0.2j, 0.3))
