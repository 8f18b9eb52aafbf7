import math

import numpy as np
import pytest

from tauspec import kiev, oracle, quantize
from tauspec.errors import DomainError, SearchWindowError
from tauspec.kiev import MonodromyPoint as MP

from conftest import rel

MATHIEU_T1 = [3.059174596901458, 5.285125967179523, 7.714579572992077]


@pytest.fixture(scope="module")
def mathieu_t1():
    return quantize.mathieu_levels(1.0, 3)


def test_mathieu_levels_against_oracle(mathieu_t1):
    ref = oracle.mathieu_spectrum_direct(1.0, 3).energies
    for lv, e in zip(mathieu_t1, ref):
        assert abs(lv.energy - e) < 1e-6
        assert lv.method == "tau"
        assert lv.diagnostics["residual"] < 1e-10
        assert lv.energy > 0


def test_mathieu_levels_sorted_and_real(mathieu_t1):
    energies = [lv.energy for lv in mathieu_t1]
    assert energies == sorted(energies)
    assert all(isinstance(e, float) for e in energies)


def test_mathieu_ground_state_monotone_in_t():
    e = [quantize.mathieu_levels(t, 1)[0].energy for t in (0.5, 1.0, 2.0)]
    assert e[0] < e[1] < e[2]


def test_mathieu_rejects_bad_t():
    with pytest.raises(DomainError):
        quantize.mathieu_levels(-1.0, 1)
    with pytest.raises(SearchWindowError):
        quantize.mathieu_levels(1.0, 3, s_max=1.0)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_ns_quantization_pure(n, mathieu_t1):
    lv = quantize.ns_quantize("pure", {"t": 1.0}, n)
    assert abs(lv.energy - mathieu_t1[n - 1].energy) < 1e-6
    assert abs(lv.root - mathieu_t1[n - 1].root) < 1e-6
    assert lv.diagnostics["residual"] < 1e-10


def test_sqrt6_truncation_orders():
    m = -math.sqrt(6)
    r3 = quantize.torus_levels_case2(m, 1.0, 1, N=3)
    assert abs(r3["+"][0].energy - 48.43513749440) < 5e-10
    assert abs(r3["-"][0].energy - 91.8587660448900) < 5e-10
    r5 = quantize.torus_levels_case2(m, 1.0, 1, N=5)
    assert abs(r5["+"][0].energy - 48.43513819947) < 5e-10
    assert abs(r5["-"][0].energy - 91.8587662451199) < 5e-10
    for sign in "+-":
        assert r5[sign][0].diagnostics["eta"] in (0.0, 2 * math.pi)


def test_case2_positive_mass_and_interleaving():
    m = 2.3
    r = quantize.torus_levels_case2(m, 1.0, 2, oracle_check=True)
    ref = oracle.lame_spectrum_direct(m, 2, 1.0, 2)
    for sign in "+-":
        for lv, e in zip(r[sign], ref[sign].energies):
            assert abs(lv.energy - e) < 1e-6 * e
    assert r["+"][0].energy > r["-"][0].energy


def test_case2_rejects_small_mass():
    with pytest.raises(DomainError):
        quantize.torus_levels_case2(0.5, 1.0, 1)


def test_case1_against_oracle_and_first_order():
    m = 2.3
    q = 1e-3
    ft = -math.log(q) / (2 * math.pi)
    levels = quantize.torus_levels_case1(m, ft, 2, k_min=0)
    ref = oracle.lame_spectrum_direct(m, 1, ft, 3)["-"].energies
    for lv in levels:
        assert abs(lv.energy - ref[lv.index]) < 1e-6 * ref[lv.index]
        assert rel(lv.energy, oracle.pt_perturbative_energy(m, lv.index, q)) < 3e-5
        assert lv.diagnostics["residual"] < 1e-10
    at_one = quantize.torus_levels_case1(m, 1.0, 1)
    assert abs(at_one[0].energy - oracle.lame_spectrum_direct(m, 1, 1.0, 2)["-"].energies[1]) < 1e-6


def test_case1_half_integer_mass_is_degenerate():
    with pytest.raises(DomainError):
        quantize.torus_levels_case1(2.5, 1.0, 1)
    with pytest.raises(DomainError):
        quantize.torus_levels_case1(0.8, 1.0, 1)


@pytest.mark.parametrize("sign", ["-", "+"])
@pytest.mark.parametrize("s", [0.3, 0.3j, 0.2 + 0.1j])
def test_eta_seed_error_is_second_order_in_q(sign, s):
    m = 2.2
    errors = []
    for q in (1e-4, 2e-4):
        tau = 1j * (-math.log(q) / (2 * math.pi))
        errors.append(abs(quantize._wrap_4pi(quantize.eta_seed(sign, s, m, tau) - quantize.eta_star(sign, s, m, tau)["eta"])))
    # small against the first-order term itself, and quadrupling when q doubles
    first = 16 * abs(s) * m * m * (m + 1) ** 2 / abs(1 - 4 * s * s) ** 2 * 1e-4
    assert errors[0] < 0.05 * first
    assert 3.5 < errors[1] / errors[0] < 4.5


def test_eta_seed_printed_exponent_leaves_first_order_error():
    s, m = 0.3, 2.2
    errors = []
    for q in (1e-4, 2e-4):
        tau = 1j * (-math.log(q) / (2 * math.pi))
        errors.append(abs(quantize._wrap_4pi(quantize.eta_seed("-", s, m, tau, printed=True)
                                             - quantize.eta_star("-", s, m, tau)["eta"])))
    # without the factor sigma the seed misses 16 (1 - sigma) m^2 (m-1)^2/(1-4 sigma^2)^2 q
    c = 16 * (1 - s) * m * m * (m - 1) ** 2 / (1 - 4 * s * s) ** 2
    assert errors[0] == pytest.approx(c * 1e-4, rel=1e-2)
    assert 1.8 < errors[1] / errors[0] < 2.2


@pytest.mark.parametrize("sign,s", [("-", 0.3), ("+", 0.2)])
def test_eta_star_equals_ns_prediction(sign, s):
    r = quantize.eta_star(sign, s, 2.2, 1.2j)
    assert abs(r["difference"]) < 1e-8
    assert r["residual"] < 1e-9


def test_eta_star_plus_gap_is_ns_truncation():
    # at sigma = 0.3 the m + 1/2 NS series converges slowly; the gap must shrink with its order
    gaps = [abs(quantize.eta_star("+", 0.3, 2.2, 1.2j, ns_order=o)["difference"]) for o in (8, 10, 12)]
    assert gaps[0] > 2 * gaps[1] > 4 * gaps[2]


def test_eta_star_roots_differ_by_sign():
    a = quantize.eta_star("-", 0.3, 2.2, 1.2j)["eta"]
    b = quantize.eta_star("+", 0.3, 2.2, 1.2j)["eta"]
    assert abs(quantize._wrap_4pi(a - b)) > 0.1


def test_hamiltonian_first_order_in_q():
    # Kiev-side H*- at eta*- fitted in q; the linear coefficient must match 2 m^2 (m-1)^2/(1-4 s^2)
    s, m = 0.3, 2.2
    qs = np.geomspace(1e-4, 2e-3, 9)
    ys = []
    for q in qs:
        tau = 1j * (-math.log(q) / (2 * math.pi))
        eta = quantize.eta_star("-", s, m, tau)["eta"]
        H = kiev.hamiltonian_torus_star("-", MP(s, eta, m=m), tau)
        ys.append(((H / (4 * math.pi ** 2) + s * s) / q).real)
    c = np.polynomial.polynomial.polyfit(qs, ys, 5)
    assert rel(c[0], 2 * m * m * (m - 1) ** 2 / (1 - 4 * s * s)) < 1e-6


def test_walls_formula_matches_ns_roots():
    tau_hat = 0.1j
    frak_t = 1 / abs(tau_hat)
    for m, sign in ((-1.5, "-"), (-2.5, "+")):
        mu = m - 0.5 if sign == "-" else m + 0.5
        for n in (0, 1):
            lv = quantize.ns_quantize("nstar", {"m": m, "frak_t": frak_t, "sign": sign}, n, s_window=(0.01, 0.5))
            kappa = oracle.walls_quantization_kappa(0.5 - mu, tau_hat, n + 1)
            assert abs(2 * lv.root - kappa) < 10 * math.exp(-2 * math.pi / abs(tau_hat)) + 1e-12


def test_ns_quantize_nstar_sqrt6_ground_states():
    m = -math.sqrt(6)
    minus = quantize.ns_quantize("nstar", {"m": m, "frak_t": 1.0, "sign": "-"}, 0)
    plus = quantize.ns_quantize("nstar", {"m": m, "frak_t": 1.0, "sign": "+"}, 0)
    assert abs(minus.energy - 91.8587662451245) < 1e-6
    assert abs(plus.energy - 48.43513819950) < 1e-6


def test_ns_quantize_rejects_unknown_theory():
    with pytest.raises(DomainError):
        quantize.ns_quantize("su3", {}, 1)
