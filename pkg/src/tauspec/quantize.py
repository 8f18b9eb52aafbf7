"""Spectra from tau-function zeros and from NS quantization conditions."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import kiev, nekrasov, specfun
from .errors import ConvergenceError, DomainError, SearchWindowError
from .kiev import MonodromyPoint
from .specfun import TWO_PI_I, as_nome

ROOT_XTOL = 1e-13
REAL_TOL = 1e-9
ROOT_STABILITY = 1e-6  # max |condition| at order N - 2 for an accepted Kiev-side zero
SCAN_STABILITY = 1e-2  # max relative change of d_sigma F between orders N - 2 and N on the scan grid


@dataclass
class SpectralLevel:
    index: int
    root: complex
    energy: float
    method: str
    diagnostics: dict = field(default_factory=dict)


class InterleavingWarning(UserWarning):
    """The even/odd root assignment disagreed with the oracle and was flipped."""


def _real_energy(E: complex, what: str) -> float:
    E = complex(E)
    if abs(E.imag) > 1e-8 * max(1.0, abs(E.real)):
        raise ConvergenceError(f"{what}: energy is not real", energy=E)
    return E.real


def _scan_roots(g, s_lo, s_hi, n_grid, scale_fn=None):
    """Sign changes of Re g on a grid, accepted only where Im g is negligible, refined by brentq."""
    ss = np.linspace(s_lo, s_hi, n_grid)
    vals = [g(s) for s in ss]
    roots = []
    for i in range(n_grid - 1):
        a, b = vals[i].real, vals[i + 1].real
        if a == 0.0:
            roots.append(ss[i])
            continue
        if a * b < 0:
            r = optimize.brentq(lambda s: g(s).real, ss[i], ss[i + 1], xtol=ROOT_XTOL, rtol=1e-15)
            v = g(r)
            scale = scale_fn(r) if scale_fn else 1.0
            if abs(v.imag) < REAL_TOL * max(scale, 1e-300):
                roots.append(r)
    return roots


# ----------------------------------------------------------------------------
# modified Mathieu


def _mathieu_condition(t, n_max, N):
    def g(s):
        ev = kiev.tau_p3(1, MonodromyPoint(1j * s, 0.0), t, n_max, N)
        return ev.value / ev.scale

    return g


def mathieu_levels(t: float, n_levels: int, N: int = kiev.ORDER_DEFAULT, n_max: int = kiev.N_MAX_DEFAULT,
                   s_max: float | None = None) -> list[SpectralLevel]:
    """Levels of -d^2/dx^2 + sqrt(t)(e^x + e^-x).

    Roots s_n > 0 of T1(is, 0, t), which vanishes together with T0(is + 1/2, 0, t),
    and E_n = -t d/dt log T0(i s_n, 0, t).
    """
    if not t > 0:
        raise DomainError("t must be positive")
    g = _mathieu_condition(t, n_max, N)
    # ground state s grows roughly like the WKB turning-point scale; widen until enough roots
    hi = s_max if s_max is not None else 2.0 + 1.5 * n_levels
    lo = 0.02
    roots = _scan_roots(g, lo, hi, int(40 * (hi - lo)) + 20)
    # at small |sigma| and larger t the truncated blocks can manufacture zeros; a genuine
    # zero survives lowering the instanton order by two
    g_low = _mathieu_condition(t, n_max, max(N - 2, 1))
    roots = [r for r in roots if abs(g_low(r)) < ROOT_STABILITY]
    if len(roots) < n_levels:
        raise SearchWindowError(f"found {len(roots)} of {n_levels} roots in s in ({lo}, {hi})", window=(lo, hi))
    levels = []
    for i, s in enumerate(roots[:n_levels]):
        H = kiev.hamiltonian_p3(MonodromyPoint(1j * s, 0.0), t, n_max, N)
        res = abs(g(s))
        levels.append(SpectralLevel(i + 1, 1j * s, _real_energy(-H, "mathieu"), "tau",
                                    {"residual": res, "order": N, "n_max": n_max}))
    levels.sort(key=lambda lv: lv.energy)
    return levels


# ----------------------------------------------------------------------------
# torus, case 2 (B-cycle normalizability)


def _matching(m, eta, nome, N, n_max, chart="I"):
    t2 = nome.doubled()
    th2 = specfun.theta(2, 0.0, t2)
    th3 = specfun.theta(3, 0.0, t2)

    def g(s):
        pt = MonodromyPoint(1j * s, eta, chart=chart, m=m)
        z0 = kiev.dual_partition_torus(0, pt, nome, n_max, N)
        z1 = kiev.dual_partition_torus(0.5, pt, nome, n_max, N)
        return (th2 * z0.value - th3 * z1.value) / max(z0.scale, z1.scale)

    return g


def torus_levels_case2(m: float, frak_t: float, n_levels: int, N: int = kiev.ORDER_DEFAULT,
                       n_max: int = kiev.N_MAX_DEFAULT, s_max: float | None = None,
                       oracle_check: bool = False) -> dict[str, list[SpectralLevel]]:
    """Levels of O-/+ = -d^2/dx^2 + (m^2 -/+ m) wp(x|i/frak_t), |m| > 1.

    Roots of theta2(0|2tau) Z^D_0 - theta3(0|2tau) Z^D_1/2 on sigma = is with eta in {0, 2 pi}
    are sorted; even positions give O+ and odd positions give O-, and
    E-/+ = frak_t^2 (H*-/+ + 2 (m^2 -/+ m) eta1(i frak_t)). For m > 0 the roots
    are taken in the eta-tilde chart, which amounts to the m < 0 problem for -m
    with the two operators exchanged.
    """
    m = float(m)
    if abs(m) <= 1:
        raise DomainError("case 2 needs |m| > 1")
    if not frak_t > 0:
        raise DomainError("frak_t must be positive")
    chart = "I" if m < 0 else "II"
    nome = as_nome(1j * frak_t)
    need = 2 * n_levels
    hi = s_max if s_max is not None else 1.0 + 0.8 * need
    found = []
    for eta in (0.0, 2 * math.pi):
        g = _matching(m, eta, nome, N, n_max, chart)
        for s in _scan_roots(g, 0.02, hi, int(60 * hi) + 20):
            found.append((s, eta, abs(g(s))))
    found.sort()
    if len(found) < need:
        raise SearchWindowError(f"found {len(found)} of {need} roots in (0, {hi})", window=(0.02, hi))
    e1 = specfun.eta1(nome).real

    def energy(sign, s, eta):
        pt = MonodromyPoint(1j * s, eta, chart=chart, m=m)
        g_coup = m * m - m if sign == "-" else m * m + m
        H = kiev.hamiltonian_torus_star(sign, pt, nome, n_max, N)
        return _real_energy(frak_t**2 * (H + 2 * g_coup * e1), "torus case 2")

    # for the eta-tilde chart the roles of the two operators swap
    even, odd = ("+", "-") if m < 0 else ("-", "+")
    out = {"-": [], "+": []}
    for pos, (s, eta, res) in enumerate(found[:need]):
        sign = even if pos % 2 == 0 else odd
        lvl = SpectralLevel(len(out[sign]), 1j * s, energy(sign, s, eta), "tau",
                            {"eta": eta, "chart": chart, "position": pos, "order": N, "n_max": n_max,
                             "residual": res})
        out[sign].append(lvl)
    if oracle_check:
        _validate_interleaving(out, m, frak_t, [f[:2] for f in found[:need]], energy)
    return out


def _validate_interleaving(out, m, frak_t, roots, energy):
    from . import oracle

    ref = oracle.lame_spectrum_direct(m, 2, frak_t, len(out["-"]) + len(out["+"]))
    for sign, levels in out.items():
        for lvl in levels:
            e_ref = ref[sign].energies[lvl.index]
            if abs(lvl.energy - e_ref) > 1e-4 * max(1.0, abs(e_ref)):
                other = "+" if sign == "-" else "-"
                s = lvl.root.imag
                flipped = energy(other, s, lvl.diagnostics["eta"])
                warnings.warn(
                    f"interleaving rule disagrees with the oracle at position {lvl.diagnostics['position']}: "
                    f"{sign} gives {lvl.energy}, {other} gives {flipped}, oracle {e_ref}",
                    InterleavingWarning,
                    stacklevel=3,
                )
                lvl.diagnostics["flipped_from"] = sign
                lvl.diagnostics["alternative_energy"] = flipped


# ----------------------------------------------------------------------------
# torus, case 1 (A-cycle normalizability)


def eta_seed(sign: str, sigma, m, tau, printed: bool = False) -> complex:
    """Small-q root of the matching condition in eta through first order in q.

    - : e^{i eta/2} = -q^{-sigma} Gamma(1-m-2s)Gamma(2s)/(Gamma(1-m+2s)Gamma(-2s)) e^{c- q}
    + : e^{i eta/2} =  q^{-sigma} Gamma(-m-2s)Gamma(2s)/(Gamma(-m+2s)Gamma(-2s)) e^{c+ q}
    with c-/+ = 8 s m^2 (m -/+ 1)^2/(1-4s^2)^2, the q-coefficient of d_sigma F^NS/2.
    printed=True drops the factor s, the form without it leaves an O(q) error.
    """
    nome = as_nome(tau)
    m = complex(m)
    s = complex(sigma)
    lg = specfun.log_gamma
    if sign == "-":
        log_ratio = 1j * math.pi + lg(1 - m - 2 * s) + lg(2 * s) - lg(1 - m + 2 * s) - lg(-2 * s)
    else:
        log_ratio = lg(-m - 2 * s) + lg(2 * s) - lg(-m + 2 * s) - lg(-2 * s)
    mm = m - 1 if sign == "-" else m + 1
    corr = 8 * m * m * mm * mm / (1 - 4 * s * s) ** 2 * nome.q
    if not printed:
        corr = corr * s
    return -2j * (log_ratio - TWO_PI_I * nome.tau * s + corr)


def _solve_eta(sign, sigma, m, nome, N, n_max, seed=None, tol=1e-13):
    """Both eta*-+ are roots of the same chart-I matching condition, told apart by their seeds."""
    t2 = nome.doubled()
    th2 = specfun.theta(2, 0.0, t2)
    th3 = specfun.theta(3, 0.0, t2)

    def f(eta):
        pt = MonodromyPoint(sigma, eta, chart="I", m=m)
        z0 = kiev.dual_partition_torus(0, pt, nome, n_max, N, strict=False)
        z1 = kiev.dual_partition_torus(0.5, pt, nome, n_max, N, strict=False)
        return (th2 * z0.value - th3 * z1.value) / max(z0.scale, z1.scale)

    eta0 = eta_seed(sign, sigma, m, nome) if seed is None else seed
    try:
        eta = optimize.newton(f, eta0, x1=eta0 + 1e-4, tol=tol, maxiter=100)
    except (RuntimeError, OverflowError) as exc:
        raise ConvergenceError("matching-condition secant iteration failed", seed=eta0) from exc
    res = abs(f(eta))
    if not np.isfinite(res) or res > 1e-9:
        raise ConvergenceError("matching condition not satisfied at the returned eta", seed=eta0, last=eta,
                               residual=res)
    return complex(eta), "I", res


def eta_star(sign: str, sigma, m, tau, N: int = kiev.ORDER_DEFAULT, n_max: int = kiev.N_MAX_DEFAULT,
             ns_order: int = 12) -> dict:
    """Root eta*-/+ of the matching condition and its NS prediction.

    The prediction is -i d_sigma F^NS(sigma, m - 1/2, q) for the - root and
    -i d_sigma F^NS(sigma, m + 1/2, q) + 2 pi for the + root (eta is defined modulo 4 pi).
    """
    if sign not in ("-", "+"):
        raise DomainError("sign must be '-' or '+'")
    nome = as_nome(tau)
    m = complex(m)
    eta, _, res = _solve_eta(sign, complex(sigma), m, nome, N, n_max)
    mu = m - 0.5 if sign == "-" else m + 0.5
    ns = nekrasov.ns_free_energy("nstar", sigma, mu, nome.q, N=ns_order, log_x=TWO_PI_I * nome.tau)
    # e^{i eta+/2} = -exp(d_sigma F^NS/2), so the + root sits 2 pi away from -i d_sigma F^NS
    pred = -1j * ns.d_sigma + (0.0 if sign == "-" else 2 * math.pi)
    return {"eta": eta, "ns_prediction": pred, "difference": _wrap_4pi(eta - pred), "residual": res}


def _wrap_4pi(d: complex) -> complex:
    """eta enters through e^{i eta/2}, so it is defined modulo 4 pi."""
    period = 4 * math.pi
    return d - period * round(d.real / period)


def torus_levels_case1(m: float, frak_t: float, k_max: int, N: int = kiev.ORDER_DEFAULT,
                       n_max: int = kiev.N_MAX_DEFAULT, k_min: int = 1) -> list[SpectralLevel]:
    """Levels of O- = -d^2/dx^2 + m(m-1) wp(x|i frak_t), m > 1, from sigma = (m+k)/2.

    E = -H*-(sigma, m, eta*-) - 2 m (m-1) eta1(i frak_t).
    """
    m = float(m)
    if m <= 1:
        raise DomainError("case 1 needs m > 1")
    if abs(2 * m - round(2 * m)) < 1e-9:
        raise DomainError(
            "2m is an integer: every Kiev coefficient on the lattice 2 sigma + Z vanishes at sigma=(m+k)/2 "
            "and eta* runs off to infinity; use a nearby non-half-integer mass or the oracle"
        )
    nome = as_nome(1j * frak_t)
    e1 = specfun.eta1(nome).real
    levels = []
    for k in range(k_min, k_max + 1):
        sigma = (m + k) / 2
        eta, _, res = _solve_eta("-", sigma, m, nome, N, n_max)
        pt = MonodromyPoint(sigma, eta, m=m)
        H = kiev.hamiltonian_torus_star("-", pt, nome, n_max, N)
        E = _real_energy(-H - 2 * m * (m - 1) * e1, "torus case 1")
        levels.append(SpectralLevel(k, eta, E, "tau", {"sigma": sigma, "residual": res, "order": N}))
    return levels


# ----------------------------------------------------------------------------
# NS quantization


def ns_quantize(theory: str, params: dict, n: int, N: int = 8, s_window=None) -> SpectralLevel:
    """Solve d_sigma F^NS = -2 pi i n (pure) or 2 pi i (n+1) (nstar) on sigma = is, s > 0.

    pure params: {"t": t}; E = -t d/dt F^NS.
    nstar params: {"m": m, "frak_t": frak_t, "sign": "-" or "+", "case": 1 or 2};
    mu = m -/+ 1/2 and, with H = 4 pi^2 q d/dq F^NS, case 2 gives
    E = frak_t^2 (H + 2 (m^2 -/+ m) eta1) while case 1 gives E = -H - 2 (m^2 -/+ m) eta1.
    """
    if theory == "pure":
        t = float(params["t"])
        if n < 1:
            raise DomainError("pure levels are labelled by n >= 1")
        # on sigma = is with s > 0 the derivative is -i times an increasing function
        target = -2 * math.pi * n

        def cond_at(s, order):
            return nekrasov.ns_free_energy("pure", 1j * s, None, t, order)

    elif theory == "nstar":
        m = float(params["m"])
        sign = params.get("sign", "-")
        nome = as_nome(1j * float(params["frak_t"]))
        mu = m - 0.5 if sign == "-" else m + 0.5
        target = 2 * math.pi * (n + 1)

        def cond_at(s, order):
            return nekrasov.ns_free_energy("nstar", 1j * s, mu, nome.q, order, log_x=TWO_PI_I * nome.tau)

    else:
        raise DomainError(f"unknown theory {theory!r}")

    def cond(s):
        return cond_at(s, N)

    def h(s):
        return cond(s).d_sigma.imag - target

    def h_or_nan(s):
        # grid points where the NS limit cannot be certified, or where the truncated
        # instanton series is still moving between orders N - 2 and N, are skipped
        try:
            val = cond(s).d_sigma
            low = cond_at(s, max(N - 2, 1)).d_sigma
        except ConvergenceError:
            return math.nan
        if abs(val - low) > SCAN_STABILITY * (1 + abs(val)):
            return math.nan
        return val.imag - target

    if s_window is None:
        # small |sigma| forces tiny NS radii; physical roots sit well away from it
        s_window = (0.25, 2.0 + 1.5 * (n + 1))
    lo, hi = s_window
    ss = np.linspace(lo, hi, int(8 * (hi - lo)) + 2)
    vals = [h_or_nan(s) for s in ss]
    bracket = next(((ss[i], ss[i + 1]) for i in range(len(ss) - 1) if vals[i] * vals[i + 1] <= 0), None)
    if bracket is None:
        raise SearchWindowError(f"no NS root for level {n} in s in {s_window}", window=s_window)
    s = optimize.brentq(h, *bracket, xtol=ROOT_XTOL)
    F = cond(s)
    if theory == "pure":
        E = -F.x_d_x
    else:
        frak_t = float(params["frak_t"])
        g = m * m - m if sign == "-" else m * m + m
        e1 = specfun.eta1(nome)
        H = 4 * math.pi**2 * F.x_d_x
        E = frak_t**2 * (H + 2 * g * e1) if params.get("case", 2) == 2 else -H - 2 * g * e1
    return SpectralLevel(n, 1j * s, _real_energy(E, "ns"), "ns",
                         {"residual": abs(F.d_sigma - 1j * target), "order": N})
