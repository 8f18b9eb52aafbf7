"""Kiev-formula tau functions.

Painleve III_3 (pure SU(2) blocks):

    T_eps(sigma, eta, t) = sum_{n in Z+eps} e^{i n eta} c(2 sigma + 2n) t^{(sigma+n)^2} Z(sigma+n, t),
    c(x) = 1 / (G(1+x) G(1-x)),              eps = 0 (T0) or 1/2 (T1).

One-punctured torus (c=1 blocks with adjoint mass m):

    Z^D_eps(sigma, m, eta, tau) = sum_{n in Z+eps} e^{i n eta} C(2 sigma + 2n) q^{(sigma+n)^2 - 1/24} Z(sigma+n, m, q),
    C(x) = G(1-m+x) G(1-m-x) / (G(1+x) G(1-x)).

Both eps=0 and eps=1/2 shells live on the single lattice x = 2 sigma + Z, so
every coefficient is normalized by its value at x = 2 sigma and the ratios
follow exactly from G(z+1) = Gamma(z) G(z). Barnes G itself is never
evaluated, and the relative normalization of the two shells is exact.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from . import nekrasov, specfun
from .errors import ChartError, ConvergenceError, DomainError
from .specfun import TWO_PI_I, as_nome

N_MAX_DEFAULT = 8
ORDER_DEFAULT = 8
TAIL_TOL = 1e-13
DEGENERATE_TOL = 1e-3


@dataclass(frozen=True)
class MonodromyPoint:
    """Monodromy coordinates (sigma, eta); chart "II" means eta holds eta-tilde."""

    sigma: complex
    eta: complex = 0.0
    chart: str = "I"
    m: complex | None = None

    def __post_init__(self):
        if self.chart not in ("I", "II"):
            raise DomainError(f"chart must be 'I' or 'II', got {self.chart!r}")
        object.__setattr__(self, "sigma", complex(self.sigma))
        object.__setattr__(self, "eta", complex(self.eta))


@dataclass
class KievEvaluation:
    """A Kiev sum and its log-derivatives.

    ``derivs[d]`` is (x d/dx)^d applied to the sum, with x = t or q, so
    ``derivs[0]`` equals ``value``.
    """

    value: complex
    derivs: list = field(default_factory=list)
    n_range: int = 0
    order: int = 0
    tail: float = 0.0
    scale: float = 0.0
    converged: bool = True


def guard_sigma(sigma):
    x = 2 * complex(sigma)
    if abs(x.imag) < DEGENERATE_TOL and abs(x.real - round(x.real)) < DEGENERATE_TOL:
        raise DomainError(f"2*sigma = {x} is within {DEGENERATE_TOL} of an integer; shift sigma or change chart")


# ----------------------------------------------------------------------------
# coefficient ratios


def _gamma_factor(z, inverse: bool):
    """Gamma(z) or 1/Gamma(z) as log-magnitude friendly complex values (0 and inf allowed)."""
    z = complex(z)
    pole = z.imag == 0 and z.real <= 0 and z.real == math.floor(z.real)
    if inverse:
        return 0j if pole else cmath.exp(-complex(special.loggamma(z)))
    return complex("inf") if pole else cmath.exp(complex(special.loggamma(z)))


def _step_up(x, m):
    """c(x+1)/c(x): P3 uses Gamma(-x)/Gamma(1+x); the torus adds Gamma(1-m+x)/Gamma(-m-x)."""
    r = _gamma_factor(-x, False) * _gamma_factor(1 + x, True)
    if m is not None:
        r *= _gamma_factor(1 - m + x, False) * _gamma_factor(-m - x, True)
    return r


def _step_down(x, m):
    """c(x-1)/c(x)."""
    r = _gamma_factor(x, False) * _gamma_factor(1 - x, True)
    if m is not None:
        r *= _gamma_factor(1 - m - x, False) * _gamma_factor(x - m, True)
    return r


def coefficient_ratios(x0, steps, m=None) -> np.ndarray:
    """c(x0 + j)/c(x0) for each integer j in ``steps`` (m=None selects the P3 coefficients)."""
    steps = [int(j) for j in steps]
    jmax = max(max(steps), 0)
    jmin = min(min(steps), 0)
    up = [1.0 + 0j]
    for j in range(jmax):
        up.append(up[-1] * _step_up(x0 + j, m))
    down = [1.0 + 0j]
    for j in range(0, jmin, -1):
        down.append(down[-1] * _step_down(x0 + j, m))
    out = np.array([up[j] if j >= 0 else down[-j] for j in steps], dtype=complex)
    if np.any(~np.isfinite(out)):
        raise DomainError(
            f"Kiev coefficients degenerate on the lattice 2 sigma + Z at x0={x0}, m={m} "
            "(zeros and poles of the Barnes ratios collide)"
        )
    return out


# ----------------------------------------------------------------------------
# generic shell sum


def _shells(eps: float, n_max: int) -> np.ndarray:
    if eps == 0:
        return np.arange(-n_max, n_max + 1, dtype=float)
    return np.arange(-n_max, n_max, dtype=float) + 0.5


def _kiev_sum(theory, sigma, eta, log_x, eps, n_max, N, m, n_derivs, offset=0.0):
    """Sum over shells n in Z+eps with derivatives (x d/dx)^d, d=0..n_derivs."""
    guard_sigma(sigma)
    ns = _shells(eps, n_max)
    steps = np.rint(2 * ns).astype(int)
    ratios = coefficient_ratios(2 * sigma, steps, m)
    keep = ratios != 0
    shifted = sigma + ns
    blocks = np.zeros((ns.size, N + 1), dtype=complex)
    if np.any(keep):
        if theory == "pure":
            blocks[keep] = nekrasov.selfdual_blocks_pure(shifted[keep], N)
        else:
            blocks[keep] = nekrasov.selfdual_blocks_torus(shifted[keep], m, N)
    k = np.arange(N + 1)
    expo = shifted**2 + offset  # leading exponent of x per shell
    # term_{n,k} = e^{i n eta} ratio_n Z_{n,k} x^{expo_n + k}
    logw = 1j * ns * eta + np.log(np.where(keep, ratios, 1.0))
    full = logw[:, None] + log_x * (expo[:, None] + k[None, :])
    terms = np.where(keep[:, None], blocks * np.exp(full), 0.0)
    exps = expo[:, None] + k[None, :]
    derivs = [complex(np.sum(terms * exps**d)) for d in range(n_derivs + 1)]
    shell_mag = np.max(np.abs(terms), axis=1)
    scale = float(np.max(shell_mag)) if shell_mag.size else 0.0
    outer = float(max(shell_mag[0], shell_mag[-1])) if shell_mag.size else 0.0
    tail = outer / scale if scale > 0 else 0.0
    return KievEvaluation(
        value=derivs[0],
        derivs=derivs,
        n_range=n_max,
        order=N,
        tail=tail,
        scale=scale,
        converged=tail < TAIL_TOL,
    )


def _require(ev: KievEvaluation, strict: bool, what: str) -> KievEvaluation:
    if strict and not ev.converged:
        raise ConvergenceError(f"{what}: Kiev shell tail {ev.tail:.2e} above tolerance", tail=ev.tail)
    return ev


# ----------------------------------------------------------------------------
# Painleve III_3


def tau_p3(which: int, pt: MonodromyPoint, t, n_max: int = N_MAX_DEFAULT, N: int = ORDER_DEFAULT,
           n_derivs: int = 0, strict: bool = True) -> KievEvaluation:
    """T0 (which=0) or T1 (which=1) at (sigma, eta) and t, normalized by c(2 sigma)."""
    if which not in (0, 1):
        raise DomainError("which must be 0 or 1")
    log_t = complex(np.log(complex(t)))
    ev = _kiev_sum("pure", pt.sigma, pt.eta, log_t, 0.0 if which == 0 else 0.5, n_max, N, None, n_derivs)
    return _require(ev, strict, "tau_p3")


def hamiltonian_p3(pt: MonodromyPoint, t, n_max: int = N_MAX_DEFAULT, N: int = ORDER_DEFAULT, which: int = 0) -> complex:
    """H = t d/dt log T (term-wise derivative)."""
    ev = tau_p3(which, pt, t, n_max, N, n_derivs=1)
    if abs(ev.value) < 1e-12 * ev.scale:
        raise DomainError("tau function vanishes at this point; H is singular")
    return ev.derivs[1] / ev.value


# ----------------------------------------------------------------------------
# torus


def _torus_args(pt: MonodromyPoint, m=None):
    mass = pt.m if m is None else m
    if mass is None:
        raise DomainError("torus evaluation needs a mass m")
    mass = complex(mass)
    if mass.imag == 0:
        mass = mass.real
    if pt.chart == "I":
        return mass, pt.eta
    # chart II: (m, eta) -> (-m, eta_tilde) leaves the shell ratio invariant
    return -mass, pt.eta


def dual_partition_torus(eps: float, pt: MonodromyPoint, tau, n_max: int = N_MAX_DEFAULT, N: int = ORDER_DEFAULT,
                         n_derivs: int = 0, strict: bool = True, m=None) -> KievEvaluation:
    """Z^D_0 (eps=0) or Z^D_{1/2} (eps=1/2); derivatives are (q d/dq)^d."""
    if eps not in (0, 0.5):
        raise DomainError("eps must be 0 or 1/2")
    nome = as_nome(tau)
    mass, eta = _torus_args(pt, m)
    try:
        ev = _kiev_sum("nstar", pt.sigma, eta, TWO_PI_I * nome.tau, eps, n_max, N, mass, n_derivs,
                       offset=-1.0 / 24.0)
    except ChartError:
        raise
    except DomainError as exc:
        if "degenerate" in str(exc):
            raise ChartError(f"{exc}; transfer to the eta-tilde chart") from exc
        raise
    return _require(ev, strict, "dual_partition_torus")


def theta_ratio_residual(Q, pt, tau, n_max=N_MAX_DEFAULT, N=ORDER_DEFAULT) -> complex:
    nome = as_nome(tau)
    z0 = dual_partition_torus(0, pt, nome, n_max, N)
    z1 = dual_partition_torus(0.5, pt, nome, n_max, N)
    t2 = nome.doubled()
    r = specfun.theta(2, 2 * Q, t2) * z0.value - specfun.theta(3, 2 * Q, t2) * z1.value
    return r / max(z0.scale, z1.scale)


def _theta_ratio(w, t2):
    """theta2(w|2tau)/theta3(w|2tau) and its w-derivative."""
    a = specfun.theta_z(2, w, t2)
    b = specfun.theta_z(3, w, t2)
    da = specfun.theta_z(2, w, t2, 1)
    db = specfun.theta_z(3, w, t2, 1)
    return a / b, (da * b - a * db) / (b * b)


def q_seed(pt: MonodromyPoint, tau) -> complex:
    """Small-q estimate of Q from the asymptotics of the dual partition functions."""
    nome = as_nome(tau)
    mass, eta = _torus_args(pt)
    s = pt.sigma
    lg = specfun.log_gamma
    try:
        log_ratio = lg(-mass + 2 * s) + lg(1 - 2 * s) - lg(1 - mass - 2 * s) - lg(2 * s)
    except DomainError:
        log_ratio = 0.0
    return nome.tau * s + eta / (4 * math.pi) + log_ratio / TWO_PI_I


def reduce_to_cell(Q, tau) -> complex:
    t = as_nome(tau).tau
    v = Q.imag / t.imag
    u = Q.real - v * t.real
    u -= math.floor(u)
    v -= math.floor(v)
    return u + v * t


def q_transcendent(pt: MonodromyPoint, tau, n_max: int = N_MAX_DEFAULT, N: int = ORDER_DEFAULT, seed=None,
                   reduce: bool = True, tol: float = 1e-14, max_iter: int = 60) -> complex:
    """Solve theta2(2Q|2tau)/theta3(2Q|2tau) = Z^D_{1/2}/Z^D_0 for Q by damped Newton."""
    nome = as_nome(tau)
    z0 = dual_partition_torus(0, pt, nome, n_max, N)
    z1 = dual_partition_torus(0.5, pt, nome, n_max, N)
    if abs(z0.value) < 1e-14 * z0.scale:
        raise DomainError("Z^D_0 vanishes; Q is not defined by the ratio")
    rho = z1.value / z0.value
    t2 = nome.doubled()
    Q = complex(q_seed(pt, nome) if seed is None else seed)
    Q = _newton_theta_ratio(Q, rho, t2, tol, max_iter)
    return reduce_to_cell(Q, nome) if reduce else Q


def _newton_theta_ratio(Q, rho, t2, tol, max_iter):
    f, df = _theta_ratio(2 * Q, t2)
    res = f - rho
    for _ in range(max_iter):
        if abs(res) <= tol * max(1.0, abs(rho)):
            return Q
        step = -res / (2 * df)
        lam = 1.0
        while lam > 1e-6:
            Qn = Q + lam * step
            fn, dfn = _theta_ratio(2 * Qn, t2)
            if abs(fn - rho) < abs(res):
                break
            lam /= 2
        Q, f, df, res = Qn, fn, dfn, fn - rho
    if abs(res) <= 1e3 * tol * max(1.0, abs(rho)):
        return Q
    raise ConvergenceError("Newton iteration for Q stagnated", last=Q, residual=abs(res))


def log_eta_derivs(tau, n: int = 2) -> list[complex]:
    """(q d/dq)^d log eta(tau) for d=1..n (index 0 holds log eta)."""
    nome = as_nome(tau)
    q = nome.q
    out = [cmath.log(specfun.dedekind_eta(nome))]
    kmax = int(40 / max(-math.log(abs(q)), 1e-3)) + 2
    k = np.arange(1, kmax + 1)
    sig = np.array([sum(d for d in range(1, kk + 1) if kk % d == 0) for kk in k], dtype=float)
    qk = q**k
    # log phi = -sum sigma(k)/k q^k
    for d in range(1, n + 1):
        val = -np.sum(sig * k ** (d - 1) * qk)
        if d == 1:
            val += 1.0 / 24.0
        out.append(complex(val))
    return out


def hamiltonian_torus_star(sign: str, pt: MonodromyPoint, tau, n_max: int = N_MAX_DEFAULT,
                           N: int = ORDER_DEFAULT) -> complex:
    """H*_-/+ = 2 pi i d_tau log Z^D_0 + 2 pi i d_tau log(eta/theta3(0|2tau)) -/+ 2m theta3''/theta3."""
    if sign not in ("-", "+"):
        raise DomainError("sign must be '-' or '+'")
    nome = as_nome(tau)
    mass, _ = _torus_args(pt)
    z0 = dual_partition_torus(0, pt, nome, n_max, N, n_derivs=1)
    if abs(z0.value) < 1e-12 * z0.scale:
        raise DomainError("Z^D_0 vanishes at this point")
    t2 = nome.doubled()
    th = specfun.theta(3, 0.0, t2)
    dth = 2 * specfun.theta(3, 0.0, t2, 0, 1)  # d/dlog q of theta3(0|2tau)
    th2 = specfun.theta_z(3, 0.0, t2, 2)
    dlog = z0.derivs[1] / z0.value + log_eta_derivs(nome, 1)[1] - dth / th
    if pt.chart == "II":
        mass = -mass  # Z^D was summed with -m; the explicit term uses the physical mass
    mass_sign = -1 if sign == "-" else 1
    return -4 * math.pi**2 * dlog + mass_sign * 2 * mass * th2 / th


def tau_torus(pt: MonodromyPoint, tau, Q=None, n_max: int = N_MAX_DEFAULT, N: int = ORDER_DEFAULT,
              tol: float = 1e-11) -> complex:
    """T = eta Z^D_0 / theta3(2Q|2tau), cross-checked against eta Z^D_{1/2} / theta2(2Q|2tau)."""
    nome = as_nome(tau)
    if Q is None:
        Q = q_transcendent(pt, nome, n_max, N)
    t2 = nome.doubled()
    eta = specfun.dedekind_eta(nome)
    z0 = dual_partition_torus(0, pt, nome, n_max, N)
    z1 = dual_partition_torus(0.5, pt, nome, n_max, N)
    T0 = eta * z0.value / specfun.theta(3, 2 * Q, t2)
    T1 = eta * z1.value / specfun.theta(2, 2 * Q, t2)
    if abs(T0 - T1) > tol * max(abs(T0), abs(T1)):
        raise ConvergenceError("the two representations of T disagree", T0=T0, T1=T1)
    return T0
