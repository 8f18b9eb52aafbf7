"""Independent spectral references.

* modified Mathieu operator -d^2/dx^2 + sqrt(t)(e^x + e^-x) by finite differences;
* Lame operators -d^2/dx^2 + g wp(x|tau) on (0, 1) by Galerkin in the
  Poschl-Teller eigenbasis sin^mu(pi x) C_k^(mu)(cos pi x), mu(mu-1) = g;
* first-order perturbative energies and the two-wall quantization condition.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, special

from .errors import ConvergenceError, DomainError
from .specfun import log_gamma


@dataclass
class DiscretizationSpec:
    """method: "finite-difference" or "galerkin-pt"; size: grid points or basis size."""

    method: str = "finite-difference"
    size: int = 2**13
    half_width: float | None = None
    quadrature: int | None = None

    def __post_init__(self):
        if self.method not in ("finite-difference", "galerkin-pt"):
            raise DomainError(f"unknown discretization method {self.method!r}")
        if self.size <= 0 or (self.quadrature is not None and self.quadrature <= 0):
            raise DomainError("discretization sizes must be positive")


@dataclass
class OracleSpectrum:
    energies: np.ndarray
    convergence: float
    spec: DiscretizationSpec
    extra: dict = field(default_factory=dict)


# ----------------------------------------------------------------------------
# modified Mathieu


def _mathieu_fd(t: float, n_levels: int, L: float, n_points: int) -> np.ndarray:
    h = 2 * L / (n_points + 1)
    x = -L + h * np.arange(1, n_points + 1)
    v = math.sqrt(t) * 2 * np.cosh(x)
    # 5-point stencil for -psi'': (f_{-2} - 16 f_{-1} + 30 f_0 - 16 f_1 + f_2)/(12 h^2)
    bands = np.zeros((3, n_points))
    bands[0] = 30.0 / (12 * h * h) + v
    bands[1, :-1] = -16.0 / (12 * h * h)
    bands[2, :-2] = 1.0 / (12 * h * h)
    return linalg.eig_banded(bands, lower=True, eigvals_only=True, select="i", select_range=(0, n_levels - 1))


def mathieu_spectrum_direct(t: float, n_levels: int, spec: DiscretizationSpec | None = None,
                            tol: float = 1e-8) -> OracleSpectrum:
    """Lowest eigenvalues of -d^2/dx^2 + sqrt(t)(e^x + e^-x) with Dirichlet ends at +-L."""
    if not t > 0:
        raise DomainError("t must be positive")
    spec = spec or DiscretizationSpec("finite-difference", 2**13)
    L = spec.half_width
    if L is None:
        # guess the top level, then enlarge the box until the wall exceeds it tenfold
        L = 8.0
        for _ in range(4):
            e_top = _mathieu_fd(t, n_levels, L, 2**11)[-1]
            L_new = max(8.0, math.acosh(max(e_top / (2 * math.sqrt(t)), 1.0)) + 4.0)
            if L_new <= L:
                break
            L = L_new
    coarse = _mathieu_fd(t, n_levels, L, spec.size // 2)
    fine = _mathieu_fd(t, n_levels, L, spec.size)
    # 5-point error ~ h^4; grid spacing halves (up to the +1 offset)
    h1 = 2 * L / (spec.size // 2 + 1)
    h2 = 2 * L / (spec.size + 1)
    r = (h1 / h2) ** 4
    extrap = (r * fine - coarse) / (r - 1)
    change = float(np.max(np.abs(extrap - fine)))
    if change > tol * max(1.0, float(np.max(np.abs(fine)))) * 1e3:
        raise ConvergenceError("Mathieu finite differences did not converge", change=change)
    return OracleSpectrum(extrap, change, DiscretizationSpec("finite-difference", spec.size, L))


# ----------------------------------------------------------------------------
# Lame via Poschl-Teller Galerkin


def _periodic_part(x: np.ndarray, tau: complex, tol: float = 1e-17) -> np.ndarray:
    """wp(x|tau) - pi^2/sin^2(pi x) via the sine series over lattice shifts k != 0."""
    total = np.full(x.shape, -math.pi**2 / 3, dtype=complex)
    k = 1
    while True:
        term = np.zeros(x.shape, dtype=complex)
        for kk in (k, -k):
            term += (math.pi / np.sin(math.pi * (x - kk * tau))) ** 2 - (math.pi / cmath.sin(math.pi * kk * tau)) ** 2
        total += term
        if np.max(np.abs(term)) < tol * (1 + np.max(np.abs(total))) or k > 200:
            break
        k += 1
    return total


def exponent(g: float) -> float:
    """Larger root mu of mu(mu-1) = g (the normalizable endpoint exponent)."""
    if g <= 0:
        raise DomainError(f"coupling {g} must be positive for a normalizable endpoint")
    return 0.5 + math.sqrt(0.25 + g)


def _lame_galerkin(g: float, tau: complex, basis: int, nodes: int) -> np.ndarray:
    mu = exponent(g)
    u, w = special.roots_gegenbauer(nodes, mu)
    x = np.arccos(u) / math.pi
    vpert = g * _periodic_part(x, tau).real
    ks = np.arange(basis)
    C = np.array([special.eval_gegenbauer(k, mu, u) for k in ks])
    norms = np.sqrt(np.sum(C * C * w, axis=1))
    C = C / norms[:, None]
    V = (C * (w * vpert)) @ C.T
    H = V + np.diag(math.pi**2 * (mu + ks) ** 2)
    return linalg.eigh(H, eigvals_only=True)


def lame_operator_spectrum(g: float, tau, n_levels: int, basis: int = 40, tol: float = 1e-10) -> OracleSpectrum:
    """Lowest eigenvalues of -d^2/dx^2 + g wp(x|tau) on (0, 1)."""
    tau = complex(tau)
    nodes = 3 * basis + 20
    e1 = _lame_galerkin(g, tau, basis, nodes)[:n_levels]
    e2 = _lame_galerkin(g, tau, 2 * basis, 2 * nodes)[:n_levels]
    change = float(np.max(np.abs(e2 - e1)))
    if change > tol * max(1.0, float(np.max(np.abs(e2)))):
        raise ConvergenceError("Poschl-Teller Galerkin did not converge", change=change)
    return OracleSpectrum(e2, change, DiscretizationSpec("galerkin-pt", 2 * basis, quadrature=2 * nodes))


def lame_spectrum_direct(m: float, tau_case: int, frak_t: float, n_levels: int, basis: int = 40) -> dict:
    """Spectra of O-/+ = -d^2/dx^2 + (m^2 -/+ m) wp for the case requested.

    Case 1 uses wp(x|i frak_t); case 2 uses wp(x|i/frak_t), so its eigenvalues are the
    numbers the tau pipeline reports as frak_t^2 (H* + 2 g eta1(i frak_t)).
    Operators whose coupling is not positive are omitted.
    """
    if tau_case not in (1, 2):
        raise DomainError("tau_case must be 1 or 2")
    if not frak_t > 0:
        raise DomainError("frak_t must be positive")
    tau = 1j * frak_t if tau_case == 1 else 1j / frak_t
    out = {}
    for sign, g in (("-", m * m - m), ("+", m * m + m)):
        if g > 0:
            out[sign] = lame_operator_spectrum(g, tau, n_levels, basis)
    return out


def pt_matrix_element(m: float, k: int, nodes: int = 200) -> float:
    """<Psi_k| sin^2(pi x) |Psi_k> / <Psi_k|Psi_k> by Gauss-Gegenbauer quadrature."""
    u, w = special.roots_gegenbauer(nodes, m)
    c = special.eval_gegenbauer(k, m, u)
    return float(np.sum(w * c * c * (1 - u * u)) / np.sum(w * c * c))


def pt_perturbative_energy(m: float, k: int, q: float) -> float:
    """First-order energy of -d^2/dx^2 + m(m-1) wp(x|tau) near the Poschl-Teller level k."""
    d = (m + k) ** 2 - 1
    if d == 0:
        raise DomainError("(m+k)^2 = 1 is a pole of the first-order formula")
    g = m * (m - 1)
    return -math.pi**2 * g / 3 + math.pi**2 * (m + k) ** 2 + 8 * math.pi**2 * g * q * (1 + g / d)


# ----------------------------------------------------------------------------
# two-wall quantization


def _walls_log(kappa, m):
    return log_gamma(1 + kappa) + log_gamma(m - kappa) - log_gamma(1 - kappa) - log_gamma(m + kappa)


def walls_quantization_kappa(m: float, tau_hat: complex, k: int, tol: float = 1e-14, max_iter: int = 50) -> complex:
    """Solve pi i k = pi i kappa/tau_hat + log[G(1+k)G(m-k)/(G(1-k)G(m+k))] for kappa (G = Gamma)."""
    tau_hat = complex(tau_hat)
    if not abs(tau_hat.imag) <= 0.2 or tau_hat.imag == 0:
        raise DomainError("walls formula needs a small imaginary tau_hat")
    kappa = complex(k * tau_hat)

    def f(kp):
        return 1j * math.pi * kp / tau_hat + _walls_log(kp, m) - 1j * math.pi * k

    def df(kp):
        return (1j * math.pi / tau_hat + special.digamma(1 + kp) - special.digamma(m - kp)
                + special.digamma(1 - kp) - special.digamma(m + kp))

    for _ in range(max_iter):
        step = f(kappa) / df(kappa)
        kappa -= step
        if abs(step) < tol * max(1.0, abs(kappa)):
            return kappa
    raise ConvergenceError("walls quantization Newton failed", seed=k * tau_hat, last=kappa)
