"""Complex special functions: log-gamma, Jacobi theta, eta/phi, Weierstrass.

Conventions. With q = exp(2 pi i tau),

    theta1(z|tau) = -i sum_n (-1)^n exp(i pi tau (n+1/2)^2 + 2 pi i z (n+1/2))
    theta2(z|tau) =    sum_n        exp(i pi tau (n+1/2)^2 + 2 pi i z (n+1/2))
    theta3(z|tau) =    sum_n        exp(i pi tau n^2 + 2 pi i z n)
    theta4(z|tau) =    sum_n (-1)^n exp(i pi tau n^2 + 2 pi i z n)

Derivative orders passed to :func:`theta` are taken with respect to 2 pi i z
and log q. Use :func:`theta_z` for ordinary z-derivatives.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy import special

from . import config
from .errors import DomainError

TWO_PI_I = 2j * math.pi


@dataclass(frozen=True)
class Nome:
    """Modular parameter tau with Im tau > 0 and its nome q = exp(2 pi i tau)."""

    tau: complex

    def __post_init__(self):
        tau = complex(self.tau)
        if not tau.imag > 0:
            raise DomainError(f"Im tau must be positive, got tau={tau}")
        object.__setattr__(self, "tau", tau)

    @property
    def q(self) -> complex:
        return cmath.exp(TWO_PI_I * self.tau)

    def qpow(self, x) -> complex:
        """q**x defined as exp(2 pi i tau x), single valued in tau."""
        return np.exp(TWO_PI_I * self.tau * x)

    def doubled(self) -> "Nome":
        return Nome(2 * self.tau)


def as_nome(tau) -> Nome:
    return tau if isinstance(tau, Nome) else Nome(tau)


def tau_from_q(q: complex) -> Nome:
    """Nome with principal branch tau = log(q)/(2 pi i)."""
    return Nome(cmath.log(q) / TWO_PI_I)


# ----------------------------------------------------------------------------
# log-gamma


def _is_nonpositive_integer(z: complex) -> bool:
    return z.imag == 0 and z.real <= 0 and z.real == math.floor(z.real)


def log_gamma(z):
    """log Gamma(z), continuous branch (principal along the positive real axis).

    The branch cut runs along the negative real axis, so the result is the
    analytic continuation used by the one-loop formulas on the strips met in
    practice.
    """
    if np.ndim(z) == 0:
        zc = complex(z)
        if _is_nonpositive_integer(zc):
            raise DomainError(f"log_gamma has a pole at z={zc.real:g}")
        if config.extended():
            return complex(mpmath.loggamma(mpmath.mpc(zc)))
        return complex(special.loggamma(zc))
    arr = np.asarray(z, dtype=complex)
    bad = (arr.imag == 0) & (arr.real <= 0) & (arr.real == np.floor(arr.real))
    if np.any(bad):
        raise DomainError(f"log_gamma has a pole at z={arr[bad][0].real:g}")
    return special.loggamma(arr)


def gamma(z):
    return np.exp(log_gamma(z))


def rgamma(z):
    """1/Gamma(z), entire; exact zeros at nonpositive integers."""
    return special.rgamma(np.asarray(z, dtype=complex)) if np.ndim(z) else complex(special.rgamma(complex(z)))


def digamma(z):
    return special.psi(z)


# ----------------------------------------------------------------------------
# theta functions

_THETA_TOL_LOG = math.log(1e-18)


def _index_range(z_imag: float, tau_imag: float, half: bool, extra_log: float = 0.0):
    # |term| = exp(-pi Im tau nu^2 - 2 pi Im z nu); centre at nu0 = -Im z/Im tau
    nu0 = -z_imag / tau_imag
    radius = math.sqrt((-_THETA_TOL_LOG + extra_log + 4.0) / (math.pi * tau_imag)) + 2.0
    lo = math.floor(nu0 - radius) - 1
    hi = math.ceil(nu0 + radius) + 1
    n = np.arange(lo, hi + 1)
    nu = n + 0.5 if half else n.astype(float)
    return n, nu


def theta(kind: int, z, tau, dz_order: int = 0, dlogq_order: int = 0):
    """Jacobi theta function or its derivative.

    dz_order counts derivatives with respect to 2 pi i z and dlogq_order counts
    derivatives with respect to log q = 2 pi i tau.
    """
    if kind not in (1, 2, 3, 4):
        raise DomainError(f"theta kind must be 1..4, got {kind}")
    if not (0 <= dz_order <= 8 and 0 <= dlogq_order <= 4):
        raise DomainError("theta derivative order out of range")
    nome = as_nome(tau)
    t = nome.tau
    if np.ndim(z):
        zs = np.asarray(z, dtype=complex)
        return np.array([theta(kind, complex(v), nome, dz_order, dlogq_order) for v in zs.ravel()]).reshape(zs.shape)
    z = complex(z)
    if kind == 1 and dz_order % 2 == 0 and z == 0:
        return 0j
    half = kind in (1, 2)
    extra = (dz_order + 2 * dlogq_order) * math.log(10.0 + abs(z.imag / t.imag)) + 2 * dlogq_order
    n, nu = _index_range(z.imag, t.imag, half, extra)
    if config.extended():
        return _theta_mp(kind, z, t, dz_order, dlogq_order, n, nu)
    expo = 1j * math.pi * t * nu * nu + TWO_PI_I * z * nu
    terms = np.exp(expo)
    if dz_order:
        terms = terms * nu**dz_order
    if dlogq_order:
        terms = terms * (nu * nu / 2.0) ** dlogq_order
    if kind in (1, 4):
        terms = terms * np.where(n % 2 == 0, 1.0, -1.0)
    s = _pairwise_sum(terms)
    return -1j * s if kind == 1 else s


def _theta_mp(kind, z, t, dz_order, dlogq_order, n, nu):
    with mpmath.workdps(config.EXTENDED_DPS):
        zz, tt = mpmath.mpc(z), mpmath.mpc(t)
        total = mpmath.mpc(0)
        for ni in n:
            v = mpmath.mpf(int(ni)) + (mpmath.mpf(1) / 2 if kind in (1, 2) else 0)
            term = mpmath.exp(1j * mpmath.pi * tt * v * v + 2j * mpmath.pi * zz * v)
            term *= v**dz_order * (v * v / 2) ** dlogq_order
            if kind in (1, 4) and int(ni) % 2:
                term = -term
            total += term
        if kind == 1:
            total *= -1j
        return complex(total)


def _pairwise_sum(values: np.ndarray) -> complex:
    # symmetric summation from the small tails inwards keeps the result
    # independent of the index window
    order = np.argsort(np.abs(values))
    return complex(np.sum(values[order]))


def theta_z(kind: int, z, tau, dz: int = 0, dlogq_order: int = 0):
    """Theta derivative with respect to the ordinary variable z."""
    return (TWO_PI_I**dz) * theta(kind, z, tau, dz, dlogq_order)


# ----------------------------------------------------------------------------
# eta, phi, eta1


def euler_phi(q: complex) -> complex:
    """phi(q) = prod_{k>=1} (1 - q^k) via the pentagonal number series."""
    if abs(q) >= 1:
        raise DomainError("|q| must be below 1")
    if q == 0:
        return 1.0 + 0j
    total = 1.0 + 0j
    k = 1
    while True:
        e1 = k * (3 * k - 1) // 2
        e2 = k * (3 * k + 1) // 2
        term = q**e1 + q**e2
        total += (-1) ** k * term
        if abs(q) ** e1 < 1e-18 * abs(total):
            break
        k += 1
    return total


def phi_series(order: int) -> np.ndarray:
    """Integer coefficients of prod (1-q^k) through q^order."""
    c = np.zeros(order + 1)
    c[0] = 1.0
    k = 1
    while k * (3 * k - 1) // 2 <= order:
        for e in (k * (3 * k - 1) // 2, k * (3 * k + 1) // 2):
            if e <= order:
                c[e] += (-1) ** k
        k += 1
    return c


def eta_phi(tau) -> tuple[complex, complex, complex]:
    """Return (eta(tau), phi(q), eta1(tau))."""
    nome = as_nome(tau)
    phi = euler_phi(nome.q)
    eta = nome.qpow(1.0 / 24.0) * phi
    d1 = theta(1, 0.0, nome, 1)
    d3 = theta(1, 0.0, nome, 3)
    eta1 = -(TWO_PI_I**2) * d3 / (6.0 * d1)
    return complex(eta), complex(phi), complex(eta1)


def dedekind_eta(tau) -> complex:
    return eta_phi(tau)[0]


def eta1(tau) -> complex:
    return eta_phi(tau)[2]


# ----------------------------------------------------------------------------
# Weierstrass functions


def weierstrass(z, tau) -> tuple[complex, complex, complex]:
    """Return (wp(z|tau), wp'(z|tau), zeta(z|tau)) for periods 1 and tau."""
    nome = as_nome(tau)
    z = complex(z)
    im_ratio = z.imag / nome.tau.imag
    k = round(im_ratio)
    r = z - k * nome.tau
    if abs(r - round(r.real)) < 1e-14:
        raise DomainError(f"z={z} is a lattice point")
    th = [theta_z(1, z, nome, d) for d in range(4)]
    e1 = eta1(nome)
    l1 = th[1] / th[0]
    l2 = th[2] / th[0] - l1 * l1
    l3 = th[3] / th[0] - 3 * th[2] * th[1] / th[0] ** 2 + 2 * l1**3
    wp = -l2 - 2 * e1
    wpp = -l3
    zeta = l1 + 2 * z * e1
    return complex(wp), complex(wpp), complex(zeta)


def wp_sine_series(z, tau, kmax: int | None = None) -> complex:
    """wp from the sine-series representation summed over |k| <= kmax."""
    nome = as_nome(tau)
    t = nome.tau
    if kmax is None:
        kmax = int(math.ceil(40.0 / (2 * math.pi * t.imag))) + 2
    s = (math.pi / cmath.sin(math.pi * z)) ** 2 - math.pi**2 / 3
    for k in range(1, kmax + 1):
        for kk in (k, -k):
            s += (math.pi / cmath.sin(math.pi * (z - kk * t))) ** 2 - (math.pi / cmath.sin(math.pi * kk * t)) ** 2
    return complex(s)
