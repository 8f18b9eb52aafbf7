"""Nekrasov instanton sums for U(2) with adjoint matter and for pure SU(2).

The Coulomb parameters are a_1 = a, a_2 = -a. The bifundamental factor is

    N_{lam,mu}(x; e1, e2) = prod_{s in lam} (x - e2 (a_mu(s)+1) + e1 l_lam(s))
                          * prod_{s in mu}  (x + e2 a_lam(s) - e1 (l_mu(s)+1))

Every box factor is affine in (a, alpha, e1, e2) with integer coefficients,
so the sums are assembled once per instanton weight as integer tables and
then evaluated with numpy for any number of parameter points at once.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import specfun
from .errors import PoleError
from .partitions import Partition, arm_leg, partition_pairs
from .series import TruncatedSeries

MAX_ORDER = 12
POLE_TOL = 1e-13


@dataclass(frozen=True)
class OmegaParams:
    a: complex
    alpha: complex | None
    eps1: complex
    eps2: complex

    def __post_init__(self):
        if self.eps1 * self.eps2 == 0:
            raise PoleError("eps1*eps2 must be nonzero")


def nekrasov_factor(lam: Partition, mu: Partition, x, eps1, eps2):
    """The bifactor N_{lam,mu}(x; eps1, eps2)."""
    out = 1.0 + 0j
    for s in lam.cells():
        a_mu, l_lam = arm_leg(lam, mu, s)
        out *= x - eps2 * (a_mu + 1) + eps1 * l_lam
    for s in mu.cells():
        a_lam, l_mu = arm_leg(mu, lam, s)
        out *= x + eps2 * a_lam - eps1 * (l_mu + 1)
    return out


def _factor_rows(lam: Partition, mu: Partition):
    """Integer (p, r) with box factor x + p*eps1 + r*eps2."""
    rows = []
    for s in lam.cells():
        a_mu, l_lam = arm_leg(lam, mu, s)
        rows.append((l_lam, -(a_mu + 1)))
    for s in mu.cells():
        a_lam, l_mu = arm_leg(mu, lam, s)
        rows.append((-(l_mu + 1), a_lam))
    return rows


@lru_cache(maxsize=None)
def _weight_table(k: int):
    """Factor table for all pairs of total weight k.

    Returns (seg, s, p, r) where each row is one box factor of
    prod_{i,j} N_{lam_i,lam_j}(x + a_i - a_j), seg is the pair index, s the
    coefficient of 2a (a_i - a_j = s*2a), and p, r multiply eps1, eps2.
    """
    seg, ss, pp, rr = [], [], [], []
    pairs = partition_pairs(k)
    for idx, (l1, l2) in enumerate(pairs):
        lams = (l1, l2)
        for i in range(2):
            for j in range(2):
                s = (1 if i == 0 else -1) * (i != j)
                for p, r in _factor_rows(lams[i], lams[j]):
                    seg.append(idx)
                    ss.append(s)
                    pp.append(p)
                    rr.append(r)
    arr = lambda v: np.asarray(v, dtype=np.int64)
    return arr(seg), arr(ss).astype(float), arr(pp).astype(float), arr(rr).astype(float), len(pairs)


def _check_order(N: int):
    if not 0 <= N <= MAX_ORDER:
        raise ValueError(f"instanton order must lie in 0..{MAX_ORDER}, got {N}")


def _coefficients(a, alpha, eps1, eps2, N: int, with_da: bool):
    """Instanton coefficients Z_k for k=0..N, vectorized over broadcast inputs.

    alpha=None selects the pure theory. Returns (Z, dZ/da) with a leading
    axis of length N+1.
    """
    _check_order(N)
    a, eps1, eps2 = np.broadcast_arrays(np.asarray(a, complex), np.asarray(eps1, complex), np.asarray(eps2, complex))
    if alpha is not None:
        alpha = np.broadcast_to(np.asarray(alpha, complex), a.shape)
    shape = a.shape
    a, e1, e2 = a.reshape(-1, 1), eps1.reshape(-1, 1), eps2.reshape(-1, 1)
    al = None if alpha is None else alpha.reshape(-1, 1)
    Z = np.zeros((N + 1, a.shape[0]), dtype=complex)
    dZ = np.zeros_like(Z)
    Z[0] = 1.0
    for k in range(1, N + 1):
        seg, s, p, r, npairs = _weight_table(k)
        den = 2 * a * s + p * e1 + r * e2
        scale = np.abs(a) + np.abs(e1) + np.abs(e2) + 1.0
        if np.any(np.abs(den) < POLE_TOL * scale):
            bad = np.argwhere(np.abs(den) < POLE_TOL * scale)[0]
            raise PoleError(
                f"instanton denominator vanishes: 2a*{s[bad[1]]:+g} {p[bad[1]]:+g}*eps1 {r[bad[1]]:+g}*eps2 = 0 "
                f"at a={a[bad[0], 0]}, eps=({e1[bad[0], 0]}, {e2[bad[0], 0]})"
            )
        logs = -np.log(den)
        dlogs = -2 * s / den
        if al is not None:
            num = al + den
            logs = logs + np.log(num + (num == 0) * 1e-300)
            dlogs = dlogs + 2 * s / np.where(num == 0, np.inf, num)
            zero_num = num == 0
        else:
            zero_num = None
        npts = a.shape[0]
        L = np.zeros((npts, npairs), dtype=complex)
        D = np.zeros((npts, npairs), dtype=complex)
        for i in range(npts):
            L[i] = np.bincount(seg, weights=logs[i].real, minlength=npairs) + 1j * np.bincount(
                seg, weights=logs[i].imag, minlength=npairs
            )
            D[i] = np.bincount(seg, weights=dlogs[i].real, minlength=npairs) + 1j * np.bincount(
                seg, weights=dlogs[i].imag, minlength=npairs
            )
        terms = np.exp(L)
        if zero_num is not None and np.any(zero_num):
            for i in range(npts):
                killed = np.unique(seg[zero_num[i]])
                terms[i, killed] = 0.0
                D[i, killed] = 0.0
        Z[k] = terms.sum(axis=1)
        if with_da:
            dZ[k] = (terms * D).sum(axis=1)
    return Z.reshape((N + 1,) + shape), dZ.reshape((N + 1,) + shape)


def instanton_coefficients_nstar(a, alpha, eps1, eps2, N: int, with_da: bool = False):
    Z, dZ = _coefficients(a, alpha, eps1, eps2, N, with_da)
    return (Z, dZ) if with_da else Z


def instanton_coefficients_pure(a, eps1, eps2, N: int, with_da: bool = False):
    Z, dZ = _coefficients(a, None, eps1, eps2, N, with_da)
    return (Z, dZ) if with_da else Z


def instanton_sum_nstar(p: OmegaParams, N: int) -> TruncatedSeries:
    """Z_inst^{U(2)}(a, alpha; eps1, eps2 | q) through q^N."""
    Z = instanton_coefficients_nstar(p.a, p.alpha, p.eps1, p.eps2, N)
    return TruncatedSeries(Z, "q")


def instanton_sum_pure(a, eps1, eps2, N: int) -> TruncatedSeries:
    """Pure SU(2) instanton sum sum_{lam1,lam2} t^{|lam|} / prod N_{lam_i,lam_j}(a_i-a_j)."""
    Z = instanton_coefficients_pure(a, eps1, eps2, N)
    return TruncatedSeries(Z, "t")


def phi_power_series(exponent, N: int) -> TruncatedSeries:
    """phi(q)^exponent as a q-series."""
    return TruncatedSeries(specfun.phi_series(N), "q") ** exponent


def selfdual_block_torus(sigma, m, N: int) -> TruncatedSeries:
    """The c=1 block Z(sigma, m, q) = phi^{1-2m^2} Z_inst^{U(2)}(sigma, m; -1, 1)."""
    _guard_sigma(sigma)
    Z = instanton_coefficients_nstar(sigma, m, -1.0, 1.0, N)
    return phi_power_series(1 - 2 * m * m, N) * TruncatedSeries(Z, "q")


def selfdual_block_pure(sigma, N: int) -> TruncatedSeries:
    """The irregular c=1 block Z(sigma, t) at eps1 = -eps2 = 1."""
    _guard_sigma(sigma)
    return instanton_sum_pure(sigma, 1.0, -1.0, N)


def selfdual_blocks_torus(sigmas, m, N: int) -> np.ndarray:
    """Coefficients of Z(sigma, m, q) for an array of sigma values, shape (len, N+1)."""
    sigmas = np.asarray(sigmas, complex)
    for s in sigmas.ravel():
        _guard_sigma(s)
    Z = instanton_coefficients_nstar(sigmas, m, -1.0, 1.0, N)
    phi = phi_power_series(1 - 2 * m * m, N).coeffs
    Z = np.moveaxis(Z, 0, -1)
    out = np.array([np.convolve(phi, z)[: N + 1] for z in Z.reshape(-1, N + 1)])
    return out.reshape(sigmas.shape + (N + 1,))


def selfdual_blocks_pure(sigmas, N: int) -> np.ndarray:
    sigmas = np.asarray(sigmas, complex)
    for s in sigmas.ravel():
        _guard_sigma(s)
    Z = instanton_coefficients_pure(sigmas, 1.0, -1.0, N)
    return np.moveaxis(Z, 0, -1)


def _guard_sigma(sigma):
    x = 2 * complex(sigma)
    if abs(x.imag) < 1e-3 and abs(x.real - round(x.real)) < 1e-3:
        raise PoleError(f"2*sigma={x} is within 1e-3 of an integer")


# ----------------------------------------------------------------------------
# Nekrasov-Shatashvili limit


def _ns_instanton(theory: str, sigma, mu, N: int, h: float, points: int):
    """Circle mean of eps2 * log Z_inst(sigma, alpha; 1, eps2) over |eps2| = h.

    f(eps2) = eps2 log Z_inst is regular at eps2 = 0, so its mean over the
    circle equals f(0); with `points` nodes the error is O(h^points). The
    returned arrays are the q-coefficients of F_inst and dF_inst/dsigma.
    """
    nodes = h * np.exp(2j * np.pi * (np.arange(points) + 0.5) / points)
    if theory == "nstar":
        Z, dZ = instanton_coefficients_nstar(sigma, mu + 0.5, 1.0, nodes, N, with_da=True)
    else:
        Z, dZ = instanton_coefficients_pure(sigma, 1.0, nodes, N, with_da=True)
    F = np.zeros(N + 1, dtype=complex)
    dF = np.zeros(N + 1, dtype=complex)
    for i, e2 in enumerate(nodes):
        zs = TruncatedSeries(Z[:, i])
        logz = zs.log()
        dlog = TruncatedSeries(dZ[:, i]) / zs
        F += e2 * logz.coeffs
        dF += e2 * dlog.coeffs
    F /= points
    dF /= points
    if theory == "pure":
        F, dF = -F, -dF
    return F, dF


def _series_exp_rows(A: np.ndarray) -> np.ndarray:
    """Row-wise exp of power series A[:, 0..K] (A[:, 0] may be nonzero)."""
    K = A.shape[1] - 1
    out = np.zeros_like(A)
    out[:, 0] = 1.0
    ka = A * np.arange(K + 1)
    for k in range(1, K + 1):
        out[:, k] = np.sum(ka[:, 1 : k + 1] * out[:, k - 1 :: -1][:, :k], axis=1) / k
    return out * np.exp(A[:, :1])


def _ring_mul(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.convolve(x, y)[: x.size]


def _ns_exact(theory: str, sigma, mu, N: int):
    """F_inst^NS and d/dsigma F_inst^NS from the exact expansion in eps2 (eps1 = 1).

    Each pair term is Z_pair(eps2) = eps2^(-z) R(eps2) with R regular, so
    W_k = eps2^k Z_k is a power series. With Q = q/eps2,
    log Z = sum_k Q^k M_k(eps2), and eps2 log Z -> sum_k q^k [eps2^(k-1)] M_k.
    No cancellation between large inverse powers of eps2 occurs.
    """
    _check_order(N)
    a = complex(sigma)
    alpha = None if theory == "pure" else complex(mu) + 0.5
    K = max(N, 1)
    W = np.zeros((N + 1, K + 1), dtype=complex)
    dW = np.zeros_like(W)
    W[0, 0] = 1.0
    j = np.arange(1, K + 1)
    for k in range(1, N + 1):
        seg, s, p, r, npairs = _weight_table(k)
        groups = [(2 * a * s + p, -1.0)]
        if alpha is not None:
            groups.append((alpha + 2 * a * s + p, 1.0))
        logc = np.zeros(npairs, dtype=complex)
        pw = np.zeros((npairs, K + 1), dtype=complex)
        dser = np.zeros((npairs, K + 1), dtype=complex)
        shift = np.zeros(npairs, dtype=np.int64)
        dead = np.zeros(npairs, dtype=bool)
        for c, sign in groups:
            zero = np.abs(c) < POLE_TOL * (1 + abs(a))
            if sign < 0 and np.any(zero & (r == 0)):
                raise PoleError(f"NS instanton denominator vanishes identically at sigma={a}")
            if sign > 0 and np.any(zero & (r == 0)):
                dead |= np.bincount(seg[zero & (r == 0)], minlength=npairs) > 0
            zc = zero & (r != 0)
            nz = ~zero
            shift += (sign * np.bincount(seg[zc], minlength=npairs)).astype(np.int64)
            lz = np.where(zc, np.log(np.where(zc, r, 1.0) + 0j), 0.0)
            cc = np.where(nz, c, 1.0)
            lc = np.where(nz, np.log(cc + 0j), 0.0) + lz
            logc += sign * _cbincount(seg, lc, npairs)
            u = np.where(nz, r / cc, 0.0)
            up = u[:, None] ** j[None, :]
            pw[:, 1:] += sign * _cbincount2(seg, up * ((-1.0) ** (j + 1) / j)[None, :], npairs)
            ds = np.where(nz, 2 * s / cc, 0.0)
            dser += -sign * _cbincount2(seg, ds[:, None] * np.concatenate(
                [np.ones((u.size, 1)), (-u[:, None]) ** j[None, :]], axis=1), npairs)
        pw[:, 0] = logc
        R = _series_exp_rows(pw)
        R[dead] = 0.0
        # pure: dser holds -d/da log(prod den); nstar adds + d/da log(prod num)
        dR = np.array([_ring_mul(R[i], -dser[i]) for i in range(npairs)]) if npairs else R
        off = shift + k
        if np.any(off < 0):
            raise PoleError("pole order in eps2 exceeds the instanton weight")
        for idx in range(npairs):
            o = off[idx]
            if o <= K:
                W[k, o:] += R[idx, : K + 1 - o]
                dW[k, o:] += dR[idx, : K + 1 - o]
    # logarithm and logarithmic a-derivative in Q with eps2-series coefficients
    L = np.zeros_like(W)
    G = np.zeros_like(W)
    for k in range(1, N + 1):
        acc = k * W[k]
        for i in range(1, k):
            acc = acc - i * _ring_mul(L[i], W[k - i])
        L[k] = acc / k
        g = dW[k].copy()
        for i in range(1, k + 1):
            g = g - _ring_mul(W[i], G[k - i])
        G[k] = g
    F = np.zeros(N + 1, dtype=complex)
    dF = np.zeros(N + 1, dtype=complex)
    for k in range(1, N + 1):
        F[k] = L[k, k - 1]
        dF[k] = G[k, k - 1]
    if theory == "pure":
        F, dF = -F, -dF
    return F, dF


def _cbincount(seg, w, n):
    return np.bincount(seg, weights=w.real, minlength=n) + 1j * np.bincount(seg, weights=w.imag, minlength=n)


def _cbincount2(seg, w, n):
    return np.stack([_cbincount(seg, w[:, c], n) for c in range(w.shape[1])], axis=1)


def ns_instanton_coefficients(theory: str, sigma, mu=None, N: int = 8):
    """q-coefficients of (F_inst^NS, d/dsigma F_inst^NS)."""
    if theory not in ("pure", "nstar"):
        raise ValueError(f"unknown theory {theory!r}")
    _guard_sigma(sigma)
    return _ns_exact(theory, sigma, mu, N)


def ns_instanton_circle_mean(theory: str, sigma, mu=None, N: int = 8, h: float = 0.1, points: int = 64):
    """Independent estimate of the NS limit as the mean of eps2 log Z_inst over |eps2| = h.

    Accurate only while h stays well below the nearest eps2 singularity and
    rounding in log Z_inst (which grows like h^-k at order k) is tolerable.
    """
    if not 0 < h <= 0.1:
        raise ValueError("circle radius h must lie in (0, 0.1]")
    return _ns_instanton(theory, sigma, mu, N, h, points)


def psi_minus2(z) -> complex:
    """Second antiderivative of the digamma function, int_0^z log Gamma(x) dx."""
    import mpmath

    zz = mpmath.mpc(z)
    val = zz * (1 - zz) / 2 + zz / 2 * mpmath.log(2 * mpmath.pi) + zz * mpmath.loggamma(zz) - mpmath.log(mpmath.barnesg(1 + zz))
    return complex(val)


@dataclass
class NSFreeEnergy:
    value: complex
    d_sigma: complex
    x_d_x: complex
    order: int


def ns_free_energy(theory: str, sigma, mu, x, N: int = 8, log_x=None) -> NSFreeEnergy:
    """NS free energy with its sigma derivative and x d/dx derivative.

    pure:  F = -psi2(1+2s) - psi2(1-2s) + s^2 log t + F_inst(s, t)
    nstar: F = -s^2 log q + F_1loop(s, mu) + F_inst(s, mu, q) + (2mu^2 - 1/2) log phi(q)

    ``log_x`` fixes the branch of log x (for the torus pass 2 pi i tau).
    """
    sigma = complex(sigma)
    lx = complex(np.log(complex(x))) if log_x is None else complex(log_x)
    F, dF = ns_instanton_coefficients(theory, sigma, mu, N)
    powers = np.exp(lx * np.arange(N + 1))
    k = np.arange(N + 1)
    inst = complex(np.dot(F, powers))
    d_inst = complex(np.dot(dF, powers))
    xd_inst = complex(np.dot(k * F, powers))
    lg = specfun.log_gamma
    if theory == "pure":
        value = -psi_minus2(1 + 2 * sigma) - psi_minus2(1 - 2 * sigma) + sigma**2 * lx + inst
        d_sigma = -2 * lg(1 + 2 * sigma) + 2 * lg(1 - 2 * sigma) + 2 * sigma * lx + d_inst
        xdx = sigma**2 + xd_inst
        return NSFreeEnergy(value, d_sigma, xdx, N)
    mu = complex(mu)
    logphi = TruncatedSeries(specfun.phi_series(N)).log().coeffs
    c = 2 * mu * mu - 0.5
    value = (
        -(sigma**2) * lx
        - psi_minus2(0.5 - mu + 2 * sigma)
        - psi_minus2(0.5 - mu - 2 * sigma)
        + psi_minus2(1 + 2 * sigma)
        + psi_minus2(1 - 2 * sigma)
        + inst
        + c * complex(np.dot(logphi, powers))
    )
    d_sigma = (
        -2 * sigma * lx
        - 2 * lg(-mu + 2 * sigma + 0.5)
        + 2 * lg(-mu - 2 * sigma + 0.5)
        - 2 * lg(1 - 2 * sigma)
        + 2 * lg(1 + 2 * sigma)
        + d_inst
    )
    xdx = -(sigma**2) + xd_inst + c * complex(np.dot(k * logphi, powers))
    return NSFreeEnergy(value, d_sigma, xdx, N)
