"""Closed-form monodromy data of the one-punctured torus.

Charts: chart I uses (sigma, eta) and chart II uses (sigma, eta-tilde), related by

    e^{i eta~/2} = e^{i eta/2} sin pi(2 sigma + m) / sin pi(2 sigma - m).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import ChartError, DomainError
from .kiev import MonodromyPoint

SINGULAR_TOL = 1e-12


@dataclass(frozen=True)
class TracePoint:
    p_A: complex
    p_B: complex
    p_AB: complex
    p_0: complex


def _sin(x):
    return cmath.sin(math.pi * x)


def _check_sigma(sigma):
    if abs(cmath.sin(2 * math.pi * sigma)) < SINGULAR_TOL:
        raise DomainError(f"2 sigma = {2 * sigma} is an integer")


def eta_tilde(sigma, m, eta) -> complex:
    """eta-tilde from eta; the shift does not depend on eta, so the branch is continuous in eta."""
    num = _sin(2 * sigma + m)
    den = _sin(2 * sigma - m)
    if abs(den) < SINGULAR_TOL or abs(num) < SINGULAR_TOL:
        raise ChartError("sin pi(2 sigma -/+ m) vanishes: the eta and eta-tilde charts do not overlap here")
    return complex(eta) - 2j * cmath.log(num / den)


def eta_from_tilde(sigma, m, eta_t) -> complex:
    return eta_tilde(sigma, -m, eta_t)


def _chart_etas(pt: MonodromyPoint, m):
    """(e^{i eta/2}, e^{i eta~/2}); either may be None when its chart is singular."""
    s = pt.sigma
    if pt.chart == "I":
        e = cmath.exp(0.5j * pt.eta)
        den = _sin(2 * s - m)
        et = None if abs(den) < SINGULAR_TOL else e * _sin(2 * s + m) / den
        return e, et
    et = cmath.exp(0.5j * pt.eta)
    num = _sin(2 * s + m)
    e = None if abs(num) < SINGULAR_TOL else et * _sin(2 * s - m) / num
    return e, et


def _mass(pt: MonodromyPoint, m):
    mm = pt.m if m is None else m
    if mm is None:
        raise DomainError("a torus monodromy point needs a mass m")
    return complex(mm)


# ----------------------------------------------------------------------------
# explicit matrices (used as an oracle for the closed forms)


def matrix_A(pt: MonodromyPoint) -> np.ndarray:
    e = cmath.exp(2j * math.pi * pt.sigma)
    return np.array([[e, 0], [0, 1 / e]], dtype=complex)


def matrix_B(pt: MonodromyPoint, m=None) -> np.ndarray:
    m = _mass(pt, m)
    s = pt.sigma
    d = cmath.sin(2 * math.pi * s)
    off = _sin(m) / d
    if pt.chart == "I":
        e = cmath.exp(0.5j * pt.eta)
        return np.array([[_sin(2 * s - m) / d / e, off], [-off, _sin(2 * s + m) / d * e]], dtype=complex)
    et = cmath.exp(0.5j * pt.eta)
    return np.array([[_sin(2 * s + m) / d / et, off], [-off, _sin(2 * s - m) / d * et]], dtype=complex)


def matrix_0(pt: MonodromyPoint, m=None) -> np.ndarray:
    A = matrix_A(pt)
    B = matrix_B(pt, m)
    return A @ np.linalg.inv(B) @ np.linalg.inv(A) @ B


def matrix_C(pt: MonodromyPoint, m=None) -> np.ndarray:
    A = matrix_A(pt)
    B = matrix_B(pt, m)
    return A @ B @ B


# ----------------------------------------------------------------------------
# trace coordinates


def trace_coordinates(pt: MonodromyPoint, m=None) -> TracePoint:
    """(p_A, p_B, p_AB, p_0) from the two linear relations between p_AB and p_B."""
    m = _mass(pt, m)
    s = pt.sigma
    _check_sigma(s)
    if pt.chart == "I":
        e = cmath.exp(0.5j * pt.eta)
        x = -2j * _sin(2 * s + m) * e
        y = 2j * _sin(2 * s - m) / e
    else:
        et = cmath.exp(0.5j * pt.eta)
        x = -2j * _sin(2 * s - m) * et
        y = 2j * _sin(2 * s + m) / et
    # p_AB - e^{2 pi i s} p_B = x and p_AB - e^{-2 pi i s} p_B = y
    u = cmath.exp(2j * math.pi * s)
    p_B = (y - x) / (u - 1 / u)
    p_AB = x + u * p_B
    return TracePoint(2 * cmath.cos(2 * math.pi * s), p_B, p_AB, 2 * cmath.cos(2 * math.pi * m))


def fricke_residual(tp: TracePoint) -> complex:
    """p_AB^2 + p_A^2 + p_B^2 - p_A p_B p_AB - p_0 - 2."""
    return tp.p_AB**2 + tp.p_A**2 + tp.p_B**2 - tp.p_A * tp.p_B * tp.p_AB - tp.p_0 - 2


# ----------------------------------------------------------------------------
# normalizability


def f_ratio(kind: str, pt: MonodromyPoint, m=None) -> complex:
    """f^{B/A}_21, f^{B/A}_12, f^{C/A}_21 or f^{C/A}_12 (kind "B21", "B12", "C21", "C12")."""
    m = _mass(pt, m)
    s = pt.sigma
    _check_sigma(s)
    e, et = _chart_etas(pt, m)
    sin2 = cmath.sin(2 * math.pi * s)
    if kind in ("B21", "C21") and et is None:
        raise ChartError("eta-tilde is infinite at this point; use chart II")
    if kind in ("B12", "C12") and e is None:
        raise ChartError("eta is infinite at this point; use chart I")
    if kind == "B21":
        sin_half = (et - 1 / et) / 2j
        return -cmath.exp(1j * math.pi * m) * sin_half / sin2
    if kind == "B12":
        sin_half = (e - 1 / e) / 2j
        return -cmath.exp(-1j * math.pi * m) * sin_half / sin2
    u = cmath.exp(-2j * math.pi * s)
    if kind == "C21":
        w = et * et * u  # e^{i eta~ - 2 pi i s}
        pref = 1j * cmath.exp(1j * math.pi * m) / (et * et * u) / sin2**2
        c1 = w * cmath.cos(math.pi * (s - m / 2)) - cmath.cos(math.pi * (s + m / 2))
        c2 = w * cmath.sin(math.pi * (s - m / 2)) + cmath.sin(math.pi * (s + m / 2))
        return pref * c1 * c2
    if kind == "C12":
        w = e * e * u
        pref = 1j * cmath.exp(-1j * math.pi * m) / (e * e * u) / sin2**2
        c1 = w * cmath.cos(math.pi * (s + m / 2)) - cmath.cos(math.pi * (s - m / 2))
        c2 = w * cmath.sin(math.pi * (s + m / 2)) + cmath.sin(math.pi * (s - m / 2))
        return pref * c1 * c2
    raise DomainError(f"unknown f-ratio {kind!r}")


def f_ratio_B21_eta_form(pt: MonodromyPoint, m=None) -> complex:
    """f^{B/A}_21 written through eta (the left form of its closed expression)."""
    m = _mass(pt, m)
    s = pt.sigma
    e, _ = _chart_etas(pt, m)
    r = _sin(2 * s + m) / _sin(2 * s - m)
    return (e * r - 1 / (e * r)) / (-2j * cmath.exp(-1j * math.pi * m) * cmath.sin(2 * math.pi * s))


def normalizability_residual(cycle: str, m_sign: int, pt: MonodromyPoint, m=None) -> complex:
    """Quantity whose vanishing is the normalizability condition on the given cycle.

    A: 1/f^{B/A} (21-entry for m > 0, 12-entry for m < 0); B, C: f^{B/A} or f^{C/A}.
    """
    if cycle not in ("A", "B", "C"):
        raise DomainError("cycle must be A, B or C")
    if m_sign not in (1, -1):
        raise DomainError("m_sign must be +1 or -1")
    entry = "21" if m_sign > 0 else "12"
    if cycle == "A":
        return 1 / f_ratio("B" + entry, pt, m)
    return f_ratio(cycle + entry, pt, m)
