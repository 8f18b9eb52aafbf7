"""Truncated power series c_0 + c_1 x + ... + c_N x^N with complex coefficients."""

from __future__ import annotations

import numpy as np


class TruncatedSeries:
    """Power series in a single variable (tagged ``q`` or ``t``) truncated at order N.

    Binary operations truncate to the smaller of the two orders.
    """

    __slots__ = ("coeffs", "var")

    def __init__(self, coeffs, var: str = "q"):
        c = np.array(coeffs, dtype=complex).ravel()
        if c.size == 0:
            raise ValueError("a series needs at least one coefficient")
        self.coeffs = c
        self.var = var

    @property
    def order(self) -> int:
        return self.coeffs.size - 1

    def __len__(self):
        return self.coeffs.size

    def __getitem__(self, k):
        return self.coeffs[k]

    def __repr__(self):
        return f"TruncatedSeries({self.var}, order={self.order}, {self.coeffs.tolist()})"

    @classmethod
    def one(cls, order: int, var: str = "q") -> "TruncatedSeries":
        c = np.zeros(order + 1, dtype=complex)
        c[0] = 1.0
        return cls(c, var)

    def truncate(self, order: int) -> "TruncatedSeries":
        return TruncatedSeries(self.coeffs[: order + 1], self.var)

    def _coerce(self, other):
        if isinstance(other, TruncatedSeries):
            n = min(self.order, other.order)
            return self.coeffs[: n + 1], other.coeffs[: n + 1]
        c = np.zeros_like(self.coeffs)
        c[0] = other
        return self.coeffs, c

    def __add__(self, other):
        a, b = self._coerce(other)
        return TruncatedSeries(a + b, self.var)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries(-self.coeffs, self.var)

    def __sub__(self, other):
        a, b = self._coerce(other)
        return TruncatedSeries(a - b, self.var)

    def __rsub__(self, other):
        a, b = self._coerce(other)
        return TruncatedSeries(b - a, self.var)

    def __mul__(self, other):
        if not isinstance(other, TruncatedSeries):
            return TruncatedSeries(self.coeffs * other, self.var)
        a, b = self._coerce(other)
        n = a.size
        return TruncatedSeries(np.convolve(a, b)[:n], self.var)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, TruncatedSeries):
            return TruncatedSeries(self.coeffs / other, self.var)
        return self * other.reciprocal()

    def reciprocal(self) -> "TruncatedSeries":
        a = self.coeffs
        if a[0] == 0:
            raise ZeroDivisionError("series with vanishing constant term")
        out = np.zeros_like(a)
        out[0] = 1.0 / a[0]
        for k in range(1, a.size):
            out[k] = -np.dot(a[1 : k + 1], out[k - 1 :: -1][:k]) / a[0]
        return TruncatedSeries(out, self.var)

    def log(self) -> "TruncatedSeries":
        """log of a series normalized so that the constant term is 1 (log c0 is added)."""
        a = self.coeffs
        if a[0] == 0:
            raise ZeroDivisionError("log of series with vanishing constant term")
        d = self.x_d_dx() / self
        out = np.zeros_like(a)
        out[0] = np.log(a[0])
        k = np.arange(1, a.size)
        out[1:] = d.coeffs[1:] / k
        return TruncatedSeries(out, self.var)

    def exp(self) -> "TruncatedSeries":
        a = self.coeffs
        n = a.size
        out = np.zeros_like(a)
        out[0] = 1.0
        ka = np.arange(n) * a
        for k in range(1, n):
            out[k] = np.dot(ka[1 : k + 1], out[k - 1 :: -1][:k]) / k
        return TruncatedSeries(out * np.exp(a[0]), self.var)

    def __pow__(self, p):
        if isinstance(p, (int, np.integer)) and p >= 0:
            out = TruncatedSeries.one(self.order, self.var)
            base = self
            e = int(p)
            while e:
                if e & 1:
                    out = out * base
                base = base * base
                e >>= 1
            return out
        a0 = self.coeffs[0]
        return (self / a0).log().__mul__(p).exp() * (a0**p)

    def x_d_dx(self) -> "TruncatedSeries":
        """Apply x d/dx (the log-derivative operator)."""
        return TruncatedSeries(self.coeffs * np.arange(self.coeffs.size), self.var)

    def __call__(self, x):
        return np.polyval(self.coeffs[::-1], x)
