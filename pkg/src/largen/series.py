"""Truncated power-series arithmetic.

A :class:`TruncatedSeries` stores the Taylor coefficients ``a_0 .. a_K`` of a
formal one-variable series truncated at order ``K``.  Arithmetic between two
series of orders ``K1`` and ``K2`` yields a series of order ``min(K1, K2)``;
within that order every operation is exact in float64 up to rounding.

Log and real-power are computed with division-free recurrences obtained by
differentiating the defining relation and convolving:

    b = ln(a)      satisfies  b' * a = a'
    c = a**alpha   satisfies  c' * a = alpha * a' * c

Both need ``a_0 > 0``.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "TruncatedSeries",
    "series_add",
    "series_mul",
    "series_scale",
    "series_ln",
    "series_pow",
]


class TruncatedSeries:
    """Coefficients ``a_0 .. a_K`` of a series truncated at order ``K``.

    Instances behave as immutable values; the coefficient array is copied on
    construction and never mutated.  The usual operators (``+ - *``) are
    provided as sugar over the module-level functions.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        c = np.asarray(coeffs, dtype=float)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coefficients must be a non-empty 1-d sequence")
        self.coeffs = c.copy()
        self.coeffs.flags.writeable = False

    @property
    def order(self) -> int:
        return self.coeffs.size - 1

    def __len__(self) -> int:
        return self.coeffs.size

    def __getitem__(self, k: int) -> float:
        return float(self.coeffs[k])

    def truncated(self, order: int) -> "TruncatedSeries":
        """Copy truncated (or zero-padded) to the given order."""
        if order < 0:
            raise ValueError("order must be nonnegative")
        n = order + 1
        if n <= self.coeffs.size:
            return TruncatedSeries(self.coeffs[:n])
        out = np.zeros(n)
        out[: self.coeffs.size] = self.coeffs
        return TruncatedSeries(out)

    def deriv(self) -> "TruncatedSeries":
        """Formal derivative; order drops by one (constant stays order 0)."""
        if self.order == 0:
            return TruncatedSeries([0.0])
        k = np.arange(1, self.coeffs.size)
        return TruncatedSeries(self.coeffs[1:] * k)

    def __call__(self, x: float) -> float:
        return float(np.polynomial.polynomial.polyval(x, self.coeffs))

    def __add__(self, other):
        if isinstance(other, TruncatedSeries):
            return series_add(self, other)
        out = self.coeffs.copy()
        out[0] += float(other)
        return TruncatedSeries(out)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries(-self.coeffs)

    def __sub__(self, other):
        return self + (-other if isinstance(other, TruncatedSeries) else -float(other))

    def __rsub__(self, other):
        return (-self) + float(other)

    def __mul__(self, other):
        if isinstance(other, TruncatedSeries):
            return series_mul(self, other)
        return series_scale(self, float(other))

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"TruncatedSeries({self.coeffs.tolist()})"


def _common_order(a: TruncatedSeries, b: TruncatedSeries) -> int:
    return min(a.order, b.order)


def series_add(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    """Coefficientwise sum, truncated at the common order."""
    n = _common_order(a, b) + 1
    return TruncatedSeries(a.coeffs[:n] + b.coeffs[:n])


def series_scale(a: TruncatedSeries, c: float) -> TruncatedSeries:
    """Multiply every coefficient by the scalar ``c``."""
    return TruncatedSeries(a.coeffs * float(c))


def series_mul(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    """Cauchy product truncated at the common order."""
    n = _common_order(a, b) + 1
    return TruncatedSeries(np.convolve(a.coeffs[:n], b.coeffs[:n])[:n])


def series_ln(a: TruncatedSeries) -> TruncatedSeries:
    """Logarithm of a series with positive constant term.

    Uses the recurrence from ``(ln a)' * a = a'``:

        (n+1) b_{n+1} a_0 = (n+1) a_{n+1} - sum_{k=1..n} (n+1-k) b_{n+1-k} a_k
    """
    a0 = a.coeffs[0]
    if not a0 > 0.0:
        raise ValueError(f"series_ln requires a positive constant term, got {a0}")
    n = a.order
    b = np.empty(n + 1)
    b[0] = math.log(a0)
    for m in range(1, n + 1):
        s = m * a.coeffs[m]
        for k in range(1, m):
            s -= (m - k) * b[m - k] * a.coeffs[k]
        b[m] = s / (m * a0)
    return TruncatedSeries(b)


def series_pow(a: TruncatedSeries, alpha: float) -> TruncatedSeries:
    """Real power of a series with positive constant term.

    Uses the recurrence from ``(a**alpha)' * a = alpha * a' * (a**alpha)``:

        (n+1) c_{n+1} a_0 = alpha * sum_{j=0..n} (j+1) a_{j+1} c_{n-j}
                            - sum_{k=1..n} (n+1-k) c_{n+1-k} a_k
    """
    a0 = a.coeffs[0]
    if not a0 > 0.0:
        raise ValueError(f"series_pow requires a positive constant term, got {a0}")
    alpha = float(alpha)
    n = a.order
    c = np.empty(n + 1)
    c[0] = a0**alpha
    for m in range(1, n + 1):
        s = 0.0
        for j in range(m):
            s += alpha * (j + 1) * a.coeffs[j + 1] * c[m - 1 - j]
        for k in range(1, m):
            s -= (m - k) * c[m - k] * a.coeffs[k]
        c[m] = s / (m * a0)
    return TruncatedSeries(c)
