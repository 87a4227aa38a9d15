"""Non-trivial fixed points of the universal flow equation.

For negative gamma the stationary profiles of the universal equation satisfy
the integrated algebraic relation

    R(rho)**(1 + 1/gamma) = R(rho) - rho ,        R(0) = 1 ,

which for the physical family ``gamma = -1/n`` (n a positive integer, so that
R is regular in 1/rho at infinity) becomes polynomial:

    R**n - rho R**(n-1) - 1 = 0 .

This module solves the relation by warm-started Newton continuation in rho,
provides the explicit closed forms for n = 1, 2, 3, the singularity locations,
the pole-free power-series coefficients, the duality between gamma and
1/gamma, and the non-linear change of variables h(rho) that places a saddle
at a prescribed finite location.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .potentials import PositivityError, RFunction
from .series import TruncatedSeries

__all__ = [
    "FixedPointSolution",
    "SingularityInfo",
    "HResult",
    "solve_fixed_point",
    "closed_form",
    "singularity",
    "series_coeffs",
    "duality_check",
    "nonlinear_h",
    "estimate_radius",
]


@dataclass(frozen=True)
class SingularityInfo:
    """Moduli of the nearest algebraic branch points of a fixed-point R.

    The branch-point values are complex for gamma < 0; only principal-branch
    moduli are reported.  ``count`` is the number of equivalent singularities
    on the circle for the polynomial family (the n-th roots of unity map
    solutions to solutions); ``finite`` is False for gamma = -1 where
    R = 1 + rho is entire.
    """

    finite: bool
    r_modulus: float = math.nan
    rho_modulus: float = math.nan
    count: Optional[int] = None


@dataclass
class FixedPointSolution:
    gamma: float
    n: Optional[int]
    rho: np.ndarray
    values: np.ndarray
    residual: np.ndarray
    singularity: SingularityInfo
    branch: str = "principal"

    def grid_function(self, rho_0: float = 0.0) -> RFunction:
        return RFunction.from_grid(self.rho, self.values, rho_0)


def _as_polynomial_index(gamma: float) -> Optional[int]:
    n = round(-1.0 / gamma)
    if n >= 1 and abs(gamma + 1.0 / n) < 1e-12:
        return int(n)
    return None


def _residual_fn(gamma: float, n: Optional[int]):
    if n is not None:

        def f(r, rho):
            return r**n - rho * r ** (n - 1) - 1.0

        def df(r, rho):
            return n * r ** (n - 1) - (n - 1) * rho * r ** (n - 2)

    else:
        expo = 1.0 + 1.0 / gamma

        def f(r, rho):
            return r**expo - r + rho

        def df(r, rho):
            return expo * r ** (expo - 1.0) - 1.0

    return f, df


def _newton_scalar(f, df, rho: float, guess: float) -> float:
    r = max(guess, 1e-12)
    for _ in range(80):
        fr = f(r, rho)
        if abs(fr) < 1e-14 * (1.0 + abs(r)):
            return r
        d = df(r, rho)
        if d == 0.0:
            break
        step = fr / d
        r_new = r - step
        if r_new <= 0.0:
            r_new = 0.5 * r
        if abs(r_new - r) < 1e-16 * r:
            return r_new
        r = r_new
    # bracketing fallback around the last iterate
    lo, hi = 0.5 * r, 2.0 * r
    for _ in range(200):
        if f(lo, rho) * f(hi, rho) < 0.0:
            from scipy.optimize import brentq

            return brentq(lambda x: f(x, rho), lo, hi, xtol=1e-15, rtol=4e-16)
        lo *= 0.5
        hi *= 2.0
        if hi > 1e300:
            break
    raise RuntimeError(f"fixed-point solve failed at rho = {rho}")


def solve_fixed_point(gamma: Optional[float] = None, rho_grid=None,
                      n: Optional[int] = None) -> FixedPointSolution:
    """Solve the integrated fixed-point relation along a rho grid.

    Continuation in rho: the solution at the previous grid point seeds the
    Newton iteration at the next one, keeping the principal positive branch
    through R(0) = 1.  Either ``gamma < 0`` or the polynomial index ``n`` may
    be given; a gamma within 1e-12 of -1/n automatically uses the polynomial
    form.
    """
    if n is not None:
        n = int(n)
        if n < 1:
            raise ValueError("polynomial index n must be a positive integer")
        gamma = -1.0 / n
    else:
        if gamma is None:
            raise ValueError("provide gamma or n")
        gamma = float(gamma)
        if gamma >= 0.0:
            raise ValueError("fixed points require gamma < 0")
        n = _as_polynomial_index(gamma)

    rho = np.asarray(rho_grid, dtype=float)
    if rho.ndim != 1 or rho[0] != 0.0:
        raise ValueError("rho grid must be 1-d and start at 0")
    f, df = _residual_fn(gamma, n)
    values = np.empty_like(rho)
    guess = 1.0
    for i, x in enumerate(rho):
        guess = _newton_scalar(f, df, float(x), guess)
        values[i] = guess
    residual = np.abs(f(values, rho))
    return FixedPointSolution(gamma, n, rho, values, residual, singularity(gamma))


def solve_fixed_point_at(gamma: float, rho: float, steps: int = 256) -> float:
    """Value of the fixed-point R at a single rho, via a short continuation."""
    grid = np.linspace(0.0, float(rho), max(2, steps))
    return float(solve_fixed_point(gamma, grid).values[-1])


def closed_form(n: int, rho):
    """Explicit fixed-point solutions for n = 1, 2, 3.

    n = 3 is the real-branch Cardano expression; its cube-root argument stays
    positive for rho >= 0 so no complex detour is needed.
    """
    rho = np.asarray(rho, dtype=float)
    if n == 1:
        out = 1.0 + rho
    elif n == 2:
        out = 0.5 * (rho + np.sqrt(rho**2 + 4.0))
    elif n == 3:
        a = rho**3 / 27.0 + 0.5 + 0.5 * np.sqrt(1.0 + 4.0 * rho**3 / 27.0)
        cube = np.cbrt(a)
        out = cube + rho**2 / (9.0 * cube) + rho / 3.0
    else:
        raise ValueError("closed forms exist for n in {1, 2, 3} only")
    return out[()] if out.ndim == 0 else out


def singularity(gamma: float) -> SingularityInfo:
    """Branch-point moduli of the fixed-point solution.

    The singular points satisfy both the algebraic relation and its
    R-derivative, giving ``R = (gamma/(1+gamma))**gamma`` and
    ``rho = gamma**gamma / (1+gamma)**(1+gamma)``; for gamma = -1/n this is
    ``|rho|**n = n**n / (n-1)**(n-1)`` with n singularities related by the
    n-th roots of unity.  gamma = -1 has no finite singularity.
    """
    gamma = float(gamma)
    if gamma >= 0.0:
        raise ValueError("fixed points require gamma < 0")
    if gamma == -1.0:
        return SingularityInfo(finite=False, count=None)
    n = _as_polynomial_index(gamma)
    if n is not None:
        rho_mod = (float(n) ** n / float(n - 1) ** (n - 1)) ** (1.0 / n)
        r_mod = float(n - 1) ** (1.0 / n)
        return SingularityInfo(True, r_mod, rho_mod, count=n)
    g = complex(gamma)
    r_val = cmath.exp(g * cmath.log(g / (1.0 + g)))
    rho_val = cmath.exp(g * cmath.log(g) - (1.0 + g) * cmath.log(1.0 + g))
    return SingularityInfo(True, abs(r_val), abs(rho_val), count=None)


def series_coeffs(gamma: float, K: int) -> TruncatedSeries:
    """Taylor coefficients of the fixed-point R about rho = 0.

    The Gamma-function ratio in the closed-form coefficient has arguments
    differing by the integer n-1, so it is evaluated as a rising factorial,

        a_n = -gamma * (1 + gamma (n-1))_(n-1) / n! ,

    which stays finite at the physically required gamma = -1/n where the
    individual Gamma factors sit on poles.  a_0 = 1 by normalization.
    """
    gamma = float(gamma)
    if K < 0 or K > 64:
        raise ValueError("series order must lie in [0, 64]")
    coeffs = np.empty(K + 1)
    coeffs[0] = 1.0
    for m in range(1, K + 1):
        x = 1.0 + gamma * (m - 1)
        rising = 1.0
        for j in range(m - 1):
            rising *= x + j
        coeffs[m] = -gamma * rising / math.factorial(m)
    return TruncatedSeries(coeffs)


def estimate_radius(series: TruncatedSeries) -> float:
    """Convergence radius by consecutive-ratio extrapolation.

    Ratios of successive non-zero coefficient magnitudes (taken at geometric
    mean spacing to step over structural zeros) approach the radius like
    r (1 + b/k); a linear fit in 1/k over the tail removes the leading
    correction.
    """
    mags = np.abs(series.coeffs)
    idx = [k for k in range(len(mags)) if mags[k] > 0.0]
    if len(idx) < 6:
        raise ValueError("too few non-zero coefficients for a ratio estimate")
    ks, rs = [], []
    for a, b in zip(idx[:-1], idx[1:]):
        rs.append((mags[a] / mags[b]) ** (1.0 / (b - a)))
        ks.append(0.5 * (a + b))
    ks, rs = np.array(ks), np.array(rs)
    tail = ks > 0.5 * ks[-1]
    coef = np.polynomial.polynomial.polyfit(1.0 / ks[tail], rs[tail], 1)
    return float(coef[0])


def duality_check(gamma: float, rho: float, steps: int = 512) -> float:
    """Residual of the reciprocal-exponent relation between gamma and 1/gamma,

        R(rho, gamma) = rho * R(rho**(1/gamma), 1/gamma)**(-gamma) ,

    with both sides produced by the numerical solver.
    """
    gamma = float(gamma)
    if gamma >= 0.0:
        raise ValueError("fixed points require gamma < 0")
    rho = float(rho)
    if rho <= 0.0:
        raise ValueError("the duality map needs rho > 0")
    lhs = solve_fixed_point_at(gamma, rho, steps)
    rho_dual = rho ** (1.0 / gamma)
    rhs_inner = solve_fixed_point_at(1.0 / gamma, rho_dual,
                                     max(steps, int(8 * rho_dual) + 2))
    return abs(lhs - rho * rhs_inner ** (-gamma))


@dataclass
class HResult:
    """Non-linear renormalization profile with its defining-ODE residual.

    ``saddle_constraint`` is ``1 - h'(1) - R'(1) (1 - h(1))``; it vanishes
    exactly when the change of variables places a saddle at rho = 1.
    """

    rho: np.ndarray
    h: np.ndarray
    ode_residual: np.ndarray
    saddle_constraint: float


def _cumulative_simpson(y: np.ndarray, h: float) -> np.ndarray:
    """Cumulative integral on a uniform grid, composite Simpson rule.

    Even indices use Simpson pairs; odd indices add the quadratic-fit
    half-panel ``h (5 f0 + 8 f1 - f2) / 12``.
    """
    n = y.size
    out = np.zeros(n)
    for i in range(1, n):
        if i % 2 == 0:
            out[i] = out[i - 2] + h * (y[i - 2] + 4.0 * y[i - 1] + y[i]) / 3.0
        elif i + 1 < n:
            out[i] = out[i - 1] + h * (5.0 * y[i - 1] + 8.0 * y[i] - y[i + 1]) / 12.0
        else:
            out[i] = out[i - 1] + h * (-y[i - 2] + 8.0 * y[i - 1] + 5.0 * y[i]) / 12.0
    return out


def nonlinear_h(r, rho_grid) -> HResult:
    """Change-of-variables profile h for a prescribed fixed-point R,

        h(rho) = R(rho) [ integral_0^rho drho'/R(rho') - ln R(rho) + c ] ,

    with c = ln R(0) so that h(0) = 0.  The returned residual is the
    pointwise value of the defining ODE ``-R h' + R' h + R - R R'`` (zero in
    exact arithmetic); derivatives are fourth-order stencils, the integral is
    composite Simpson.
    """
    rho = np.asarray(rho_grid, dtype=float)
    if rho.ndim != 1 or rho.size < 7:
        raise ValueError("need a 1-d grid with at least 7 points")
    h_step = rho[1] - rho[0]
    if not np.allclose(np.diff(rho), h_step):
        raise ValueError("grid must be uniform")
    R = np.asarray(r(rho), dtype=float)
    if np.any(R <= 0.0):
        raise PositivityError("R must be strictly positive on the grid")

    integral = _cumulative_simpson(1.0 / R, h_step)
    h_vals = R * (integral - np.log(R) + math.log(R[0]))

    from .flow import grid_derivative

    hp = grid_derivative(h_vals, h_step)
    rp = grid_derivative(R, h_step)
    residual = -R * hp + rp * h_vals + R - R * rp

    constraint = math.nan
    if rho[0] <= 1.0 <= rho[-1]:
        h1 = _interp4(rho, h_vals, 1.0)
        hp1 = _interp4(rho, hp, 1.0)
        rp1 = _interp4(rho, rp, 1.0)
        constraint = 1.0 - hp1 - rp1 * (1.0 - h1)
    return HResult(rho, h_vals, residual, constraint)


def _interp4(x: np.ndarray, y: np.ndarray, x0: float) -> float:
    """Local cubic (4-point Lagrange) interpolation on a sorted grid."""
    i = int(np.searchsorted(x, x0))
    lo = min(max(i - 2, 0), x.size - 4)
    xs, ys = x[lo:lo + 4], y[lo:lo + 4]
    total = 0.0
    for j in range(4):
        w = 1.0
        for k in range(4):
            if k != j:
                w *= (x0 - xs[k]) / (xs[j] - xs[k])
        total += w * ys[j]
    return float(total)
