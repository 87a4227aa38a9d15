"""Large-N saddle-point analysis and the finite-N quadrature oracle.

After the angular integration an O(N) vector integral reduces to a single
radial integral with effective action ``N * sigma(rho)``,

    sigma(rho) = V(rho) - ln(rho) / 2 ,

whose stationary points solve ``R(rho) = rho - rho_0``.  This module locates
those roots (including the tangential roots of multicritical potentials),
classifies their criticality order, evaluates the two-term large-N asymptotics
of the free energy, and computes the exact finite-N answer by adaptive
quadrature in the log domain.  The quadrature is the independent oracle the
asymptotic and scaling claims are checked against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq, minimize_scalar

from .potentials import (
    Potential,
    RFunction,
    eval_V,
    eval_dV,
    eval_ddV,
    multicritical_potential,
)

__all__ = [
    "SaddleReport",
    "CollapseResult",
    "solve_saddle",
    "free_energy_largeN",
    "quadrature_Z",
    "scaling_collapse",
    "scaling_exponent_d0",
    "sigma",
]

#: residual tolerance for polished roots, scaled by (1 + rho)
ROOT_TOL = 1e-12
#: |F| threshold accepting a tangential (no sign change) root
TOUCH_TOL = 1e-9
#: relative threshold below which a derivative counts as vanishing
ORDER_RTOL = 1e-6


def sigma(p: Potential, rho):
    """Effective radial action density ``V(rho) - ln(rho)/2``."""
    return eval_V(p, rho) - 0.5 * np.log(rho)


def _poly_derivative(coeffs: Sequence[float], rho: float, k: int) -> float:
    c = list(coeffs)
    for _ in range(k):
        c = [j * c[j] for j in range(1, len(c))]
        if not c:
            return 0.0
    return float(np.polynomial.polynomial.polyval(rho, c))


def _sigma_derivative(p: Potential, rho: float, k: int) -> float:
    """Exact k-th derivative of sigma for a polynomial potential (k >= 1)."""
    measure = 0.5 * (-1.0) ** k * math.factorial(k - 1) / rho**k
    return _poly_derivative(p.coeffs, rho, k) + measure


def _fd_derivative(f, x: float, k: int, h: float) -> float:
    """k-th derivative by central differences with one Richardson step."""

    def central(step):
        total = 0.0
        for j in range(k + 1):
            total += (-1.0) ** j * math.comb(k, j) * f(x + (0.5 * k - j) * step)
        return total / step**k

    d_h, d_h2 = central(h), central(0.5 * h)
    return (4.0 * d_h2 - d_h) / 3.0


@dataclass
class SaddleReport:
    """Roots of the (shifted) saddle condition with criticality orders.

    ``orders[i]`` is the smallest k >= 2 such that the k-th derivative of the
    effective action does not vanish at ``roots[i]``; ``order_m`` is the order
    of the first root.  ``z_leading``/``z_correction`` hold the two terms of
    the large-N free energy when the report describes a unique ordinary
    (order 2) saddle of a potential, else NaN.
    """

    roots: tuple = ()
    orders: tuple = ()
    rho_0: float = 0.0
    z_leading: float = math.nan
    z_correction: float = math.nan

    @property
    def order_m(self) -> Optional[int]:
        return self.orders[0] if self.orders else None


def _order_from_sigma(p: Potential, rho_c: float, k_max: int = 10) -> int:
    """Criticality order from exact derivatives of sigma at the root."""
    scale = 1.0 + rho_c
    k_top = min(k_max, p.degree + 2)
    taylor = {}
    for k in range(2, k_top + 1):
        taylor[k] = abs(_sigma_derivative(p, rho_c, k)) * scale**k / math.factorial(k)
    cutoff = ORDER_RTOL * max(taylor.values())
    for k in range(2, k_top + 1):
        if taylor[k] > cutoff:
            return k
    return k_top


def _order_from_r(r: RFunction, rho_c: float, rho_0: float, span: float) -> int:
    """Criticality order from derivatives of F = R - rho + rho_0.

    A saddle of order m corresponds to a zero of F of multiplicity m - 1.
    Derivatives come from the spline (grid-backed) or Richardson finite
    differences (analytic R), so only low orders are resolvable; the result
    is capped at 4.
    """
    scale = 1.0 + rho_c
    deriv = {}
    for k in range(1, 4):
        if r.potential is None:
            d = float(r.derivative(rho_c, k)) - (1.0 if k == 1 else 0.0)
        else:
            h = min(1e-2 * scale, 0.25 * span)
            d = _fd_derivative(lambda x: float(r(x)) - x + rho_0, rho_c, k, h)
        deriv[k] = abs(d) * scale**k / math.factorial(k)
    cutoff = ORDER_RTOL * max(max(deriv.values()), 1.0)
    for k in range(1, 4):
        if deriv[k] > cutoff:
            return k + 1
    return 5


def solve_saddle(r: RFunction, rho_0: float = 0.0, domain=(0.0, 8.0),
                 panels: int = 4096) -> SaddleReport:
    """Find all roots of ``R(rho) - rho + rho_0`` on the domain.

    Sign changes over a uniform panel scan are polished by Newton iteration
    (bisection fallback) to ``|F| < 1e-12 * (1 + rho)``.  Tangential roots,
    where F touches zero without changing sign (odd multicritical order),
    are caught by minimizing F**2 around interior extrema.  An empty report
    is returned when there is no root.
    """
    lo, hi = float(domain[0]), float(domain[1])
    if hi <= lo:
        raise ValueError("empty domain")
    rho_0 = float(rho_0)
    xs = np.linspace(lo, hi, panels + 1)
    fs = np.asarray(r(xs), dtype=float) - xs + rho_0

    def F(x):
        return float(r(x)) - x + rho_0

    roots = []

    # ordinary roots: sign changes
    change = np.nonzero(np.sign(fs[:-1]) * np.sign(fs[1:]) < 0)[0]
    for i in change:
        roots.append(_polish_root(F, xs[i], xs[i + 1], fs[i], fs[i + 1]))
    # exact grid hits
    for i in np.nonzero(fs == 0.0)[0]:
        roots.append(float(xs[i]))

    # tangential roots: minima of F^2 away from sign changes
    absf = np.abs(fs)
    interior = np.nonzero((absf[1:-1] <= absf[:-2]) & (absf[1:-1] <= absf[2:]))[0] + 1
    for i in interior:
        if fs[i] == 0.0 or any(abs(xs[i] - rt) < 2 * (xs[1] - xs[0]) for rt in roots):
            continue
        res = minimize_scalar(lambda x: F(x) ** 2, bounds=(xs[i - 1], xs[i + 1]),
                              method="bounded", options={"xatol": 1e-13})
        cand = float(res.x)
        if abs(F(cand)) < TOUCH_TOL * (1.0 + abs(cand)):
            roots.append(cand)

    roots = sorted(roots)
    dedup = []
    for rt in roots:
        if not dedup or rt - dedup[-1] > 1e-8 * (1.0 + rt):
            dedup.append(rt)

    orders = []
    for rt in dedup:
        if r.potential is not None and rho_0 == 0.0 and r.potential.model.kind == "VectorD0":
            orders.append(_order_from_sigma(r.potential, rt))
        else:
            orders.append(_order_from_r(r, rt, rho_0, hi - lo))

    z_lead = z_corr = math.nan
    if (r.potential is not None and len(dedup) == 1 and orders[0] == 2
            and rho_0 == 0.0 and r.potential.model.kind == "VectorD0"):
        rc = dedup[0]
        p = r.potential
        z_lead = 0.5 - float(eval_V(p, rc)) + 0.5 * math.log(rc)
        curv = 2.0 * rc**2 * float(eval_ddV(p, rc)) + 1.0
        z_corr = -0.5 * math.log(curv) if curv > 0.0 else math.nan

    return SaddleReport(tuple(dedup), tuple(orders), rho_0, z_lead, z_corr)


def _polish_root(F, a: float, b: float, fa: float, fb: float) -> float:
    """Newton from the secant estimate, bisection bracket as the safety net."""
    x = a - fa * (b - a) / (fb - fa)
    h = 1e-7 * (1.0 + abs(x))
    for _ in range(60):
        fx = F(x)
        if abs(fx) < ROOT_TOL * (1.0 + abs(x)):
            return x
        dfx = (F(x + h) - F(x - h)) / (2.0 * h)
        if dfx != 0.0:
            step = fx / dfx
            if a <= x - step <= b:
                x -= step
                continue
        x = brentq(F, a, b, xtol=1e-15, rtol=4e-16)
        break
    if abs(F(x)) < ROOT_TOL * (1.0 + abs(x)):
        return x
    raise RuntimeError("saddle root polishing did not converge")


def _saddle_of_potential(p: Potential) -> SaddleReport:
    """Saddle report on an automatically grown domain for a potential."""
    r = RFunction.from_potential(p)
    hi = 4.0
    while hi <= 1024.0:
        rep = solve_saddle(r, 0.0, (0.0, hi))
        if rep.roots:
            return rep
        hi *= 2.0
    return SaddleReport()


def free_energy_largeN(p: Potential, N: int) -> float:
    """Two-term large-N asymptotics of the radial-integral free energy.

        Z_N = N [1/2 - V(rho_c) + ln(rho_c)/2]
              - ln[2 rho_c^2 V''(rho_c) + 1] / 2  + O(1/N)

    Requires a unique ordinary saddle; multicritical potentials are rejected
    because the Gaussian correction term is invalid there.
    """
    rep = _saddle_of_potential(p)
    if not rep.roots:
        raise ValueError("no saddle point found")
    if len(rep.roots) > 1:
        raise ValueError(f"saddle is not unique: {rep.roots}")
    if rep.order_m != 2:
        raise ValueError(
            f"multicritical saddle (order {rep.order_m}): Gaussian correction invalid"
        )
    rc = rep.roots[0]
    curv = 2.0 * rc**2 * float(eval_ddV(p, rc)) + 1.0
    if curv <= 0.0:
        raise ValueError("non-positive Gaussian curvature at the saddle")
    return N * rep.z_leading + rep.z_correction


def _leading_coefficient(p: Potential):
    for k in range(p.degree, 0, -1):
        if p.coeffs[k] != 0.0:
            return k, p.coeffs[k]
    return 0, 0.0


def quadrature_Z(p: Potential, N: int) -> float:
    """Finite-N free energy by adaptive quadrature, entirely in log domain.

    The integrand ``exp(phi)`` with ``phi = -N sigma - ln rho`` is shifted by
    its maximum before exponentiation, integrated with relative tolerance
    1e-10, and combined with the exact log-Gamma normalization

        ln(norm) = (N/2) ln(N/2) - ln Gamma(N/2) .

    Divergent integrals (potential unbounded below, so sigma is bounded above
    at large rho) raise ValueError; defining those requires a contour
    continuation that is out of scope here.
    """
    N = int(N)
    if not 1 <= N <= 10**6:
        raise ValueError("N must be a positive integer <= 1e6")
    deg, lead = _leading_coefficient(p)
    if deg == 0 or lead < 0.0:
        raise ValueError("integral not convergent; potential unbounded below")

    coeffs = p.coeffs

    def phi(rho):
        v = np.polynomial.polynomial.polyval(rho, coeffs)
        return -N * v + (0.5 * N - 1.0) * np.log(rho)

    rho_star = _phi_peak(p, N)
    phi_star = float(phi(rho_star))

    # integration window: walk out until the shifted integrand underflows
    a = rho_star
    while a > 1e-280 and phi(a) - phi_star > -745.0:
        a *= 0.5
    b = rho_star
    while phi(b) - phi_star > -745.0:
        b *= 2.0
        if b > 1e280:
            raise ValueError("integral not convergent; potential unbounded below")

    val, _err = quad(lambda x: math.exp(float(phi(x)) - phi_star), a, b,
                     points=[rho_star], limit=300, epsabs=0.0, epsrel=1e-10)
    return phi_star + math.log(val) + 0.5 * N * math.log(0.5 * N) - math.lgamma(0.5 * N)


def _phi_peak(p: Potential, N: int) -> float:
    """Maximizer of the log-integrand; falls back to the sigma saddle for N <= 2."""
    if N >= 3:
        c = 0.5 * N - 1.0

        def g(rho):
            return N * float(eval_dV(p, rho)) * rho - c

        hi = 1.0
        while g(hi) < 0.0:
            hi *= 2.0
            if hi > 1e12:
                raise RuntimeError("no interior maximum found")
        lo = hi
        while g(lo) > 0.0:
            lo *= 0.5
        return brentq(g, lo, hi, xtol=1e-14, rtol=4e-16)
    rep = _saddle_of_potential(p)
    if rep.roots:
        return rep.roots[0]
    return 1.0


def scaling_exponent_d0(m: int, q: int) -> float:
    """Exponent of the N-window of a degree-q perturbation: ``q/m - 1``.

    Negative for relevant perturbations (q < m), zero at marginality q = m,
    and for q > m the same expression is the decay rate of an irrelevant
    coupling's contribution.
    """
    if m < 2:
        raise ValueError("multicriticality index must be >= 2")
    if q < 1:
        raise ValueError("perturbation degree must be >= 1")
    return q / m - 1.0


def _z_power_coeffs(m: int, q: int) -> np.ndarray:
    """rho-polynomial coefficients of ``(1 - rho/(m-1))**q``."""
    out = np.zeros(q + 1)
    for j in range(q + 1):
        out[j] = math.comb(q, j) * (-1.0 / (m - 1)) ** j
    return out


@dataclass
class CollapseResult:
    """Scaling-collapse sweep: rows of (N, v, x, deltaZ) plus the defect.

    ``defect`` is the largest pointwise spread between per-N curves after
    interpolation onto ``x_grid`` (the overlap of the per-N x ranges,
    optionally intersected with a user window).
    """

    rows: list = field(default_factory=list)
    x_grid: np.ndarray = None
    curves: dict = field(default_factory=dict)
    defect: float = math.nan
    max_abs_deltaz: float = math.nan


def scaling_collapse(m: int, q: int, v_list: Sequence[float],
                     N_list: Sequence[int], x_window=None,
                     grid_points: int = 101) -> CollapseResult:
    """Free-energy shift of a ``v * z**q`` perturbation against ``x = v N**(1-q/m)``.

    For each (v, N) the shift ``deltaZ = Z(V_c + v z**q) - Z(V_c)`` is exact
    finite-N quadrature; near the multicritical point the curves for
    different N collapse onto one function of the scaling variable x.  Only
    even m is accepted (odd m needs the contour continuation) and q must lie
    in [1, m-2]; q = m-1 is a translation of z, not a genuine perturbation.
    """
    m = int(m)
    if m < 4 or m % 2 != 0:
        raise ValueError(
            "collapse requires even m >= 4; odd multicritical integrals are "
            "contour-defined and not supported"
        )
    q = int(q)
    if not 1 <= q <= m - 2:
        raise ValueError(f"perturbation degree must lie in [1, {m - 2}], got {q}")

    vc = multicritical_potential(m)
    zq = _z_power_coeffs(m, q)
    base = np.zeros(max(len(vc.coeffs), len(zq)))
    base[: len(vc.coeffs)] = vc.coeffs

    rows = []
    for N in sorted(int(n) for n in N_list):
        z0 = quadrature_Z(vc, N)
        xfac = float(N) ** (1.0 - q / m)
        for v in sorted(float(v) for v in v_list):
            pert = base.copy()
            pert[: len(zq)] += v * zq
            pv = Potential(tuple(pert), vc.model, normalized=False)
            dz = quadrature_Z(pv, N) - z0
            rows.append((N, v, v * xfac, dz))

    result = CollapseResult(rows=rows)
    ns = sorted({row[0] for row in rows})
    if len(ns) >= 2 and len(v_list) >= 2:
        per_n = {}
        for N in ns:
            data = sorted((x, dz) for (n, _v, x, dz) in rows if n == N)
            per_n[N] = (np.array([d[0] for d in data]), np.array([d[1] for d in data]))
        lo = max(per_n[N][0][0] for N in ns)
        hi = min(per_n[N][0][-1] for N in ns)
        if x_window is not None:
            lo, hi = max(lo, x_window[0]), min(hi, x_window[1])
        if hi > lo:
            grid = np.linspace(lo, hi, grid_points)
            curves = {N: np.interp(grid, *per_n[N]) for N in ns}
            defect = 0.0
            for i, na in enumerate(ns):
                for nb in ns[i + 1:]:
                    defect = max(defect, float(np.max(np.abs(curves[na] - curves[nb]))))
            result.x_grid = grid
            result.curves = curves
            result.defect = defect
            result.max_abs_deltaz = float(max(np.max(np.abs(c)) for c in curves.values()))
    return result
