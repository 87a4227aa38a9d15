"""Polynomial potentials and the model-specific V-to-R mappings.

A :class:`Potential` is a dense polynomial ``V(rho) = sum_k c_k rho^k``
together with a model convention tag.  Four conventions are supported:

``VectorD0``
    O(N)-invariant simple integral in the radial variable ``rho = x^2``,
    normalized so ``V(rho) = rho/2 + O(rho^2)``.  Mapping ``R = 1/(2 V')``.
``VectorQM``
    O(N)-invariant path integral (one Euclidean time dimension), same
    normalization.  Mapping ``V' = 1/(8 R^2)``, i.e. ``R = (8 V')**-0.5``.
``VectorField(d)``
    O(N)-invariant field theory in dimension ``0 < d < 4`` (``d != 2``).
    Mapping ``R = K(d) * (2 V')**(d/2 - 1)`` with ``K(d)`` the one-loop
    tadpole constant ``Gamma(1 - d/2) / (4 pi)**(d/2)``.
``Matrix``
    Hermitian one-matrix integral with even potential
    ``V(mu) = sum_k g_k mu^(2k) / (2k)``, ``g_1 = 1``.  Coefficients are
    stored in ``rho = mu^2 / 2`` so all conventions share one type; the
    mapping is ``R = 1/f`` with ``f(rho) = V'(mu)/mu = dV/drho``.

Under these mappings the saddle condition and the RG flow of every model
reduce to one universal equation for ``R``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = [
    "Model",
    "VECTOR_D0",
    "VECTOR_QM",
    "MATRIX",
    "vector_field",
    "Potential",
    "RFunction",
    "PositivityError",
    "eval_V",
    "eval_dV",
    "eval_ddV",
    "r_from_potential",
    "K_of_d",
    "local_determinant_density",
    "multicritical_potential",
    "linear_fixed_potential",
    "gamma_anomalous",
    "format_potential",
    "parse_potential",
]


class PositivityError(ValueError):
    """V' is not strictly positive where the mapping to R needs it."""


@dataclass(frozen=True)
class Model:
    """Model convention tag; ``d`` is set only for the field-theory tag."""

    kind: str
    d: Optional[float] = None

    def __str__(self) -> str:
        if self.kind == "VectorField":
            return f"VectorField(d={self.d})"
        return self.kind


VECTOR_D0 = Model("VectorD0")
VECTOR_QM = Model("VectorQM")
MATRIX = Model("Matrix")

_NORMALIZED_SLOPE = {"VectorD0": 0.5, "VectorQM": 0.5, "VectorField": 0.5, "Matrix": 1.0}


def vector_field(d: float) -> Model:
    """Field-theory tag for dimension ``d``; rejects d outside (0,4) and d=2."""
    d = float(d)
    if not 0.0 < d < 4.0:
        raise ValueError(f"dimension must satisfy 0 < d < 4, got {d}")
    if d == 2.0:
        raise ValueError("d = 2 is not supported (pole of the tadpole constant)")
    return Model("VectorField", d)


@dataclass(frozen=True)
class Potential:
    """Dense polynomial potential with a model convention tag.

    ``normalized=True`` asserts the convention slope: ``c_1 = 1/2`` for the
    vector tags, ``c_1 = 1`` for the matrix tag (quadratic coupling fixed).
    """

    coeffs: tuple
    model: Model = VECTOR_D0
    normalized: bool = True

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coeffs)
        object.__setattr__(self, "coeffs", coeffs)
        if len(coeffs) < 2:
            raise ValueError("potential needs at least the linear coefficient")
        if self.normalized:
            want = _NORMALIZED_SLOPE[self.model.kind]
            if coeffs[1] != want:
                raise ValueError(
                    f"normalized {self.model} potential requires c_1 = {want}, "
                    f"got {coeffs[1]}"
                )

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1


def eval_V(p: Potential, rho):
    """Horner evaluation of V(rho)."""
    return np.polynomial.polynomial.polyval(rho, p.coeffs)


def eval_dV(p: Potential, rho):
    """Horner evaluation of V'(rho)."""
    c = p.coeffs
    d = [k * c[k] for k in range(1, len(c))]
    return np.polynomial.polynomial.polyval(rho, d)


def eval_ddV(p: Potential, rho):
    """Horner evaluation of V''(rho)."""
    c = p.coeffs
    d = [k * (k - 1) * c[k] for k in range(2, len(c))]
    if not d:
        return np.zeros_like(np.asarray(rho, dtype=float))[()]
    return np.polynomial.polynomial.polyval(rho, d)


def _lgamma_signed(x: float):
    """(sign, log|Gamma(x)|) for non-pole real x, by reflection for x < 0."""
    if x > 0.0:
        return 1.0, math.lgamma(x)
    if x == math.floor(x):
        raise ValueError(f"Gamma pole at {x}")
    # Gamma(x) = pi / (sin(pi x) * Gamma(1 - x))
    s = math.sin(math.pi * x)
    sign = 1.0 if s > 0 else -1.0
    return sign, math.log(math.pi / abs(s)) - math.lgamma(1.0 - x)


def K_of_d(d: float) -> float:
    """Tadpole constant ``Gamma(1 - d/2) / (4 pi)**(d/2)`` for 0 < d < 4.

    Negative for 2 < d < 4 (the Gamma argument sits between -1 and 0);
    d = 2 is rejected as a pole.
    """
    d = float(d)
    if not 0.0 < d < 4.0:
        raise ValueError(f"dimension must satisfy 0 < d < 4, got {d}")
    if d == 2.0:
        raise ValueError("d = 2 is a pole of the tadpole constant")
    sign, lg = _lgamma_signed(1.0 - d / 2.0)
    return sign * math.exp(lg - 0.5 * d * math.log(4.0 * math.pi))


def r_from_potential(p: Potential, rho):
    """Map V to R at the given rho per the potential's model convention.

    Raises :class:`PositivityError` where V' <= 0; all mappings require a
    strictly positive V'.
    """
    vp = eval_dV(p, rho)
    if np.any(np.asarray(vp) <= 0.0):
        raise PositivityError(
            f"V'(rho) must be strictly positive for the {p.model} mapping"
        )
    kind = p.model.kind
    if kind == "VectorD0":
        return 1.0 / (2.0 * vp)
    if kind == "VectorQM":
        return 1.0 / np.sqrt(8.0 * vp)
    if kind == "VectorField":
        d = p.model.d
        return K_of_d(d) * (2.0 * vp) ** (d / 2.0 - 1.0)
    if kind == "Matrix":
        return 1.0 / vp
    raise ValueError(f"unknown model {p.model}")


def local_determinant_density(p: Potential, d: float, rho):
    """Local one-component determinant density ``(2 K(d)/d) (2 V')**(d/2)``.

    For d = 1 this reduces to ``sqrt(2 V')``.
    """
    vp = eval_dV(p, rho)
    if np.any(np.asarray(vp) <= 0.0):
        raise PositivityError("V'(rho) must be strictly positive")
    return (2.0 * K_of_d(d) / d) * (2.0 * vp) ** (d / 2.0)


def multicritical_potential(m: int) -> Potential:
    """Order-m multicritical potential of the radial integral.

    The critical profile satisfies
    ``2 V'(rho) rho - 1 = -(1 - rho/(m-1))**(m-1)``, which places a saddle of
    criticality order m at ``rho_c = m - 1``.  The quotient by ``2 rho`` is a
    polynomial of degree m-2; integrating term by term with V(0) = 0 gives a
    degree m-1 polynomial.
    """
    m = int(m)
    if m < 2:
        raise ValueError(f"multicriticality index must be >= 2, got {m}")
    coeffs = [0.0] * m
    if m == 2:
        coeffs[1] = 0.5
        return Potential(tuple(coeffs), VECTOR_D0)
    base = m - 1
    for j in range(1, m):
        # V' picks up (-1)^(j+1) C(m-1, j) rho^(j-1) / (2 base^j)
        coeffs[j] = (-1.0) ** (j + 1) * math.comb(base, j) / (2.0 * j * base**j)
    return Potential(tuple(coeffs), VECTOR_D0)


def linear_fixed_potential(model: Model, m: int) -> Potential:
    """Fixed-point potential of the linearized flow, expanded to coefficients.

    Closed forms per model (m a positive integer):

    * VectorD0:  ``V = 1/2 - (1 - rho/m)**m / 2``
    * VectorQM:  ``V = (1+m)/(8m) * [1 - (1 - 4 rho/(m+1))**m]``
    * Matrix:    ``V = 1 - (1 - rho/m)**m`` in the ``rho = mu^2/2`` storage
    """
    m = int(m)
    if m < 1:
        raise ValueError(f"index must be >= 1, got {m}")
    kind = model.kind
    coeffs = [0.0] * (m + 1)
    if kind == "VectorD0":
        for j in range(1, m + 1):
            coeffs[j] = 0.5 * (-1.0) ** (j + 1) * math.comb(m, j) / float(m) ** j
    elif kind == "VectorQM":
        amp = (1.0 + m) / (8.0 * m)
        for j in range(1, m + 1):
            coeffs[j] = amp * (-1.0) ** (j + 1) * math.comb(m, j) * (4.0 / (m + 1.0)) ** j
    elif kind == "Matrix":
        for j in range(1, m + 1):
            coeffs[j] = (-1.0) ** (j + 1) * math.comb(m, j) / float(m) ** j
    else:
        raise ValueError(f"no linear fixed-point family for model {model}")
    return Potential(tuple(coeffs), model)


def gamma_anomalous(p: Potential, model: Optional[Model] = None) -> float:
    """Rescaling exponent gamma that keeps the normalization slope fixed.

    Equals ``-R'(0)`` with R from the model mapping; in terms of the stored
    coefficients (for a normalized potential):

    * VectorD0:        ``gamma = 2 V''(0)``
    * VectorQM:        ``gamma = V''(0) / 2``
    * VectorField(d):  ``gamma = -K(d) (d - 2) V''(0)``
    * Matrix:          ``gamma = V''(0)`` (twice the quartic coupling)
    """
    model = model or p.model
    vpp0 = eval_ddV(p, 0.0)
    kind = model.kind
    if kind == "VectorD0":
        return float(2.0 * vpp0)
    if kind == "VectorQM":
        return float(0.5 * vpp0)
    if kind == "VectorField":
        return float(-K_of_d(model.d) * (model.d - 2.0) * vpp0)
    if kind == "Matrix":
        return float(vpp0)
    raise ValueError(f"unknown model {model}")


# --- plain-text record used by the CLI config --------------------------------


def format_potential(p: Potential) -> str:
    """Serialize to ``model=<tag> [d=<real>] coeffs=c0,c1,...``.

    Floats are printed with their shortest round-trip representation so the
    record parses back to the identical potential.
    """
    parts = [f"model={p.model.kind}"]
    if p.model.kind == "VectorField":
        parts.append(f"d={p.model.d!r}")
    parts.append("coeffs=" + ",".join(repr(c) for c in p.coeffs))
    return " ".join(parts)


def parse_potential(text: str) -> Potential:
    """Parse the plain-text record produced by :func:`format_potential`."""
    fields = {}
    for tok in text.split():
        if "=" not in tok:
            raise ValueError(f"bad potential token {tok!r}")
        key, val = tok.split("=", 1)
        fields[key] = val
    if "model" not in fields or "coeffs" not in fields:
        raise ValueError("potential record needs model= and coeffs=")
    kind = fields["model"]
    if kind == "VectorField":
        if "d" not in fields:
            raise ValueError("VectorField record needs d=")
        model = vector_field(float(fields["d"]))
    elif kind in ("VectorD0", "VectorQM", "Matrix"):
        model = Model(kind)
    else:
        raise ValueError(f"unknown model tag {kind!r}")
    coeffs = tuple(float(tok) for tok in fields["coeffs"].split(","))
    slope = _NORMALIZED_SLOPE[kind]
    return Potential(coeffs, model, normalized=(len(coeffs) > 1 and coeffs[1] == slope))


# --- R as a first-class object ------------------------------------------------


class RFunction:
    """R(rho), either analytic (potential-backed) or sampled on a grid.

    Grid-backed instances interpolate with a cubic spline.  ``rho_0`` is the
    cutoff-induced shift entering the shifted saddle condition
    ``R(rho) = rho - rho_0``.
    """

    def __init__(self, *, potential: Optional[Potential] = None, rho=None,
                 values=None, rho_0: float = 0.0):
        if (potential is None) == (rho is None and values is None):
            raise ValueError("provide either a potential or grid data")
        self.potential = potential
        self.rho_0 = float(rho_0)
        if potential is None:
            rho = np.asarray(rho, dtype=float)
            values = np.asarray(values, dtype=float)
            if rho.shape != values.shape or rho.ndim != 1:
                raise ValueError("grid and values must be matching 1-d arrays")
            if np.any(values <= 0.0):
                raise PositivityError("R must be strictly positive on its domain")
            from scipy.interpolate import CubicSpline

            self.rho = rho
            self.values = values
            self._spline = CubicSpline(rho, values)
        else:
            self.rho = None
            self.values = None
            self._spline = None

    @classmethod
    def from_potential(cls, p: Potential, rho_0: float = 0.0) -> "RFunction":
        return cls(potential=p, rho_0=rho_0)

    @classmethod
    def from_grid(cls, rho, values, rho_0: float = 0.0) -> "RFunction":
        return cls(rho=rho, values=values, rho_0=rho_0)

    def __call__(self, rho):
        if self.potential is not None:
            return r_from_potential(self.potential, rho)
        return self._spline(rho)

    def derivative(self, rho, k: int = 1):
        """k-th derivative of the spline view (grid-backed only)."""
        if self._spline is None:
            raise ValueError("analytic RFunction: differentiate the potential instead")
        return self._spline(rho, k)
