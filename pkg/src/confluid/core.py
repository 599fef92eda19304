"""Shared domain types: the symmetry parameter, equations of state, spacetime
domains and the evaluable :class:`FluidSolution` container."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Any, Callable, Mapping

import numpy as np

from .errors import (
    DomainExceeded,
    DynamicalExponentOutOfRange,
    EllTooLarge,
    InvalidParameter,
    NonPositive,
    NonPositiveDensity,
    NotHalfInteger,
)

#: Upper bound on 2*ell. Nested material derivatives beyond this are not supported.
MAX_DOUBLED_ELL = 20

#: Grain used when a decimal dynamical exponent is stored as a rational.
Z_RATIONAL_GRAIN = 1e-12

Rational = Fraction | int | str


def to_fraction(value: Rational | float) -> Fraction:
    """Exact rational from an int, Fraction, ``"p/q"`` string or binary float."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rational parameters")
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except ValueError as exc:
            raise InvalidParameter(f"cannot parse {value!r} as a rational") from exc
    if isinstance(value, (float, np.floating)):
        if not math.isfinite(value):
            raise InvalidParameter(f"non-finite parameter {value!r}")
        return Fraction(float(value))
    raise TypeError(f"unsupported parameter type {type(value).__name__}")


@dataclass(frozen=True)
class EllParameter:
    """Positive integer or half-integer ell, stored exactly.

    >>> validate_ell("5/2").is_admissible()
    True
    """

    value: Fraction
    doubled: int

    def is_integer(self) -> bool:
        return self.doubled % 2 == 0

    def is_half_integer(self) -> bool:
        return self.doubled % 2 == 1

    def is_admissible(self) -> bool:
        # half-integers must have the form (1 + 4k)/2
        return self.is_integer() or self.doubled % 4 == 1

    @property
    def n_accelerations(self) -> int:
        """Number of acceleration generators, indices 0..2*ell."""
        return self.doubled + 1

    @cached_property
    def product(self) -> Fraction:
        return ell_product(self)

    def __float__(self) -> float:
        return float(self.value)

    def __str__(self) -> str:
        return str(self.value)


def validate_ell(ell: Rational | float | EllParameter) -> EllParameter:
    if isinstance(ell, EllParameter):
        return ell
    value = to_fraction(ell)
    if value <= 0:
        raise NonPositive(f"ell must be positive, got {value}")
    doubled = 2 * value
    if doubled.denominator != 1:
        raise NotHalfInteger(f"2*ell = {doubled} is not an integer")
    if doubled > MAX_DOUBLED_ELL:
        raise EllTooLarge(f"2*ell = {doubled} exceeds the cap {MAX_DOUBLED_ELL}")
    return EllParameter(value=value, doubled=int(doubled))


def ell_product(ell: EllParameter | Rational) -> Fraction:
    """Exact product ell (ell-1) (ell-2) ... (ell-2ell)."""
    ell = validate_ell(ell)
    return math.prod((ell.value - k for k in range(ell.doubled + 1)), start=Fraction(1))


def validate_z(z: Rational | float) -> Fraction:
    """Dynamical exponent as a rational; must exceed 1/2."""
    if isinstance(z, (float, np.floating)):
        z = Fraction(float(z)).limit_denominator(int(round(1 / Z_RATIONAL_GRAIN)))
    value = to_fraction(z)
    if value <= Fraction(1, 2):
        raise DynamicalExponentOutOfRange(f"dynamical exponent out of range: z = {value} must exceed 1/2")
    return value


@dataclass(frozen=True)
class EquationOfState:
    """Polytropic law p = a * rho**exponent."""

    a: float
    exponent: Fraction

    def __post_init__(self):
        if not (self.a > 0 and math.isfinite(self.a)):
            raise NonPositive(f"equation-of-state constant must be positive, got {self.a}")

    @classmethod
    def galilei(cls, a: float, ell: EllParameter | Rational, d: int) -> "EquationOfState":
        ell = validate_ell(ell)
        return cls(float(a), 1 + 1 / (ell.value * d))

    @classmethod
    def lifshitz(cls, a: float, z: Rational | float, d: int) -> "EquationOfState":
        z = validate_z(z)
        return cls(float(a), 1 + 2 * (2 * z - 1) / Fraction(d))

    def pressure(self, rho):
        return self.a * np.power(rho, float(self.exponent))


@dataclass(frozen=True)
class ExcludedRegion:
    description: str
    predicate: Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SpacetimeDomain:
    """Region t_lo < t <= t_hi, x_i in x_ranges[i], minus excluded regions.

    The lower time bound is open and non-negative; every solution lives at t > 0.
    """

    dim: int
    t_range: tuple[float, float] = (0.0, math.inf)
    x_ranges: tuple[tuple[float, float], ...] | None = None
    excluded: tuple[ExcludedRegion, ...] = ()

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidParameter("spatial dimension must be positive")
        t_lo, t_hi = self.t_range
        if t_lo < 0 or not t_hi > t_lo:
            raise InvalidParameter(f"invalid time range {self.t_range}")
        if self.x_ranges is None:
            object.__setattr__(self, "x_ranges", ((-math.inf, math.inf),) * self.dim)
        elif len(self.x_ranges) != self.dim:
            raise InvalidParameter("one x range per spatial dimension required")

    def contains(self, t, x) -> np.ndarray:
        t, x = as_points(t, x, self.dim)
        ok = (t > self.t_range[0]) & (t <= self.t_range[1])
        for i, (lo, hi) in enumerate(self.x_ranges):
            ok &= (x[..., i] >= lo) & (x[..., i] <= hi)
        for region in self.excluded:
            ok &= ~np.asarray(region.predicate(t, x), dtype=bool)
        return ok

    def sample(self, n_t: int, n_x: int, t_window=None, x_window=None) -> tuple[np.ndarray, np.ndarray]:
        """Tensor grid inside the domain; excluded points are dropped, never emitted."""
        t_window = t_window or self.t_range
        if not all(math.isfinite(v) for v in t_window):
            raise InvalidParameter("finite time window required for sampling")
        x_window = x_window or self.x_ranges
        if not all(math.isfinite(v) for r in x_window for v in r):
            raise InvalidParameter("finite spatial window required for sampling")
        lo = max(t_window[0], self.t_range[0])
        ts = np.linspace(lo, t_window[1], n_t + 1)[1:] if lo == self.t_range[0] else np.linspace(lo, t_window[1], n_t)
        axes = [ts] + [np.linspace(a, b, n_x) for a, b in x_window]
        mesh = np.meshgrid(*axes, indexing="ij")
        t = mesh[0].ravel()
        x = np.stack([m.ravel() for m in mesh[1:]], axis=-1)
        keep = self.contains(t, x)
        return t[keep], x[keep]


def as_points(t, x, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Broadcast time of shape S and positions of shape S + (dim,)."""
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    if dim == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    if x.shape[-1] != dim:
        raise InvalidParameter(f"positions must have trailing dimension {dim}, got shape {x.shape}")
    shape = np.broadcast_shapes(t.shape, x.shape[:-1])
    return np.broadcast_to(t, shape), np.broadcast_to(x, shape + (dim,))


class Family(enum.Enum):
    GCA_SCALING = "gca-scaling"
    GCA_QUARTIC_1D = "gca-quartic-1d"
    GCA_CONTINUITY_BRANCH_1D = "gca-continuity-branch-1d"
    GCA_ACCELERATION = "gca-acceleration"
    GCA_CONFORMAL_DEFORMED = "gca-conformal-deformed"
    GCA_ACCELERATION_DEFORMED = "gca-acceleration-deformed"
    LIFSHITZ_SCALING = "lifshitz"
    VISCOUS_GCA_INTEGER = "viscous-integer"
    VISCOUS_GCA_HALF_INTEGER = "viscous-half-integer"


ScalarField = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class FluidSolution:
    """Density and velocity fields of a fluid over a spacetime domain.

    ``density`` and ``velocity`` take times of shape S and positions of shape
    S + (d,). Evaluation outside the domain raises :class:`DomainExceeded`; a
    non-positive density raises :class:`NonPositiveDensity`.

    ``exact_material_derivative(t, x, k)``, when present, returns the k-th
    material derivative of the velocity in closed form. ``ell`` is set for the
    ell-conformal Galilei families and ``z`` for the Lifshitz family.
    """

    family: Family
    params: Mapping[str, Any]
    dim: int
    domain: SpacetimeDomain
    eos: EquationOfState
    density_fn: ScalarField
    velocity_fn: ScalarField
    ell: EllParameter | None = None
    z: Fraction | None = None
    eta_fn: ScalarField | None = None
    xi_fn: ScalarField | None = None
    exact_material_derivative: Callable[[np.ndarray, np.ndarray, int], np.ndarray] | None = None
    label: str = ""
    metadata: Mapping[str, Any] = field(default_factory=dict)

    @property
    def n_material_derivatives(self) -> int:
        """Material derivatives in the Euler equation: 2*ell, or one for Lifshitz."""
        if self.z is not None:
            return 1
        return self.ell.doubled

    @property
    def viscous(self) -> bool:
        return self.eta_fn is not None or self.xi_fn is not None

    def _checked(self, t, x):
        t, x = as_points(t, x, self.dim)
        inside = self.domain.contains(t, x)
        if not np.all(inside):
            i = int(np.argmin(inside.reshape(-1)))
            tb, xb = t.reshape(-1)[i], x.reshape(-1, self.dim)[i]
            raise DomainExceeded(f"{self.label or self.family.value}: point t={tb}, x={xb} outside domain")
        return t, x

    def density(self, t, x) -> np.ndarray:
        t, x = self._checked(t, x)
        rho = np.asarray(self.density_fn(t, x), dtype=float)
        if not np.all(rho > 0):
            raise NonPositiveDensity(f"{self.label or self.family.value}: non-positive or invalid density")
        return rho

    def velocity(self, t, x) -> np.ndarray:
        t, x = self._checked(t, x)
        return np.asarray(self.velocity_fn(t, x), dtype=float)

    def pressure(self, t, x) -> np.ndarray:
        return self.eos.pressure(self.density(t, x))

    def shear_viscosity(self, t, x) -> np.ndarray:
        t, x = self._checked(t, x)
        if self.eta_fn is None:
            return np.zeros(t.shape)
        return np.asarray(self.eta_fn(t, x), dtype=float)

    def volume_viscosity(self, t, x) -> np.ndarray:
        t, x = self._checked(t, x)
        if self.xi_fn is None:
            return np.zeros(t.shape)
        return np.asarray(self.xi_fn(t, x), dtype=float)
