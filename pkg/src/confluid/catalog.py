"""Closed-form solution families.

Each constructor validates its parameters, works out where the density is
positive and returns a :class:`~confluid.core.FluidSolution`. A time offset
``t0`` (substitution t -> t + t0) is accepted by every family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Mapping, Sequence

import numpy as np
from scipy.optimize.elementwise import find_root

from .core import (
    EllParameter,
    EquationOfState,
    ExcludedRegion,
    Family,
    FluidSolution,
    SpacetimeDomain,
    to_fraction,
    validate_ell,
    validate_z,
)
from .errors import (
    AccelerationConstraintError,
    AmbiguousRoot,
    BranchCollision,
    EmptyPositivityDomain,
    InadmissibleEll,
    InvalidParameter,
    NoBoundedSolution,
    NonPositive,
    NonPositiveDensityDomain,
    NoRootInBracket,
    OutOfRangeAccelerationIndex,
)
from .material import AffineVelocity1d, LaurentPolynomial, falling_product, material_derivative_affine


def _positive(name: str, value) -> float:
    value = float(value)
    if not (value > 0 and math.isfinite(value)):
        raise NonPositive(f"{name} must be positive, got {value}")
    return value


def _dimension(d) -> int:
    if isinstance(d, bool) or int(d) != d or d < 1:
        raise InvalidParameter(f"spatial dimension must be a positive integer, got {d}")
    return int(d)


def _side(half_line) -> int:
    if half_line in (1, "+", "x>0", "positive"):
        return 1
    if half_line in (-1, "-", "x<0", "negative"):
        return -1
    raise InvalidParameter(f"half line must be 'x>0' or 'x<0', got {half_line!r}")


def _sign(value) -> int:
    if value in (1, "+", "plus"):
        return 1
    if value in (-1, "-", "minus"):
        return -1
    raise InvalidParameter(f"sign must be + or -, got {value!r}")


def _time_domain(t0: float) -> tuple[float, float]:
    return (max(0.0, -t0), math.inf)


def _sq_norm(x):
    return np.sum(x * x, axis=-1)


def _radial_exact(rate: Fraction, t0: float):
    """k-th material derivative of v = rate * x / (t + t0)."""

    def exact(t, x, k):
        tau = np.asarray(t, dtype=float) + t0
        return float(falling_product(rate, k)) * x / tau[..., None] ** (k + 1)

    return exact


# --------------------------------------------------------------------------
# parameter records


@dataclass(frozen=True)
class GcaScalingParams:
    ell: EllParameter
    d: int
    a: float
    c: float
    t0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "ell", validate_ell(self.ell))
        object.__setattr__(self, "d", _dimension(self.d))
        object.__setattr__(self, "a", _positive("a", self.a))
        object.__setattr__(self, "c", _positive("c", self.c))
        object.__setattr__(self, "t0", float(self.t0))


@dataclass(frozen=True)
class Quartic1dParams:
    c1: float
    c2: float
    a: float
    sign1: int = 1
    sign2: int = 1
    half_line: int = 1
    t0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "c1", float(self.c1))
        object.__setattr__(self, "c2", float(self.c2))
        object.__setattr__(self, "a", _positive("a", self.a))
        object.__setattr__(self, "sign1", _sign(self.sign1))
        object.__setattr__(self, "sign2", _sign(self.sign2))
        object.__setattr__(self, "half_line", _side(self.half_line))
        object.__setattr__(self, "t0", float(self.t0))


@dataclass(frozen=True)
class AccelerationFamilyParams:
    ell: EllParameter
    n: int
    c: float
    c_minus1: float = 0.0
    c_0: float = 0.0
    runaway: Mapping[int, float] = field(default_factory=dict)
    t0: float = 0.0

    def __post_init__(self):
        ell = validate_ell(self.ell)
        object.__setattr__(self, "ell", ell)
        if isinstance(self.n, bool) or int(self.n) != self.n or not 0 <= self.n <= ell.doubled:
            raise OutOfRangeAccelerationIndex(f"acceleration index n={self.n} outside 0..{ell.doubled}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "c", _positive("c", self.c))
        object.__setattr__(self, "c_minus1", float(self.c_minus1))
        object.__setattr__(self, "c_0", float(self.c_0))
        object.__setattr__(self, "t0", float(self.t0))


@dataclass(frozen=True)
class LifshitzParams:
    z: Fraction
    d: int
    a: float
    c: float
    t0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "z", validate_z(self.z))
        object.__setattr__(self, "d", _dimension(self.d))
        object.__setattr__(self, "a", _positive("a", self.a))
        object.__setattr__(self, "c", _positive("c", self.c))
        object.__setattr__(self, "t0", float(self.t0))


@dataclass(frozen=True)
class ViscousParams:
    ell: EllParameter
    d: int
    a: float
    c: float
    eta0: float = 0.0
    xi0: float = 0.0
    t0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "ell", validate_ell(self.ell))
        object.__setattr__(self, "d", _dimension(self.d))
        object.__setattr__(self, "a", _positive("a", self.a))
        object.__setattr__(self, "c", float(self.c))
        for name in ("eta0", "xi0"):
            v = float(getattr(self, name))
            if not (v >= 0 and math.isfinite(v)):
                raise InvalidParameter(f"{name} must be non-negative, got {v}")
            object.__setattr__(self, name, v)
        object.__setattr__(self, "t0", float(self.t0))


def _require_admissible(ell: EllParameter):
    if not ell.is_admissible():
        raise InadmissibleEll(
            f"ell = {ell} is not admissible: the product ell(ell-1)...(ell-2ell) = {ell.product} is positive, "
            "so the density argument turns negative at large |x|"
        )


# --------------------------------------------------------------------------
# scaling family


def _scaling_density(ell: EllParameter, d: int, a: float, c: float, t0: float, gamma: float = 0.0):
    """Density of the scaling family, optionally with the (1 + gamma t) deformation."""
    power = float(ell.value * d)
    if ell.is_integer():
        # homogeneous; c / t^(ell d), the second term vanishes identically
        def rho(t, x):
            tau = t + t0
            s = tau * (1.0 + gamma * tau)
            return c / s**power + 0.0 * x[..., 0]

        return rho
    coef = float(ell.product) / (2.0 * a * (1.0 + float(ell.value) * d))
    exponent = float(2 * ell.value + 1)

    def rho(t, x):
        tau = t + t0
        s = tau * (1.0 + gamma * tau)
        return (c / s - coef * _sq_norm(x) / s**exponent) ** power

    return rho


def gca_scaling_solution(p: GcaScalingParams | None = None, **kw) -> FluidSolution:
    """Scaling-invariant family: v_i = ell x_i / t.

    Half-integer ell: rho = (c/t - P |x|^2 / (2a(1 + ell d) t^(2ell+1)))^(ell d) with
    P the ell product. Integer ell: the fluid is homogeneous, rho = c / t^(ell d).
    """
    p = p or GcaScalingParams(**kw)
    ell, d, t0 = p.ell, p.d, p.t0
    _require_admissible(ell)
    if ell.product > 0:  # unreachable for admissible ell, kept as a guard
        raise NonPositiveDensityDomain(f"density argument is negative at large |x| for ell = {ell}")
    lval = float(ell.value)

    def velocity(t, x):
        return lval * x / (t + t0)[..., None]

    return FluidSolution(
        family=Family.GCA_SCALING,
        params={"ell": str(ell), "d": d, "a": p.a, "c": p.c, "t0": t0},
        dim=d,
        domain=SpacetimeDomain(d, _time_domain(t0)),
        eos=EquationOfState.galilei(p.a, ell, d),
        density_fn=_scaling_density(ell, d, p.a, p.c, t0),
        velocity_fn=velocity,
        ell=ell,
        exact_material_derivative=_radial_exact(ell.value, t0),
        label=f"gca-scaling(ell={ell}, d={d})",
        metadata={"homogeneous": ell.is_integer()},
    )


def conformal_deformed_solution(p: GcaScalingParams, gamma: float) -> FluidSolution:
    """Scaling family deformed by a special conformal transformation.

    v_i = ell (1 + 2 gamma t) x_i / (t (1 + gamma t)), and the density argument
    has t replaced by t (1 + gamma t).
    """
    gamma = _positive("gamma", gamma)
    ell, d, t0 = p.ell, p.d, p.t0
    _require_admissible(ell)
    lval = float(ell.value)

    def velocity(t, x):
        tau = (t + t0)[..., None]
        return lval * (1.0 + 2.0 * gamma * tau) * x / (tau * (1.0 + gamma * tau))

    return FluidSolution(
        family=Family.GCA_CONFORMAL_DEFORMED,
        params={"ell": str(ell), "d": d, "a": p.a, "c": p.c, "t0": t0, "gamma": gamma},
        dim=d,
        domain=SpacetimeDomain(d, _time_domain(t0)),
        eos=EquationOfState.galilei(p.a, ell, d),
        density_fn=_scaling_density(ell, d, p.a, p.c, t0, gamma),
        velocity_fn=velocity,
        ell=ell,
        label=f"gca-conformal(ell={ell}, d={d}, gamma={gamma})",
    )


def acceleration_deformed_solution(p: GcaScalingParams, accelerations: Sequence[Sequence[float]]) -> FluidSolution:
    """Scaling family shifted along x -> x - sum_n a^(n) t^n (one d-vector per n)."""
    from .transforms import AccelerationElement, apply_acceleration

    base = gca_scaling_solution(p)
    image = apply_acceleration(AccelerationElement(np.asarray(accelerations, dtype=float)), base)
    params = dict(base.params)
    params["accelerations"] = np.asarray(accelerations, dtype=float).tolist()
    return FluidSolution(
        family=Family.GCA_ACCELERATION_DEFORMED,
        params=params,
        dim=image.dim,
        domain=image.domain,
        eos=image.eos,
        density_fn=image.density_fn,
        velocity_fn=image.velocity_fn,
        ell=image.ell,
        exact_material_derivative=image.exact_material_derivative,
        label=f"gca-acceleration-deformed(ell={p.ell}, d={p.d})",
    )


# --------------------------------------------------------------------------
# one-dimensional ell = 1/2 families


def _radicand(y, c):
    # (y/2 + c)^2 - c^2 written without cancellation
    return y * (0.25 * y + c)


def _positivity_intervals(rho_sign, y_lo: float) -> list[tuple[float, float]]:
    """Intervals of y > y_lo where rho_sign(y) > 0, by scanning plus bisection."""
    span = np.concatenate([[0.0], np.geomspace(1e-9, 1e9, 1801)]) * max(1.0, abs(y_lo))
    ys = y_lo + span[1:]
    s = rho_sign(ys) > 0
    if not s.any():
        return []
    intervals = []
    flips = np.flatnonzero(s[1:] != s[:-1])
    edges = []
    for i in flips:
        lo, hi = ys[i], ys[i + 1]
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if (rho_sign(np.array([mid]))[0] > 0) == s[i]:
                lo = mid
            else:
                hi = mid
        edges.append(0.5 * (lo + hi))
    bounds = [y_lo] + edges + [math.inf]
    inside = s[0]
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        if inside:
            intervals.append((float(lo), float(hi)))
        inside = not inside
    return intervals


def _y_excluded(intervals, t0: float):
    def predicate(t, x):
        y = x[..., 0] ** 2 / (t + t0)
        ok = np.zeros(y.shape, dtype=bool)
        for lo, hi in intervals:
            ok |= (y > lo) & (y < hi)
        return ~ok

    return ExcludedRegion("reduced variable y = x^2/t outside the positivity intervals", predicate)


def _half_line_domain(side: int, intervals, t0: float) -> SpacetimeDomain:
    x_range = ((0.0, math.inf),) if side > 0 else ((-math.inf, 0.0),)
    on_axis = ExcludedRegion("x = 0", lambda t, x: x[..., 0] == 0)
    return SpacetimeDomain(1, _time_domain(t0), x_range, (on_axis, _y_excluded(intervals, t0)))


def quartic_uw(y, c1: float, c2: float, a: float, sign1: int = 1, sign2: int = 1):
    """Reduced fields (u, w) of the quartic family as functions of y = x^2/t."""
    y = np.asarray(y, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        u = 0.5 * y + 0.5 * sign1 * np.sqrt(_radicand(y, c1)) + 0.5 * sign2 * np.sqrt(_radicand(y, c2))
        w = (c1 - c2) / (4.0 * math.sqrt(3.0 * a)) * y / (u - 0.5 * y)
    return u, w


def quartic_1d_solution(p: Quartic1dParams | None = None, **kw) -> FluidSolution:
    """One-dimensional ell = 1/2 family built from two constants c1, c2.

    With y = x^2/t, u = y/2 +- sqrt((y/2+c1)^2-c1^2)/2 +- sqrt((y/2+c2)^2-c2^2)/2,
    w = (c1-c2) y / (4 sqrt(3a) (u - y/2)), and v = u/x, rho = w/x.
    """
    p = p or Quartic1dParams(**kw)
    c1, c2, a, s1, s2, side, t0 = p.c1, p.c2, p.a, p.sign1, p.sign2, p.half_line, p.t0
    if c1 == c2:
        if s1 != s2:
            raise BranchCollision("c1 = c2 with opposite signs gives u = y/2 identically, w is undefined")
        raise EmptyPositivityDomain("c1 = c2 makes w vanish identically")
    y_lo = max(0.0, -4.0 * c1, -4.0 * c2)

    def rho_sign(y):
        _, w = quartic_uw(y, c1, c2, a, s1, s2)
        return np.where(np.isfinite(w), side * w, -1.0)

    intervals = _positivity_intervals(rho_sign, y_lo)
    if not intervals:
        raise EmptyPositivityDomain(f"no y > {y_lo} with positive density for the chosen signs and half line")

    def density(t, x):
        xs = x[..., 0]
        _, w = quartic_uw(xs**2 / (t + t0), c1, c2, a, s1, s2)
        return w / xs

    def velocity(t, x):
        xs = x[..., 0]
        u, _ = quartic_uw(xs**2 / (t + t0), c1, c2, a, s1, s2)
        return (u / xs)[..., None]

    return FluidSolution(
        family=Family.GCA_QUARTIC_1D,
        params={"c1": c1, "c2": c2, "a": a, "sign1": s1, "sign2": s2, "half_line": "x>0" if side > 0 else "x<0", "t0": t0},
        dim=1,
        domain=_half_line_domain(side, intervals, t0),
        eos=EquationOfState.galilei(a, Fraction(1, 2), 1),
        density_fn=density,
        velocity_fn=velocity,
        ell=validate_ell(Fraction(1, 2)),
        label=f"gca-quartic-1d(c1={c1}, c2={c2})",
        metadata={
            "positivity_intervals": intervals,
            "reduced": lambda y: quartic_uw(y, c1, c2, a, s1, s2),
            "a": a,
            "t0": t0,
        },
    )


def continuity_branch_uw(y, c: float, a: float, sign: int = 1):
    y = np.asarray(y, dtype=float)
    with np.errstate(invalid="ignore"):
        w = sign / math.sqrt(3.0 * a) * np.sqrt(_radicand(y, c))
    return 0.5 * y, w


def continuity_branch_1d_solution(c: float, a: float, sign=1, half_line="x>0", t0: float = 0.0) -> FluidSolution:
    """v = x/(2t), rho = w(y)/x with w = +-sqrt((y/2+c)^2 - c^2)/sqrt(3a)."""
    c, a, sign, side, t0 = float(c), _positive("a", a), _sign(sign), _side(half_line), float(t0)
    y_lo = max(0.0, -4.0 * c)

    def rho_sign(y):
        _, w = continuity_branch_uw(y, c, a, sign)
        return np.where(np.isfinite(w), side * w, -1.0)

    intervals = _positivity_intervals(rho_sign, y_lo)
    if not intervals:
        raise EmptyPositivityDomain("sign of w and the half line give a negative density everywhere")

    def density(t, x):
        xs = x[..., 0]
        _, w = continuity_branch_uw(xs**2 / (t + t0), c, a, sign)
        return w / xs

    def velocity(t, x):
        return 0.5 * x / (t + t0)[..., None]

    return FluidSolution(
        family=Family.GCA_CONTINUITY_BRANCH_1D,
        params={"c": c, "a": a, "sign": sign, "half_line": "x>0" if side > 0 else "x<0", "t0": t0},
        dim=1,
        domain=_half_line_domain(side, intervals, t0),
        eos=EquationOfState.galilei(a, Fraction(1, 2), 1),
        density_fn=density,
        velocity_fn=velocity,
        ell=validate_ell(Fraction(1, 2)),
        exact_material_derivative=_radial_exact(Fraction(1, 2), t0),
        label=f"gca-continuity-branch-1d(c={c})",
        metadata={
            "positivity_intervals": intervals,
            "reduced": lambda y: continuity_branch_uw(y, c, a, sign),
            "a": a,
            "t0": t0,
        },
    )


# --------------------------------------------------------------------------
# acceleration family


@dataclass(frozen=True)
class AccelerationConstraint:
    """Linear conditions on (c_minus1, c_0) from D^(2 ell) v = 0.

    ``rows`` holds one exact row per Laurent power that must vanish.
    """

    ell: EllParameter
    n: int
    rows: tuple[tuple[Fraction, Fraction], ...]

    @property
    def free(self) -> dict[str, bool]:
        col_free = [all(r[j] == 0 for r in self.rows) for j in range(2)]
        return {"c_minus1": col_free[0], "c_0": col_free[1]}

    def residual(self, c_minus1: float, c_0: float) -> float:
        return max((abs(float(r0) * c_minus1 + float(r1) * c_0) for r0, r1 in self.rows), default=0.0)


def acceleration_velocity(n: int, c_minus1, c_0, runaway: Mapping[int, Any] | None = None) -> AffineVelocity1d:
    """v = (n x + c_minus1 + c_0 t + sum_k c_k t^(k+1)) / t as exact Laurent data."""
    B = {-1: to_fraction(c_minus1), 0: to_fraction(c_0)}
    for k, ck in (runaway or {}).items():
        B[int(k)] = B.get(int(k), 0) + to_fraction(ck)
    return AffineVelocity1d(LaurentPolynomial({-1: n}), LaurentPolynomial(B))


def acceleration_constraints(ell, n: int) -> AccelerationConstraint:
    """Exact constraint on the constants, from the affine recursion."""
    ell = validate_ell(ell)
    k = ell.doubled
    cols = [material_derivative_affine(acceleration_velocity(n, 1, 0), k), material_derivative_affine(acceleration_velocity(n, 0, 1), k)]
    zero = material_derivative_affine(acceleration_velocity(n, 0, 0), k)
    if not zero.A.is_zero() or not zero.B.is_zero():
        raise NoBoundedSolution(f"n = {n} leaves a non-vanishing x term at depth {k}")
    # the A part does not depend on the constants; collect B coefficients per power
    powers = sorted(set(cols[0].B.coeffs) | set(cols[1].B.coeffs))
    rows = tuple((cols[0].B.coeffs.get(q, Fraction(0)), cols[1].B.coeffs.get(q, Fraction(0))) for q in powers)
    return AccelerationConstraint(ell, n, rows)


def acceleration_solution(p: AccelerationFamilyParams | None = None, **kw) -> FluidSolution:
    """rho = c / t^n, v = (n x + c_minus1 + c_0 t)/t in one dimension.

    The constants are checked exactly against D^(2 ell) v = 0 (the pressure
    gradient vanishes because rho depends on t only). Any higher coefficient
    c_k t^k with k >= 1 makes the velocity grow without bound and is rejected.
    """
    p = p or AccelerationFamilyParams(**kw)
    if any(float(v) != 0.0 for v in p.runaway.values()):
        raise NoBoundedSolution("coefficients c_k with k >= 1 give runaway velocities")
    cons = acceleration_constraints(p.ell, p.n)
    scale = max(1.0, abs(p.c_minus1), abs(p.c_0))
    if cons.residual(p.c_minus1, p.c_0) > 1e-12 * scale:
        forced = [name for name, free in cons.free.items() if not free]
        raise AccelerationConstraintError(
            f"(c_minus1, c_0) = ({p.c_minus1}, {p.c_0}) violate D^{p.ell.doubled} v = 0 for n = {p.n}; constrained: {forced}"
        )
    n, c, t0 = p.n, p.c, p.t0
    affine = acceleration_velocity(n, p.c_minus1, p.c_0)
    derivs: dict[int, AffineVelocity1d] = {}

    def exact(t, x, k):
        if k not in derivs:
            derivs[k] = material_derivative_affine(affine, k)
        tau = np.asarray(t, dtype=float) + t0
        return derivs[k](tau[..., None], x)

    def density(t, x):
        return c / (t + t0) ** n + 0.0 * x[..., 0]

    def velocity(t, x):
        return affine((t + t0)[..., None], x)

    return FluidSolution(
        family=Family.GCA_ACCELERATION,
        params={"ell": str(p.ell), "n": n, "c": c, "c_minus1": p.c_minus1, "c_0": p.c_0, "t0": t0},
        dim=1,
        domain=SpacetimeDomain(1, _time_domain(t0)),
        eos=EquationOfState.galilei(1.0, p.ell, 1),
        density_fn=density,
        velocity_fn=velocity,
        ell=p.ell,
        exact_material_derivative=exact,
        label=f"gca-acceleration(ell={p.ell}, n={n})",
        metadata={"free_constants": cons.free, "affine_velocity": affine},
    )


# --------------------------------------------------------------------------
# Lifshitz


def lifshitz_scaling_solution(p: LifshitzParams | None = None, **kw) -> FluidSolution:
    """v_i = x_i/(2 z t), rho = (c/t^(2-1/z) + (2z-1)^2 |x|^2/(4 a z^2 (d+2(2z-1)) t^2))^(d/(2(2z-1)))."""
    p = p or LifshitzParams(**kw)
    z, d, a, c, t0 = p.z, p.d, p.a, p.c, p.t0
    zf = float(z)
    q = 2 * z - 1
    coef = float(q * q / (4 * z * z * (d + 2 * q))) / a
    t_power = float(2 - 1 / z)
    power = float(Fraction(d) / (2 * q))

    def density(t, x):
        tau = t + t0
        return (c / tau**t_power + coef * _sq_norm(x) / tau**2) ** power

    def velocity(t, x):
        return x / (2.0 * zf * (t + t0)[..., None])

    return FluidSolution(
        family=Family.LIFSHITZ_SCALING,
        params={"z": str(z), "d": d, "a": a, "c": c, "t0": t0},
        dim=d,
        domain=SpacetimeDomain(d, _time_domain(t0)),
        eos=EquationOfState.lifshitz(a, z, d),
        density_fn=density,
        velocity_fn=velocity,
        z=z,
        exact_material_derivative=_radial_exact(1 / (2 * z), t0),
        label=f"lifshitz(z={z}, d={d})",
    )


# --------------------------------------------------------------------------
# viscous family


def _viscous_terms(p: ViscousParams):
    ld = float(p.ell.value * p.d)
    return p.a * (ld + 1.0), p.xi0 * ld, 1.0 / ld, ld


def viscous_equation(w, ysq, p: ViscousParams):
    """a(ell d + 1) w^(1/(ell d)) - xi0 ell d ln w + P |y|^2 / 2 - c."""
    A, B, inv, _ = _viscous_terms(p)
    P = float(p.ell.product)
    with np.errstate(divide="ignore", invalid="ignore"):
        return A * w**inv - B * np.log(w) + 0.5 * P * ysq - p.c


def viscous_equation_scale(w, ysq, p: ViscousParams):
    """Largest individual term magnitude of :func:`viscous_equation`."""
    A, B, inv, _ = _viscous_terms(p)
    P = float(p.ell.product)
    with np.errstate(divide="ignore"):
        return np.maximum.reduce([np.abs(A * w**inv), np.abs(B * np.log(w)), np.abs(0.5 * P * ysq), np.full_like(w, abs(p.c))])


def viscous_inviscid_w(ysq, p: ViscousParams):
    """Closed-form w at xi0 = 0."""
    A, _, _, ld = _viscous_terms(p)
    base = (p.c - 0.5 * float(p.ell.product) * ysq) / A
    with np.errstate(invalid="ignore"):
        return np.where(base > 0, base, np.nan) ** ld


def viscous_roots(ysq, p: ViscousParams) -> tuple[np.ndarray, np.ndarray]:
    """(upper, lower) roots of the viscous relation at |y|^2 = ysq.

    For xi0 > 0 the left-hand side is convex in ln w with a single minimum at
    w* = (xi0 (ell d)^2 / (a (ell d + 1)))^(ell d), so there are two roots when
    the minimum is negative. The upper root continues the inviscid solution
    as xi0 -> 0; the lower one collapses to zero. A lower root below the
    smallest normal double is reported as 0.
    """
    ysq = np.asarray(ysq, dtype=float)
    A, B, inv, ld = _viscous_terms(p)
    if B == 0.0:
        w = viscous_inviscid_w(ysq, p)
        if not np.all(np.isfinite(w)):
            raise NoRootInBracket("c - P|y|^2/2 must be positive for the inviscid relation")
        return w, np.full_like(w, np.nan)
    w_star = (B * ld / A) ** ld
    f = lambda w: viscous_equation(w, ysq, p)  # noqa: E731
    f_star = f(np.full_like(ysq, w_star))
    if np.any(f_star >= 0):
        raise NoRootInBracket(f"no root: minimum of the viscous relation is non-negative (xi0={p.xi0}, c={p.c})")
    w_inv = np.nan_to_num(viscous_inviscid_w(ysq, p), nan=w_star)
    hi = 10.0 * np.maximum(w_inv, w_star)
    for _ in range(400):
        bad = f(hi) <= 0
        if not bad.any():
            break
        hi = np.where(bad, hi * 10.0, hi)
    else:
        raise NoRootInBracket("upper bracket expansion failed")
    g = lambda w, ys: viscous_equation(w, ys, p)  # noqa: E731
    upper = find_root(g, (np.full_like(ysq, w_star), hi), args=(ysq,)).x
    lo = np.full_like(ysq, w_star / 10.0)
    tiny = np.finfo(float).tiny
    for _ in range(400):
        bad = (f(lo) <= 0) & (lo > tiny)
        if not bad.any():
            break
        lo = np.where(bad, np.maximum(lo * 1e-3, tiny), lo)
    has_lower = f(lo) > 0
    lower = np.zeros_like(ysq)
    if has_lower.any():
        lower[has_lower] = find_root(g, (lo[has_lower], np.full(has_lower.sum(), w_star)), args=(ysq[has_lower],)).x
    return upper, lower


def viscous_solution(p: ViscousParams | None = None, on_ambiguous: str = "flag", **kw) -> FluidSolution:
    """Scaling-type viscous fluid with eta = eta0 rho and xi = xi0 rho.

    Integer ell: v = ell x/t, rho = c/t^(ell d). Half-integer ell: rho = w(y)/t^(ell d)
    with y = x/t^ell and w the upper root of the viscous relation, solved per
    point. For xi0 > 0 a second, lower root always exists; it is exposed through
    ``metadata["roots"]`` and the choice is flagged in ``metadata``. Pass
    ``on_ambiguous="raise"`` to get :class:`AmbiguousRoot` instead.
    """
    p = p or ViscousParams(**kw)
    ell, d, t0 = p.ell, p.d, p.t0
    _require_admissible(ell)
    lval, ld = float(ell.value), float(ell.value * d)
    metadata: dict[str, Any] = {}
    if ell.is_integer():
        if not p.c > 0:
            raise NonPositive("c must be positive")

        def density(t, x):
            return p.c / (t + t0) ** ld + 0.0 * x[..., 0]

        family = Family.VISCOUS_GCA_INTEGER
    else:
        upper, _ = viscous_roots(np.zeros(1), p)  # raises NoRootInBracket when hopeless
        if p.xi0 > 0:
            if on_ambiguous == "raise":
                raise AmbiguousRoot("the viscous relation has two roots for xi0 > 0")
            metadata.update(ambiguous_root=True, root_branch="upper (continuous with the inviscid solution)")
        metadata["roots"] = lambda ysq: viscous_roots(ysq, p)

        def density(t, x):
            tau = t + t0
            ysq = _sq_norm(x) / tau ** (2 * lval)
            w, _ = viscous_roots(ysq.reshape(-1), p)
            return w.reshape(ysq.shape) / tau**ld

        family = Family.VISCOUS_GCA_HALF_INTEGER

    def velocity(t, x):
        return lval * x / (t + t0)[..., None]

    sol_ref: list[FluidSolution] = []

    def eta(t, x):
        return p.eta0 * sol_ref[0].density_fn(t, x)

    def xi(t, x):
        return p.xi0 * sol_ref[0].density_fn(t, x)

    sol = FluidSolution(
        family=family,
        params={"ell": str(ell), "d": d, "a": p.a, "c": p.c, "eta0": p.eta0, "xi0": p.xi0, "t0": t0},
        dim=d,
        domain=SpacetimeDomain(d, _time_domain(t0)),
        eos=EquationOfState.galilei(p.a, ell, d),
        density_fn=density,
        velocity_fn=velocity,
        ell=ell,
        eta_fn=eta,
        xi_fn=xi,
        exact_material_derivative=_radial_exact(ell.value, t0),
        label=f"{family.value}(ell={ell}, d={d})",
        metadata=metadata,
    )
    sol_ref.append(sol)
    return sol


def inviscid_constant(p: ViscousParams) -> float:
    """Constant c of the perfect-fluid scaling density matching xi0 = 0."""
    return p.c / (p.a * (float(p.ell.value * p.d) + 1.0))


# --------------------------------------------------------------------------
# discovery


_ELL_RULE = "positive integer or half-integer p/q; half-integers must have the form (1+4k)/2"

CATALOG: dict[str, dict[str, Any]] = {
    Family.GCA_SCALING.value: {
        "constructor": "gca_scaling_solution",
        "summary": "scaling-invariant flow v = ell x / t with polytropic density",
        "parameters": {
            "ell": {"type": "rational", "rule": _ELL_RULE},
            "d": {"type": "int", "rule": ">= 1"},
            "a": {"type": "float", "rule": "> 0"},
            "c": {"type": "float", "rule": "> 0"},
            "t0": {"type": "float", "default": 0.0},
        },
        "domain": "t > max(0, -t0), all x",
        "tags": ["scaling", "ell-conformal-galilei"],
    },
    Family.GCA_QUARTIC_1D.value: {
        "constructor": "quartic_1d_solution",
        "summary": "one-dimensional ell = 1/2 family from two integration constants",
        "parameters": {
            "c1": {"type": "float"},
            "c2": {"type": "float"},
            "a": {"type": "float", "rule": "> 0"},
            "sign1": {"type": "sign", "default": "+"},
            "sign2": {"type": "sign", "default": "+"},
            "half_line": {"type": "enum", "values": ["x>0", "x<0"], "default": "x>0"},
            "t0": {"type": "float", "default": 0.0},
        },
        "domain": "half line with y = x^2/t in the computed positivity intervals",
        "tags": ["ell=1/2", "d=1", "reduced-ode"],
    },
    Family.GCA_CONTINUITY_BRANCH_1D.value: {
        "constructor": "continuity_branch_1d_solution",
        "summary": "one-dimensional ell = 1/2 branch with v = x/(2t)",
        "parameters": {
            "c": {"type": "float"},
            "a": {"type": "float", "rule": "> 0"},
            "sign": {"type": "sign", "default": "+"},
            "half_line": {"type": "enum", "values": ["x>0", "x<0"], "default": "x>0"},
            "t0": {"type": "float", "default": 0.0},
        },
        "domain": "half line with y > max(0, -4c)",
        "tags": ["ell=1/2", "d=1", "reduced-ode"],
    },
    Family.GCA_ACCELERATION.value: {
        "constructor": "acceleration_solution",
        "summary": "rho = c/t^n, v = (n x + c_minus1 + c_0 t)/t, constants fixed exactly",
        "parameters": {
            "ell": {"type": "rational", "rule": _ELL_RULE},
            "n": {"type": "int", "rule": "0 <= n <= 2 ell"},
            "c": {"type": "float", "rule": "> 0"},
            "c_minus1": {"type": "float", "default": 0.0},
            "c_0": {"type": "float", "default": 0.0},
            "t0": {"type": "float", "default": 0.0},
        },
        "domain": "t > max(0, -t0), d = 1",
        "tags": ["acceleration-invariant", "d=1"],
    },
    Family.GCA_CONFORMAL_DEFORMED.value: {
        "constructor": "conformal_deformed_solution",
        "summary": "scaling family deformed by a special conformal transformation",
        "parameters": {
            "ell": {"type": "rational", "rule": _ELL_RULE},
            "d": {"type": "int", "rule": ">= 1"},
            "a": {"type": "float", "rule": "> 0"},
            "c": {"type": "float", "rule": "> 0"},
            "gamma": {"type": "float", "rule": "> 0"},
            "t0": {"type": "float", "default": 0.0},
        },
        "domain": "t > max(0, -t0), all x",
        "tags": ["transformed", "special-conformal"],
    },
    Family.GCA_ACCELERATION_DEFORMED.value: {
        "constructor": "acceleration_deformed_solution",
        "summary": "scaling family shifted by constant accelerations a^(0..2 ell)",
        "parameters": {
            "ell": {"type": "rational", "rule": _ELL_RULE},
            "d": {"type": "int", "rule": ">= 1"},
            "a": {"type": "float", "rule": "> 0"},
            "c": {"type": "float", "rule": "> 0"},
            "accelerations": {"type": "list of d-vectors", "rule": "2 ell + 1 vectors"},
            "t0": {"type": "float", "default": 0.0},
        },
        "domain": "t > max(0, -t0), all x",
        "tags": ["transformed", "accelerations"],
    },
    Family.LIFSHITZ_SCALING.value: {
        "constructor": "lifshitz_scaling_solution",
        "summary": "anisotropic scaling flow v = x/(2 z t)",
        "parameters": {
            "z": {"type": "rational", "rule": "> 1/2; decimals stored to 1e-12"},
            "d": {"type": "int", "rule": ">= 1"},
            "a": {"type": "float", "rule": "> 0"},
            "c": {"type": "float", "rule": "> 0"},
            "t0": {"type": "float", "default": 0.0},
        },
        "domain": "t > max(0, -t0), all x",
        "tags": ["lifshitz", "scaling"],
    },
    Family.VISCOUS_GCA_INTEGER.value: {
        "constructor": "viscous_solution",
        "summary": "homogeneous viscous fluid, integer ell, eta = eta0 rho, xi = xi0 rho",
        "parameters": {
            "ell": {"type": "rational", "rule": "positive integer"},
            "d": {"type": "int", "rule": ">= 1"},
            "a": {"type": "float", "rule": "> 0"},
            "c": {"type": "float", "rule": "> 0"},
            "eta0": {"type": "float", "rule": ">= 0"},
            "xi0": {"type": "float", "rule": ">= 0"},
            "t0": {"type": "float", "default": 0.0},
        },
        "domain": "t > max(0, -t0), all x",
        "tags": ["viscous", "homogeneous"],
    },
    Family.VISCOUS_GCA_HALF_INTEGER.value: {
        "constructor": "viscous_solution",
        "summary": "viscous scaling fluid, half-integer ell, density from a per-point transcendental root",
        "parameters": {
            "ell": {"type": "rational", "rule": "half-integer (1+4k)/2"},
            "d": {"type": "int", "rule": ">= 1"},
            "a": {"type": "float", "rule": "> 0"},
            "c": {"type": "float"},
            "eta0": {"type": "float", "rule": ">= 0"},
            "xi0": {"type": "float", "rule": ">= 0"},
            "t0": {"type": "float", "default": 0.0},
        },
        "domain": "t > max(0, -t0), all x; upper root branch, flagged when two roots exist",
        "tags": ["viscous", "transcendental"],
    },
}


def catalog_manifest() -> list[dict[str, Any]]:
    """JSON-ready list of families, in a stable order."""
    return [{"family": name, **CATALOG[name]} for name in CATALOG]


def _parse_float_vectors(value) -> list[list[float]]:
    if isinstance(value, str):
        import json

        value = json.loads(value)
    return [[float(c) for c in np.atleast_1d(v)] for v in value]


def build_solution(family: str | Family, params: Mapping[str, Any]) -> FluidSolution:
    """Construct a cataloged solution from loosely typed parameters (e.g. CLI strings).

    Rational parameters keep their exact form; unknown keys raise
    :class:`InvalidParameter`.
    """
    name = family.value if isinstance(family, Family) else str(family)
    if name not in CATALOG:
        raise InvalidParameter(f"unknown family {name!r}; known: {', '.join(CATALOG)}")
    schema = CATALOG[name]["parameters"]
    unknown = set(params) - set(schema)
    if unknown:
        raise InvalidParameter(f"unknown parameters for {name}: {sorted(unknown)}")
    kw: dict[str, Any] = {}
    for key, value in params.items():
        kind = schema[key]["type"]
        if kind == "float":
            kw[key] = float(value)
        elif kind == "int":
            try:
                kw[key] = int(value)
            except (TypeError, ValueError) as exc:
                raise InvalidParameter(f"{key} must be an integer, got {value!r}") from exc
        elif kind == "list of d-vectors":
            kw[key] = _parse_float_vectors(value)
        else:
            kw[key] = value
    try:
        if name == Family.GCA_SCALING.value:
            return gca_scaling_solution(GcaScalingParams(**kw))
        if name == Family.GCA_QUARTIC_1D.value:
            return quartic_1d_solution(Quartic1dParams(**kw))
        if name == Family.GCA_CONTINUITY_BRANCH_1D.value:
            return continuity_branch_1d_solution(**kw)
        if name == Family.GCA_ACCELERATION.value:
            return acceleration_solution(AccelerationFamilyParams(**kw))
        if name == Family.GCA_CONFORMAL_DEFORMED.value:
            gamma = kw.pop("gamma")
            return conformal_deformed_solution(GcaScalingParams(**kw), gamma)
        if name == Family.GCA_ACCELERATION_DEFORMED.value:
            accel = kw.pop("accelerations")
            return acceleration_deformed_solution(GcaScalingParams(**kw), accel)
        if name == Family.LIFSHITZ_SCALING.value:
            return lifshitz_scaling_solution(LifshitzParams(**kw))
        vp = ViscousParams(**kw)
        if (name == Family.VISCOUS_GCA_INTEGER.value) != vp.ell.is_integer():
            raise InvalidParameter(f"{name} requires {'an integer' if name.endswith('integer') and 'half' not in name else 'a half-integer'} ell")
        return viscous_solution(vp)
    except TypeError as exc:
        raise InvalidParameter(str(exc)) from exc
