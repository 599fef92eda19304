"""Nested material derivatives D^k v with D = d/dt + v . grad.

Three routes are provided. Velocities affine in x with Laurent-polynomial
coefficients in t are handled exactly by a recursion on the coefficients; the
scaling flow v_i = ell x_i / t has a closed form; anything else goes through a
nested central-difference evaluator.

The advecting velocity in D is always the original flow, never an
intermediate derivative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping

import numpy as np

from .core import MAX_DOUBLED_ELL, EllParameter, FluidSolution, Rational, as_points, to_fraction, validate_ell
from .errors import DepthExceeded, InvalidParameter


class LaurentPolynomial:
    """Finite sum of c_p t**p, p any integer, with rational c_p."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Mapping[int, Rational] | None = None):
        self.coeffs = {int(p): to_fraction(c) for p, c in (coeffs or {}).items() if to_fraction(c)}

    @classmethod
    def monomial(cls, power: int, coeff: Rational = 1) -> "LaurentPolynomial":
        return cls({power: coeff})

    def __add__(self, other: "LaurentPolynomial") -> "LaurentPolynomial":
        out = dict(self.coeffs)
        for p, c in other.coeffs.items():
            out[p] = out.get(p, 0) + c
        return LaurentPolynomial(out)

    def __neg__(self):
        return LaurentPolynomial({p: -c for p, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, LaurentPolynomial):
            return LaurentPolynomial({p: c * to_fraction(other) for p, c in self.coeffs.items()})
        out: dict[int, Fraction] = {}
        for p1, c1 in self.coeffs.items():
            for p2, c2 in other.coeffs.items():
                out[p1 + p2] = out.get(p1 + p2, 0) + c1 * c2
        return LaurentPolynomial(out)

    __rmul__ = __mul__

    def derivative(self) -> "LaurentPolynomial":
        return LaurentPolynomial({p - 1: c * p for p, c in self.coeffs.items() if p})

    def is_zero(self) -> bool:
        return not self.coeffs

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for p, c in self.coeffs.items():
            out = out + float(c) * t**p
        return out

    def __eq__(self, other):
        if isinstance(other, LaurentPolynomial):
            return self.coeffs == other.coeffs
        if other == 0:
            return self.is_zero()
        return NotImplemented

    def __repr__(self):
        if not self.coeffs:
            return "0"
        return " + ".join(f"({c})*t**{p}" for p, c in sorted(self.coeffs.items()))


@dataclass(frozen=True)
class AffineVelocity1d:
    """v(t, x) = A(t) x + B(t) in one spatial dimension."""

    A: LaurentPolynomial
    B: LaurentPolynomial

    def __call__(self, t, x):
        return self.A(t) * np.asarray(x, dtype=float) + self.B(t)

    def __add__(self, other: "AffineVelocity1d") -> "AffineVelocity1d":
        return AffineVelocity1d(self.A + other.A, self.B + other.B)

    def is_zero(self) -> bool:
        return self.A.is_zero() and self.B.is_zero()


def material_derivative_affine(v: AffineVelocity1d, k: int, of: AffineVelocity1d | None = None) -> AffineVelocity1d:
    """Exact D^k applied to ``of`` (default: v itself), advected by v.

    D(A_k x + B_k) = (A_k' + A A_k) x + (B_k' + B A_k).
    """
    if k < 0:
        raise InvalidParameter("derivative order must be non-negative")
    cur = of if of is not None else v
    for _ in range(k):
        cur = AffineVelocity1d(cur.A.derivative() + v.A * cur.A, cur.B.derivative() + v.B * cur.A)
    return cur


def falling_product(rate: Rational, k: int) -> Fraction:
    """rate (rate-1) ... (rate-k)."""
    rate = to_fraction(rate)
    return math.prod((rate - j for j in range(k + 1)), start=Fraction(1))


def material_derivative_radial(ell: EllParameter | Rational, k: int, d: int | None = None) -> Fraction:
    """Exact m_k with D^k (ell x_i / t) = m_k x_i / t**(k+1), in any dimension d.

    m_k = ell (ell-1) ... (ell-k); at k = 2 ell this is the ell product.
    """
    ell = validate_ell(ell)
    if k < 0:
        raise InvalidParameter("derivative order must be non-negative")
    return falling_product(ell.value, k)


@dataclass(frozen=True)
class StencilConfig:
    """Step-size policy for nested second-order central differences.

    Single first derivatives (k = 1: pressure gradients, continuity fluxes,
    one material derivative) use the relative step ``h_gradient``; with
    Richardson extrapolation the truncation error is then far below roundoff
    even for steep densities. For 2 <= k <= 7 the relative step is ``h_base ** (1/(1 + k/4))``,
    capped at 0.25/k, which with Richardson extrapolation sits near the
    roundoff/truncation optimum eps**(1/(k+4)). Deeper stencils are roundoff
    bound, so the step is set to a fixed fraction of t over k (0.3/k at k = 8,
    growing to 0.7/k) and Richardson is dropped from k = 12 on, since halving
    the step multiplies roundoff by 2**k.

    The time step is the relative step times t. The space step is the relative
    step times max(1, |x|_inf, |v|_inf t), so the advective and temporal
    differences amplify roundoff alike. Explicit ``h_t``/``h_x`` override the
    schedule with absolute steps.
    """

    h_base: float = 1e-4
    h_gradient: float = 1e-5
    richardson: bool = True
    max_depth: int = MAX_DOUBLED_ELL
    h_t: float | None = None
    h_x: float | None = None
    order: int = 2

    def __post_init__(self):
        if not (0 < self.h_base < 1 and 0 < self.h_gradient < 1):
            raise InvalidParameter("relative steps must lie in (0, 1)")
        for h in (self.h_t, self.h_x):
            if h is not None and not h > 0:
                raise InvalidParameter("steps must be positive")
        if not 0 <= self.max_depth <= MAX_DOUBLED_ELL:
            raise InvalidParameter(f"max_depth must lie in 0..{MAX_DOUBLED_ELL}")
        if self.order != 2:
            raise InvalidParameter("only second-order central differences are implemented")

    def relative_step(self, k: int) -> float:
        k = max(k, 1)
        if k == 1:
            return self.h_gradient
        if k <= _SHALLOW_DEPTH:
            return min(self.h_base ** (1.0 / (1.0 + k / 4.0)), 0.25 / k)
        return min(0.3 + 0.1 * (k - _SHALLOW_DEPTH - 1), 0.7) / k

    def uses_richardson(self, k: int) -> bool:
        return self.richardson and k < _PLAIN_DEPTH

    def steps(self, k: int, t: np.ndarray, x: np.ndarray, speed: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Absolute steps per point; ``speed`` is |v|_inf at the point if known."""
        s = self.relative_step(k)
        if self.h_t is not None:
            h_t = np.full(t.shape, self.h_t)
        else:
            h_t = s * np.abs(t)
        if self.h_x is not None:
            h_x = np.full(t.shape, self.h_x)
        else:
            scale = np.maximum(1.0, np.max(np.abs(x), axis=-1))
            if speed is not None:
                scale = np.maximum(scale, np.nan_to_num(speed) * np.abs(t))
            h_x = s * scale
        return h_t, h_x

    def tolerance(self, k: int) -> float:
        """Documented accuracy target for depth k."""
        return 1e-8 * 100.0 ** (max(0, k - 2) / 2)


def tolerance_schedule(k: int) -> float:
    return StencilConfig().tolerance(k)


_SHALLOW_DEPTH = 7
_PLAIN_DEPTH = 12

VectorField = Callable[[np.ndarray, np.ndarray], np.ndarray]

# lattice nodes (per point) above which a batch is split
_LATTICE_BUDGET = 2_000_000


def _as_field(v) -> tuple[VectorField, int | None]:
    if isinstance(v, FluidSolution):
        return v.velocity, v.dim
    return v, None


def _nested_once(field_fn, advect_fn, t, x, k, h_t, h_x):
    """Nested central differences on a (2k+1)**(d+1) lattice around each point."""
    n, d = x.shape
    m = 2 * k + 1
    offsets = np.arange(-k, k + 1, dtype=float)
    lat_shape = (m,) * (d + 1)
    grids = np.meshgrid(*([offsets] * (d + 1)), indexing="ij")
    T = t.reshape((n,) + (1,) * (d + 1)) + grids[0][None] * h_t.reshape((n,) + (1,) * (d + 1))
    X = np.stack(
        [x[:, i].reshape((n,) + (1,) * (d + 1)) + grids[i + 1][None] * h_x.reshape((n,) + (1,) * (d + 1)) for i in range(d)],
        axis=-1,
    )
    flat_t = T.reshape(-1)
    flat_x = X.reshape(-1, d)
    g = np.asarray(field_fn(flat_t, flat_x), dtype=float)
    comps = g.shape[1:] if g.ndim > 1 else ()
    g = g.reshape((n,) + lat_shape + comps)
    if advect_fn is field_fn:
        adv = g if comps == (d,) else None
    else:
        adv = None
    if adv is None:
        adv = np.asarray(advect_fn(flat_t, flat_x), dtype=float).reshape((n,) + lat_shape + (d,))
    bshape = (n,) + (1,) * (d + 1) + (1,) * len(comps)
    ht = h_t.reshape(bshape)
    hx = h_x.reshape(bshape)
    full = slice(None)
    for level in range(k):
        inner = (full,) + (slice(1, -1),) * (d + 1)
        fwd_t = (full, slice(2, None)) + (slice(1, -1),) * d
        bwd_t = (full, slice(None, -2)) + (slice(1, -1),) * d
        new = (g[fwd_t] - g[bwd_t]) / (2 * ht)
        a = adv[inner]
        for i in range(d):
            fwd = [full] + [slice(1, -1)] * (d + 1)
            bwd = list(fwd)
            fwd[i + 2] = slice(2, None)
            bwd[i + 2] = slice(None, -2)
            vi = a[..., i].reshape(a.shape[:-1] + (1,) * len(comps))
            new = new + vi * (g[tuple(fwd)] - g[tuple(bwd)]) / (2 * hx)
        g = new
        adv = a
    return g.reshape((n,) + comps)


def material_derivative_fd(v, t, x, k: int, cfg: StencilConfig | None = None, of=None) -> np.ndarray:
    """k-fold nested material derivative of ``of`` (default v), advected by v.

    ``v`` is a :class:`FluidSolution` or a callable (t, x) -> (..., d).
    Returns an array of shape S + (d,) (or S + field shape).
    """
    cfg = cfg or StencilConfig()
    if k < 0:
        raise InvalidParameter("derivative order must be non-negative")
    if k > cfg.max_depth:
        raise DepthExceeded(f"nesting depth {k} exceeds {cfg.max_depth}")
    advect_fn, dim = _as_field(v)
    field_fn = advect_fn if of is None else _as_field(of)[0]
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    if dim is None:
        dim = 1 if x.ndim == 0 or (x.ndim == t.ndim and x.shape == t.shape) else x.shape[-1]
    t, x = as_points(t, x, dim)
    shape = t.shape
    tf = t.reshape(-1)
    xf = x.reshape(-1, dim)
    if k == 0:
        out = np.asarray(field_fn(tf, xf), dtype=float)
        return out.reshape(shape + out.shape[1:])
    speed = np.max(np.abs(np.asarray(advect_fn(tf, xf), dtype=float).reshape(tf.size, -1)), axis=-1)
    h_t, h_x = cfg.steps(k, tf, xf, speed)
    per_point = (2 * k + 1) ** (dim + 1)
    chunk = max(1, _LATTICE_BUDGET // per_point)
    pieces = []
    for start in range(0, tf.size, chunk):
        sl = slice(start, start + chunk)
        coarse = _nested_once(field_fn, advect_fn, tf[sl], xf[sl], k, h_t[sl], h_x[sl])
        if cfg.uses_richardson(k):
            fine = _nested_once(field_fn, advect_fn, tf[sl], xf[sl], k, h_t[sl] / 2, h_x[sl] / 2)
            coarse = (4.0 * fine - coarse) / 3.0
        pieces.append(coarse)
    out = np.concatenate(pieces, axis=0)
    return out.reshape(shape + out.shape[1:])


def partial_derivative(f, t, x, var: int, cfg: StencilConfig | None = None, depth: int = 1) -> np.ndarray:
    """Central-difference derivative of f(t, x) in t (var=0) or x_var (var>=1).

    ``t`` has shape (N,), ``x`` shape (N, d); f returns (N,) or (N, ...).
    ``depth`` selects the step of the schedule, for derivatives that are
    themselves differentiated again.
    """
    cfg = cfg or StencilConfig()
    h_t, h_x = cfg.steps(depth, t, x)
    h = h_t if var == 0 else h_x

    def central(step):
        tp, tm, xp, xm = t, t, x, x
        if var == 0:
            tp, tm = t + step, t - step
        else:
            xp = x.copy()
            xm = x.copy()
            xp[:, var - 1] += step
            xm[:, var - 1] -= step
        fp = np.asarray(f(tp, xp), dtype=float)
        fm = np.asarray(f(tm, xm), dtype=float)
        s = step.reshape((-1,) + (1,) * (fp.ndim - 1))
        return (fp - fm) / (2 * s)

    coarse = central(h)
    if not cfg.richardson:
        return coarse
    return (4.0 * central(h / 2) - coarse) / 3.0


def velocity_gradient(v, t, x, cfg: StencilConfig | None = None, depth: int = 1) -> np.ndarray:
    """G[..., i, j] = d v_i / d x_j by central differences."""
    fn, dim = _as_field(v)
    t, x = as_points(t, x, dim or np.asarray(x).shape[-1])
    shape = t.shape
    d = x.shape[-1]
    tf, xf = t.reshape(-1), x.reshape(-1, d)
    cols = [partial_derivative(fn, tf, xf, j + 1, cfg, depth) for j in range(d)]
    G = np.stack(cols, axis=-1)
    return G.reshape(shape + (d, d))
