"""Finite symmetry transformations acting on solutions.

Every ``apply_*`` pushes a solution forward: the image field at a point is
the transformed base field read off at the preimage of that point. Images are
lazy compositions of the base fields, not resampled grids.

For SL(2,R) with t' = (alpha t + beta)/(gamma t + delta) and x' = (dt'/dt)^ell x,
the image at (t, x) is built from h = g^-1 with s = h.gamma t + h.delta:

    rho(t, x) = |s|^(-2 ell d) rho_base(h t, |s|^(-2 ell) x)
    v(t, x)   = |s|^(2 ell - 2) v_base(...) + 2 ell h.gamma sign(s) |s|^(2 ell - 1) x'

so apply(g2, apply(g1, sol)) equals apply(g2 @ g1, sol).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Any, Sequence

import numpy as np

from .core import ExcludedRegion, FluidSolution, SpacetimeDomain, validate_ell
from .errors import DomainExceeded, InvalidParameter, ParameterMismatch, PoleInDomain
from .material import StencilConfig

DETERMINANT_TOLERANCE = 1e-14


@dataclass(frozen=True)
class Sl2Element:
    alpha: float
    beta: float
    gamma: float
    delta: float

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "delta"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise InvalidParameter(f"{name} must be finite")
            object.__setattr__(self, name, v)
        det = self.alpha * self.delta - self.beta * self.gamma
        if abs(det - 1.0) > DETERMINANT_TOLERANCE * max(1.0, abs(self.alpha * self.delta), abs(self.beta * self.gamma)):
            raise InvalidParameter(f"determinant {det!r} differs from 1")

    @classmethod
    def identity(cls) -> "Sl2Element":
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def time_translation(cls, b: float) -> "Sl2Element":
        return cls(1.0, b, 0.0, 1.0)

    @classmethod
    def dilatation(cls, lam: float) -> "Sl2Element":
        """t' = e^lam t, x' = e^(lam ell) x."""
        return cls(math.exp(lam / 2), 0.0, 0.0, math.exp(-lam / 2))

    @classmethod
    def special_conformal(cls, gamma: float) -> "Sl2Element":
        """t' = t / (1 - gamma t)."""
        return cls(1.0, 0.0, -gamma, 1.0)

    @classmethod
    def completing(cls, alpha: float, beta: float, gamma: float) -> "Sl2Element":
        """Element with delta fixed by the unit determinant (alpha != 0)."""
        return cls(alpha, beta, gamma, (1.0 + beta * gamma) / alpha)

    @classmethod
    def from_matrix(cls, m) -> "Sl2Element":
        m = np.asarray(m, dtype=float)
        return cls(m[0, 0], m[0, 1], m[1, 0], m[1, 1])

    def matrix(self) -> np.ndarray:
        return np.array([[self.alpha, self.beta], [self.gamma, self.delta]])

    def __matmul__(self, other: "Sl2Element") -> "Sl2Element":
        a, b, c, d = self.alpha, self.beta, self.gamma, self.delta
        p, q, r, s = other.alpha, other.beta, other.gamma, other.delta
        return Sl2Element(a * p + b * r, a * q + b * s, c * p + d * r, c * q + d * s)

    def inverse(self) -> "Sl2Element":
        return Sl2Element(self.delta, -self.beta, -self.gamma, self.alpha)

    def act(self, t):
        return (self.alpha * t + self.beta) / (self.gamma * t + self.delta)

    def pole(self) -> float | None:
        return None if self.gamma == 0 else -self.delta / self.gamma

    def to_dict(self) -> dict[str, float]:
        return {"alpha": self.alpha, "beta": self.beta, "gamma": self.gamma, "delta": self.delta}


@dataclass(frozen=True)
class AccelerationElement:
    """Constant vectors a^(0..m-1) shifting x by sum_n a^(n) t^n."""

    vectors: np.ndarray

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.vectors, dtype=float))
        if v.ndim != 2 or not np.all(np.isfinite(v)):
            raise InvalidParameter("acceleration vectors must be a finite (n, d) array")
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def order(self) -> int:
        return self.vectors.shape[0] - 1

    def shift(self, t, derivative: int = 0) -> np.ndarray:
        """d^k/dt^k of sum_n a^(n) t^n, shape t.shape + (d,)."""
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape + (self.dim,))
        for n in range(derivative, self.order + 1):
            coef = math.perm(n, derivative)
            if coef and np.any(self.vectors[n]):
                out = out + coef * t[..., None] ** (n - derivative) * self.vectors[n]
        return out

    def __matmul__(self, other: "AccelerationElement") -> "AccelerationElement":
        m = max(self.vectors.shape[0], other.vectors.shape[0])
        a = np.zeros((m, self.dim))
        a[: self.vectors.shape[0]] += self.vectors
        a[: other.vectors.shape[0]] += other.vectors
        return AccelerationElement(a)

    def to_list(self) -> list[list[float]]:
        return self.vectors.tolist()


LIFSHITZ_KINDS = ("time_translation", "dilatation", "space_translation", "boost")


@dataclass(frozen=True)
class LifshitzElement:
    """One Lifshitz transformation; lists of elements compose left to right."""

    kind: str
    value: Any

    def __post_init__(self):
        if self.kind not in LIFSHITZ_KINDS:
            raise InvalidParameter(f"unknown Lifshitz transformation {self.kind!r}")
        if self.kind in ("time_translation", "dilatation"):
            object.__setattr__(self, "value", float(self.value))
        else:
            object.__setattr__(self, "value", tuple(float(c) for c in np.atleast_1d(self.value)))

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "value": self.value if isinstance(self.value, float) else list(self.value)}


# --------------------------------------------------------------------------
# pullback machinery


def _pullback_domain(sol: FluidSolution, preimage, t_range, description: str) -> SpacetimeDomain:
    def outside(t, x):
        with np.errstate(all="ignore"):
            tb, xb = preimage(t, x)
            return ~sol.domain.contains(tb, xb)

    return SpacetimeDomain(sol.dim, t_range, None, (ExcludedRegion(description, outside),))


def _image(sol: FluidSolution, domain, density, velocity, eta, xi, exact, tag: str, info: dict, preimage=None) -> FluidSolution:
    meta = dict(sol.metadata)
    meta["transforms"] = list(sol.metadata.get("transforms", [])) + [info]
    # maps image points to the points of ``sol`` they come from
    meta["preimage"] = preimage
    return replace(
        sol,
        domain=domain,
        density_fn=density,
        velocity_fn=velocity,
        eta_fn=eta,
        xi_fn=xi,
        exact_material_derivative=exact,
        label=f"{tag}[{sol.label or sol.family.value}]",
        metadata=meta,
    )


def apply_sl2(g: Sl2Element, sol: FluidSolution, ell=None, d: int | None = None, t_range=(0.0, math.inf)) -> FluidSolution:
    """Image of ``sol`` under t -> (alpha t + beta)/(gamma t + delta), x -> (dt'/dt)^ell x.

    ``t_range`` bounds the image's time domain; a pole of the preimage map
    inside it raises :class:`PoleInDomain`.
    """
    ell = validate_ell(ell) if ell is not None else sol.ell
    if ell is None:
        raise ParameterMismatch("SL(2,R) acts through ell; the solution carries none")
    if sol.ell is not None and ell != sol.ell:
        raise ParameterMismatch(f"ell = {ell} does not match the solution's ell = {sol.ell}")
    if d is not None and d != sol.dim:
        raise ParameterMismatch(f"d = {d} does not match the solution's dimension {sol.dim}")
    dim = sol.dim
    h = g.inverse()
    pole = h.pole()
    lo, hi = float(t_range[0]), float(t_range[1])
    if pole is not None and lo < pole < hi:
        raise PoleInDomain(f"preimage map has a pole at t = {pole} inside ({lo}, {hi})")
    lval = float(ell.value)
    hg, hd = h.gamma, h.delta

    def preimage(t, x):
        s = hg * t + hd
        return h.act(t), x * np.abs(s)[..., None] ** (-2 * lval)

    def jac_power(t, p):
        return np.abs(hg * t + hd) ** p

    def density(t, x):
        tb, xb = preimage(t, x)
        return jac_power(t, -2 * lval * dim) * sol.density_fn(tb, xb)

    def velocity(t, x):
        s = hg * t + hd
        tb, xb = preimage(t, x)
        vb = sol.velocity_fn(tb, xb)
        return (np.abs(s) ** (2 * lval - 2))[..., None] * vb + (2 * lval * hg * np.sign(s) * np.abs(s) ** (2 * lval - 1))[..., None] * xb

    def scalar(fn):
        if fn is None:
            return None
        return lambda t, x: jac_power(t, -2 * lval * dim) * fn(*preimage(t, x))

    exact = None
    if sol.exact_material_derivative is not None:
        base_exact = sol.exact_material_derivative
        n = ell.doubled

        def exact(t, x, k):
            # image particle paths are x / (gamma t + delta)^n, and the (n+1)-th
            # derivative of such a path picks up (gamma t + delta)^(n+2) = s^-(n+2)
            # (Bol's identity); lower orders carry no such closed form
            if k != n:
                from .material import material_derivative_fd

                return material_derivative_fd(image[0], t, x, k)
            t = np.asarray(t, dtype=float)
            return (np.abs(hg * t + hd) ** -(n + 2))[..., None] * base_exact(*preimage(t, x), k)

    domain = _pullback_domain(sol, preimage, (lo, hi), "preimage outside the base domain")
    image = [_image(sol, domain, density, velocity, scalar(sol.eta_fn), scalar(sol.xi_fn), exact, "sl2", {"sl2": g.to_dict()}, preimage)]
    return image[0]


def apply_acceleration(g: AccelerationElement, sol: FluidSolution, ell=None, d: int | None = None) -> FluidSolution:
    """v'(t, x) = v(t, x - s(t)) + s'(t), rho'(t, x) = rho(t, x - s(t)), s = sum_n a^(n) t^n.

    The closed-form material derivative, when the base has one, carries over:
    D'^k v' = (D^k v)(t, x - s) + s^(k+1)(t).
    """
    ell = validate_ell(ell) if ell is not None else sol.ell
    if g.dim != sol.dim or (d is not None and d != sol.dim):
        raise ParameterMismatch(f"acceleration vectors have dimension {g.dim}, solution has {sol.dim}")
    if ell is not None and g.order != ell.doubled:
        raise ParameterMismatch(f"expected {ell.doubled + 1} acceleration vectors for ell = {ell}, got {g.order + 1}")

    def preimage(t, x):
        return t, x - g.shift(t)

    def density(t, x):
        return sol.density_fn(*preimage(t, x))

    def velocity(t, x):
        return sol.velocity_fn(*preimage(t, x)) + g.shift(t, 1)

    def scalar(fn):
        return None if fn is None else (lambda t, x: fn(*preimage(t, x)))

    exact = None
    if sol.exact_material_derivative is not None:
        base_exact = sol.exact_material_derivative

        def exact(t, x, k):
            t = np.asarray(t, dtype=float)
            return base_exact(t, x - g.shift(t), k) + g.shift(t, k + 1)

    domain = _pullback_domain(sol, preimage, sol.domain.t_range, "shifted point outside the base domain")
    return _image(sol, domain, density, velocity, scalar(sol.eta_fn), scalar(sol.xi_fn), exact, "accel", {"accel": g.to_list()}, preimage)


def apply_lifshitz(g: LifshitzElement | Sequence[LifshitzElement], sol: FluidSolution, z=None, d: int | None = None) -> FluidSolution:
    """Image under Lifshitz translations, dilatations and boosts (lists apply in order)."""
    if not isinstance(g, LifshitzElement):
        for element in g:
            sol = apply_lifshitz(element, sol, z, d)
        return sol
    from .core import validate_z

    z = validate_z(z) if z is not None else sol.z
    if z is None:
        if sol.ell is not None and sol.ell.value == 0.5:
            z = validate_z(1)
        elif g.kind == "dilatation":
            raise ParameterMismatch("dilatations need the dynamical exponent z")
    dim = sol.dim
    if d is not None and d != dim:
        raise ParameterMismatch(f"d = {d} does not match the solution's dimension {dim}")
    if g.kind in ("space_translation", "boost") and len(g.value) != dim:
        raise ParameterMismatch(f"{g.kind} vector must have {dim} components")
    kind, val = g.kind, g.value
    exact = None
    base_exact = sol.exact_material_derivative
    t_range = sol.domain.t_range
    scale_rho = 1.0
    scale_v = 1.0
    if kind == "time_translation":
        preimage = lambda t, x: (t - val, x)  # noqa: E731
        t_range = (max(0.0, t_range[0] + val), t_range[1] + val)
        if base_exact is not None:
            exact = lambda t, x, k: base_exact(np.asarray(t) - val, x, k)  # noqa: E731
        shift_v = None
    elif kind == "dilatation":
        zf = float(z)
        et, ex = math.exp(-val * zf), math.exp(-val / 2)
        preimage = lambda t, x: (t * et, x * ex)  # noqa: E731
        t_range = (t_range[0] / et, t_range[1] / et)
        scale_rho = math.exp(-val * dim / 2)
        scale_v = math.exp(-val * (zf - 0.5))
        if base_exact is not None:
            # D'^k v'(t, x) = e^(-lam(z - 1/2)) e^(-k lam z) (D^k v)(t e^(-lam z), x e^(-lam/2))
            exact = lambda t, x, k: scale_v * et**k * base_exact(np.asarray(t) * et, x * ex, k)  # noqa: E731
        shift_v = None
    elif kind == "space_translation":
        a0 = np.asarray(val)
        preimage = lambda t, x: (t, x - a0)  # noqa: E731
        if base_exact is not None:
            exact = lambda t, x, k: base_exact(t, x - a0, k)  # noqa: E731
        shift_v = None
    else:
        a1 = np.asarray(val)
        preimage = lambda t, x: (t, x - np.asarray(t)[..., None] * a1)  # noqa: E731
        if base_exact is not None:
            exact = lambda t, x, k: base_exact(t, x - np.asarray(t)[..., None] * a1, k) + (a1 if k == 0 else 0.0)  # noqa: E731
        shift_v = a1

    def density(t, x):
        return scale_rho * sol.density_fn(*preimage(t, x))

    def velocity(t, x):
        v = scale_v * sol.velocity_fn(*preimage(t, x))
        return v if shift_v is None else v + shift_v

    def scalar(fn):
        return None if fn is None else (lambda t, x: scale_rho * fn(*preimage(t, x)))

    domain = _pullback_domain(sol, preimage, t_range, f"{kind} preimage outside the base domain")
    return _image(sol, domain, density, velocity, scalar(sol.eta_fn), scalar(sol.xi_fn), exact, kind, {"lifshitz": g.to_dict()}, preimage)


# --------------------------------------------------------------------------
# specs and covariance


TransformSpec = Sl2Element | AccelerationElement | LifshitzElement | list


def parse_transform(spec: str | dict) -> TransformSpec:
    """Parse a JSON transform spec.

    ``{"sl2": {"alpha": .., "beta": .., "gamma": .., "delta": ..}}`` or
    ``{"sl2": {"special_conformal": g}}`` (also ``dilatation``, ``time_translation``);
    ``{"accel": [[...], ...]}``; ``{"lifshitz": [{"kind": ..., "value": ...}, ...]}``.
    """
    if isinstance(spec, str):
        try:
            spec = json.loads(spec)
        except json.JSONDecodeError as exc:
            raise InvalidParameter(f"transform spec is not valid JSON: {exc}") from exc
    if not isinstance(spec, dict) or len(spec) != 1:
        raise InvalidParameter("transform spec must be an object with exactly one of sl2, accel, lifshitz")
    (key, body), = spec.items()
    if key == "sl2":
        if not isinstance(body, dict):
            raise InvalidParameter("sl2 spec must be an object")
        for short in ("special_conformal", "dilatation", "time_translation"):
            if short in body:
                return getattr(Sl2Element, short)(float(body[short]))
        if body == {} or body.get("identity"):
            return Sl2Element.identity()
        try:
            return Sl2Element(*(float(body[k]) for k in ("alpha", "beta", "gamma", "delta")))
        except KeyError as exc:
            raise InvalidParameter(f"sl2 spec lacks {exc}") from exc
    if key == "accel":
        return AccelerationElement(np.asarray(body, dtype=float))
    if key == "lifshitz":
        items = body if isinstance(body, list) else [body]
        return [LifshitzElement(item["kind"], item["value"]) for item in items]
    raise InvalidParameter(f"unknown transform kind {key!r}")


def apply_transform(g: TransformSpec, sol: FluidSolution, **kw) -> FluidSolution:
    if isinstance(g, Sl2Element):
        return apply_sl2(g, sol, **kw)
    if isinstance(g, AccelerationElement):
        return apply_acceleration(g, sol)
    return apply_lifshitz(g, sol)


@dataclass
class CovarianceReport:
    transform: Any
    base: dict
    image: dict
    factor: float
    floor: dict
    passed: bool = field(default=False)
    path: str = "fd"

    def summary(self) -> dict[str, Any]:
        return {
            "transform": self.transform,
            "base": {k.value: r.norms() for k, r in self.base.items()},
            "image": {k.value: r.norms() for k, r in self.image.items()},
            "factor": self.factor,
            "floor": self.floor,
            "path": self.path,
            "passed": self.passed,
        }


def _chain(g: TransformSpec, sol: FluidSolution, **kw) -> list[FluidSolution]:
    """sol followed by its successive images; Lifshitz lists apply element by element."""
    steps = g if isinstance(g, list) else [g]
    out = [sol]
    for element in steps:
        out.append(apply_transform(element, out[-1], **kw))
    return out


def preimage_points(chain: list[FluidSolution], t, x):
    """Carry image points back through every step of ``chain`` to the first solution."""
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    with np.errstate(all="ignore"):
        for image in reversed(chain[1:]):
            t, x = image.metadata["preimage"](t, x)
            t = np.broadcast_to(np.asarray(t, dtype=float), x.shape[:-1]).copy()
    return t, x


def _fd_depth(eq, sol: FluidSolution, path: str) -> int:
    """Deepest finite-difference nesting an equation needs on the given path."""
    from .residuals import Equation

    if eq == Equation.CONTINUITY:
        return 1
    viscous = 2 if eq == Equation.EULER_VISCOUS else 0
    if path == "analytic":
        return max(1, viscous)
    return (1 if eq == Equation.EULER_LIFSHITZ else sol.ell.doubled) + viscous


def covariance_suite(g: TransformSpec, sol: FluidSolution, grid, equations=None, cfg: StencilConfig | None = None, factor: float = 10.0, floor: float | None = None, path: str = "auto", **kw) -> CovarianceReport:
    """Apply g and check every governing residual of the image stays within
    ``factor`` times the base residual.

    The image is sampled on ``grid`` and the base on the preimages of those
    points, so both norms describe the same stretch of flow. Norms are
    relative and floored: with ``floor=None`` each equation's floor is the
    finite-difference accuracy target for its nesting depth, below which two
    residuals cannot be told apart. Both sides use the same derivative path:
    ``"auto"`` takes the closed-form material derivative when base and image
    both have one and nested differences otherwise.
    """
    from .residuals import Grid, residual_suite

    cfg = cfg or StencilConfig()
    chain = _chain(g, sol, **kw)
    image = chain[-1]
    if path == "auto":
        exact = sol.exact_material_derivative is not None and image.exact_material_derivative is not None
        path = "analytic" if exact else "fd"
    t, x = grid.points() if isinstance(grid, Grid) else (np.asarray(grid[0], dtype=float), np.asarray(grid[1], dtype=float))
    x = x.reshape(t.size, sol.dim)
    tb, xb = preimage_points(chain, t, x)
    finite = np.isfinite(tb) & np.all(np.isfinite(xb), axis=-1)
    base_reports = residual_suite(sol, (tb[finite], xb[finite]), cfg, equations, path)
    image_reports = residual_suite(image, (t, x), cfg, equations, path)
    ok = True
    floors = {}
    for eq, rep in image_reports.items():
        if rep.t.size == 0 or base_reports[eq].t.size == 0:
            raise DomainExceeded(f"no grid point of the image lies in its domain for {eq.value}")
        floors[eq.value] = cfg.tolerance(_fd_depth(eq, sol, path)) if floor is None else floor
        ok &= max(rep.relative, floors[eq.value]) <= factor * max(base_reports[eq].relative, floors[eq.value])
    info = g.to_dict() if hasattr(g, "to_dict") else g.to_list() if hasattr(g, "to_list") else [e.to_dict() for e in g]
    return CovarianceReport(info, base_reports, image_reports, factor, floors, bool(ok), path)
