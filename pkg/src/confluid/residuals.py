"""Residuals of the governing equations on sampled grids.

Every check returns a :class:`ResidualReport`. Residuals are evaluated per
point with central differences; each point also records the magnitudes of the
individual terms that enter the equation, which give the relative norm.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Mapping

import numpy as np

from .core import Family, FluidSolution, as_points
from .errors import DomainExceeded, InvalidParameter
from .material import StencilConfig, material_derivative_fd, partial_derivative, velocity_gradient

#: Floor for the relative normalisation.
RELATIVE_FLOOR = 1e-300

#: Lattice nodes allowed for the FD cross-check of an analytic path.
CROSS_CHECK_BUDGET = 4_000_000


class Equation(enum.Enum):
    CONTINUITY = "Continuity"
    EULER_GALILEI = "EulerGalilei"
    EULER_LIFSHITZ = "EulerLifshitz"
    EULER_VISCOUS = "EulerViscous"


_AXIS_RE = re.compile(r"^\s*(t|x\d*)\s*=\s*([^:]+):([^:]+):(\d+)\s*$")


@dataclass(frozen=True)
class Grid:
    """Tensor grid over t and each x_i, subsampled to at most ``max_points``.

    Subsampling draws flat indices without replacement from a seeded generator
    and keeps them in index order, so the same grid always yields the same
    points.
    """

    t: tuple[float, float, int]
    x: tuple[tuple[float, float, int], ...]
    max_points: int = 10_000
    seed: int = 0

    def __post_init__(self):
        for lo, hi, n in (self.t, *self.x):
            if n < 1 or not hi >= lo:
                raise InvalidParameter(f"invalid grid axis {lo}:{hi}:{n}")

    @property
    def dim(self) -> int:
        return len(self.x)

    @classmethod
    def parse(cls, spec: str, d: int, max_points: int = 10_000, seed: int = 0) -> "Grid":
        """Parse ``"t=2:6:50,x=-10:10:100"``; ``x`` applies to every axis, ``x2=...`` to one."""
        t_axis = None
        shared = None
        per_axis: dict[int, tuple[float, float, int]] = {}
        for part in spec.split(","):
            m = _AXIS_RE.match(part)
            if not m:
                raise InvalidParameter(f"cannot parse grid axis {part!r}")
            name, lo, hi, n = m.group(1), float(m.group(2)), float(m.group(3)), int(m.group(4))
            axis = (lo, hi, n)
            if name == "t":
                t_axis = axis
            elif name == "x":
                shared = axis
            else:
                i = int(name[1:])
                if not 1 <= i <= d:
                    raise InvalidParameter(f"axis {name} outside 1..{d}")
                per_axis[i] = axis
        if t_axis is None:
            raise InvalidParameter("grid needs a t axis")
        xs = []
        for i in range(1, d + 1):
            axis = per_axis.get(i, shared)
            if axis is None:
                raise InvalidParameter(f"grid has no range for x{i}")
            xs.append(axis)
        return cls(t_axis, tuple(xs), max_points, seed)

    def total(self) -> int:
        return math.prod(n for _, _, n in (self.t, *self.x))

    def points(self) -> tuple[np.ndarray, np.ndarray]:
        axes = [np.linspace(lo, hi, n) for lo, hi, n in (self.t, *self.x)]
        shape = tuple(len(a) for a in axes)
        total = self.total()
        if total <= self.max_points:
            flat = np.arange(total)
        else:
            rng = np.random.default_rng(self.seed)
            flat = np.sort(rng.choice(total, size=self.max_points, replace=False))
        idx = np.unravel_index(flat, shape)
        t = axes[0][idx[0]]
        x = np.stack([axes[i + 1][idx[i + 1]] for i in range(self.dim)], axis=-1)
        return t, x

    def to_dict(self) -> dict[str, Any]:
        return {"t": list(self.t), "x": [list(a) for a in self.x], "max_points": self.max_points, "seed": self.seed}


def _cfg_dict(cfg: StencilConfig) -> dict[str, Any]:
    return asdict(cfg)


@dataclass
class ResidualReport:
    """Per-point residuals plus their norms.

    ``relative`` is the max-abs residual over the largest individual term
    magnitude found on the grid (floored at 1e-300); ``pointwise_relative`` is
    the worst per-point ratio of the same kind.
    """

    solution_id: str
    equation: Equation
    grid: Mapping[str, Any] | None
    t: np.ndarray
    x: np.ndarray
    residuals: np.ndarray
    term_scale: np.ndarray
    config: StencilConfig
    path: str = "fd"
    cross_checks: dict[str, dict[str, float]] = field(default_factory=dict)
    dropped: int = 0

    @property
    def per_point(self) -> np.ndarray:
        r = np.abs(self.residuals)
        return r.max(axis=-1) if r.ndim > 1 else r

    @property
    def max_abs(self) -> float:
        return float(self.per_point.max()) if self.per_point.size else 0.0

    @property
    def rms(self) -> float:
        return float(np.sqrt(np.mean(self.per_point**2))) if self.per_point.size else 0.0

    @property
    def scale(self) -> float:
        return float(self.term_scale.max()) if self.term_scale.size else 0.0

    @property
    def relative(self) -> float:
        return self.max_abs / max(self.scale, RELATIVE_FLOOR)

    @property
    def pointwise_relative(self) -> float:
        if not self.per_point.size:
            return 0.0
        return float(np.max(self.per_point / np.maximum(self.term_scale, RELATIVE_FLOOR)))

    def norms(self) -> dict[str, float]:
        return {
            "max_abs": self.max_abs,
            "rms": self.rms,
            "relative": self.relative,
            "pointwise_relative": self.pointwise_relative,
            "term_scale": self.scale,
        }

    def passed(self, tol: float) -> bool:
        return self.relative <= tol

    def summary(self) -> dict[str, Any]:
        return {
            "solution_id": self.solution_id,
            "equation": self.equation.value,
            "path": self.path,
            "n_points": int(self.t.size),
            "dropped_points": int(self.dropped),
            "norms": self.norms(),
            "cross_checks": self.cross_checks,
            "grid": dict(self.grid) if self.grid is not None else None,
            "config": _cfg_dict(self.config),
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), sort_keys=True, indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        d = self.x.shape[-1]
        comps = self.residuals.shape[-1] if self.residuals.ndim > 1 else 1
        res = self.residuals.reshape(len(self.t), comps)
        w.writerow(["t"] + [f"x{i + 1}" for i in range(d)] + [f"r{j + 1}" for j in range(comps)] + ["term_scale"])
        for i in range(len(self.t)):
            w.writerow([repr(float(self.t[i]))] + [repr(float(v)) for v in self.x[i]] + [repr(float(v)) for v in res[i]] + [repr(float(self.term_scale[i]))])
        return buf.getvalue()


# --------------------------------------------------------------------------
# point selection


def _footprint_mask(sol: FluidSolution, t, x, depth: int, cfg: StencilConfig) -> np.ndarray:
    """True where the stencil box of nesting ``depth`` stays inside the domain."""
    if depth < 1:
        depth = 1
    with np.errstate(all="ignore"):
        speed = np.max(np.abs(np.asarray(sol.velocity_fn(t, x), dtype=float)), axis=-1)
    h_t, h_x = cfg.steps(depth, t, x, speed)
    # Richardson halves the steps, so the coarse stencil bounds the box; one
    # extra step covers the gradient stencils of the viscous term.
    rt, rx = (depth + 1) * h_t, (depth + 1) * h_x
    ok = sol.domain.contains(t, x)
    d = x.shape[-1]
    for corner in range(2 ** (d + 1)):
        signs = [1.0 if corner >> b & 1 else -1.0 for b in range(d + 1)]
        tc = t + signs[0] * rt
        xc = x + np.stack([signs[i + 1] * rx for i in range(d)], axis=-1)
        ok &= sol.domain.contains(tc, xc)
    return ok


def select_points(sol: FluidSolution, grid: Grid | tuple, depth: int = 1, cfg: StencilConfig | None = None):
    """Grid points whose stencils fit in the domain, plus the count dropped."""
    cfg = cfg or StencilConfig()
    if isinstance(grid, Grid):
        t, x = grid.points()
    else:
        t, x = as_points(*grid, sol.dim)
        t, x = t.reshape(-1), x.reshape(-1, sol.dim)
    keep = _footprint_mask(sol, t, x, depth, cfg)
    return t[keep], x[keep], int((~keep).sum())


def _parallel(fn: Callable[[np.ndarray, np.ndarray], Any], t, x, workers: int, chunk: int = 512):
    """Evaluate fn chunk-wise, results concatenated in index order."""
    if workers <= 1 or t.size <= chunk:
        return fn(t, x)
    bounds = [(i, min(i + chunk, t.size)) for i in range(0, t.size, chunk)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda b: fn(t[b[0] : b[1]], x[b[0] : b[1]]), bounds))
    if isinstance(parts[0], tuple):
        return tuple(np.concatenate([p[k] for p in parts], axis=0) for k in range(len(parts[0])))
    return np.concatenate(parts, axis=0)


# --------------------------------------------------------------------------
# continuity


def _continuity_terms(sol: FluidSolution, cfg: StencilConfig):
    def fn(t, x):
        d = sol.dim
        rho_t = partial_derivative(lambda tt, xx: sol.density(tt, xx), t, x, 0, cfg)
        flux = [partial_derivative(lambda tt, xx, i=i: sol.density(tt, xx) * sol.velocity(tt, xx)[..., i], t, x, i + 1, cfg) for i in range(d)]
        r = rho_t + sum(flux)
        scale = np.maximum.reduce([np.abs(rho_t)] + [np.abs(f) for f in flux])
        return r[:, None], scale

    return fn


def continuity_residual(sol: FluidSolution, grid, cfg: StencilConfig | None = None, workers: int = 1) -> ResidualReport:
    """r = d rho/dt + sum_i d(rho v_i)/dx_i by central differences."""
    cfg = cfg or StencilConfig()
    t, x, dropped = select_points(sol, grid, 1, cfg)
    r, scale = _parallel(_continuity_terms(sol, cfg), t, x, workers)
    return ResidualReport(
        sol.label or sol.family.value,
        Equation.CONTINUITY,
        grid.to_dict() if isinstance(grid, Grid) else None,
        t,
        x,
        r,
        scale,
        cfg,
        path="fd",
        dropped=dropped,
    )


# --------------------------------------------------------------------------
# Euler


def _pressure_gradient(sol: FluidSolution, t, x, cfg):
    def p(tt, xx):
        return sol.eos.pressure(sol.density(tt, xx))

    return np.stack([partial_derivative(p, t, x, i + 1, cfg) for i in range(sol.dim)], axis=-1)


def _stress_divergence(sol: FluidSolution, t, x, cfg):
    """sum_j d sigma_ji / dx_j with sigma from the FD rate of strain."""
    d = sol.dim

    def sigma(tt, xx):
        G = velocity_gradient(sol, tt, xx, cfg, depth=2)
        div = np.trace(G, axis1=-2, axis2=-1)
        eye = np.eye(d)
        eta = sol.shear_viscosity(tt, xx)[..., None, None]
        xi = sol.volume_viscosity(tt, xx)[..., None, None]
        return eta * (G + np.swapaxes(G, -1, -2) - (2.0 / d) * div[..., None, None] * eye) + xi * div[..., None, None] * eye

    cols = []
    for i in range(d):
        cols.append(sum(partial_derivative(lambda tt, xx, j=j, i=i: sigma(tt, xx)[..., j, i], t, x, j + 1, cfg, depth=2) for j in range(d)))
    return np.stack(cols, axis=-1)


def _material_term(sol: FluidSolution, t, x, k: int, path: str, cfg: StencilConfig):
    if path == "analytic":
        return np.asarray(sol.exact_material_derivative(t, x, k), dtype=float)
    return material_derivative_fd(sol, t, x, k, cfg)


def _euler_terms(sol: FluidSolution, k: int, path: str, cfg: StencilConfig, viscous: bool):
    def fn(t, x):
        rho = sol.density(t, x)
        v = sol.velocity(t, x)
        Dv = _material_term(sol, t, x, k, path, cfg)
        inertia = rho[:, None] * Dv
        grad_p = _pressure_gradient(sol, t, x, cfg)
        r = inertia + grad_p
        # reference inertial magnitude rho |v| / t^k keeps the normalisation
        # meaningful where both terms vanish identically
        reference = rho * np.max(np.abs(v), axis=-1) / np.abs(t) ** k
        parts = [np.max(np.abs(inertia), axis=-1), np.max(np.abs(grad_p), axis=-1), reference]
        if viscous:
            div_sigma = _stress_divergence(sol, t, x, cfg)
            r = r - div_sigma
            parts.append(np.max(np.abs(div_sigma), axis=-1))
        return r, np.maximum.reduce(parts)

    return fn


def _subsample_for_budget(n: int, per_point: int, budget: int) -> np.ndarray:
    m = max(1, min(n, budget // max(per_point, 1)))
    return np.unique(np.linspace(0, n - 1, m).round().astype(int)) if n else np.arange(0)


def _euler(sol, grid, k, equation, cfg, path, workers, viscous, cross_check=True) -> ResidualReport:
    cfg = cfg or StencilConfig()
    if path not in ("auto", "analytic", "fd"):
        raise InvalidParameter(f"unknown derivative path {path!r}")
    if path == "auto":
        path = "analytic" if sol.exact_material_derivative is not None else "fd"
    if path == "analytic" and sol.exact_material_derivative is None:
        raise InvalidParameter(f"{sol.label}: no closed-form material derivative")
    depth = k + (2 if viscous else 0)
    t, x, dropped = select_points(sol, grid, depth if path == "fd" else (2 if viscous else 1), cfg)
    r, scale = _parallel(_euler_terms(sol, k, path, cfg, viscous), t, x, workers)
    report = ResidualReport(
        sol.label or sol.family.value,
        equation,
        grid.to_dict() if isinstance(grid, Grid) else None,
        t,
        x,
        r,
        scale,
        cfg,
        path=path,
        dropped=dropped,
    )
    if path == "analytic" and cross_check and t.size:
        # FD cross-check on the points whose stencil fits, within a node budget
        fit = _footprint_mask(sol, t, x, k, cfg)
        idx = np.flatnonzero(fit)
        per_point = (2 * k + 1) ** (sol.dim + 1) * (2 if cfg.uses_richardson(k) else 1)
        idx = idx[_subsample_for_budget(idx.size, per_point, CROSS_CHECK_BUDGET)]
        if idx.size:
            exact = np.asarray(sol.exact_material_derivative(t[idx], x[idx], k), dtype=float)
            fd = material_derivative_fd(sol, t[idx], x[idx], k, cfg)
            rho = sol.density(t[idx], x[idx])
            fd_rep = ResidualReport(report.solution_id, equation, None, t[idx], x[idx], r[idx] + rho[:, None] * (fd - exact), scale[idx], cfg, path="fd")
            report.cross_checks["fd"] = {
                **fd_rep.norms(),
                "n_points": int(idx.size),
                "max_abs_derivative_difference": float(np.max(np.abs(fd - exact))),
            }
    return report


def euler_residual_galilei(sol: FluidSolution, grid, cfg: StencilConfig | None = None, path: str = "auto", workers: int = 1, cross_check: bool = True) -> ResidualReport:
    """r_i = rho D^(2 ell) v_i + dp/dx_i.

    ``path="auto"`` uses the solution's closed-form material derivative when it
    has one (cross-reported against FD on a budgeted subsample) and nested
    central differences otherwise.
    """
    if sol.ell is None:
        raise InvalidParameter("solution carries no ell; use euler_residual_lifshitz")
    return _euler(sol, grid, sol.ell.doubled, Equation.EULER_GALILEI, cfg, path, workers, False, cross_check)


def euler_residual_lifshitz(sol: FluidSolution, grid, cfg: StencilConfig | None = None, path: str = "auto", workers: int = 1, cross_check: bool = True) -> ResidualReport:
    """r_i = rho D v_i + dp/dx_i with the anisotropic equation of state."""
    return _euler(sol, grid, 1, Equation.EULER_LIFSHITZ, cfg, path, workers, False, cross_check)


def euler_residual_viscous(sol: FluidSolution, grid, cfg: StencilConfig | None = None, path: str = "auto", workers: int = 1, cross_check: bool = True) -> ResidualReport:
    """r_i = rho D^(2 ell) v_i + dp/dx_i - d sigma_ji/dx_j.

    Without viscosity this is exactly :func:`euler_residual_galilei`.
    """
    if sol.ell is None:
        raise InvalidParameter("solution carries no ell")
    if not sol.viscous or (sol.params.get("eta0", 0) == 0 and sol.params.get("xi0", 0) == 0):
        report = euler_residual_galilei(sol, grid, cfg, path, workers, cross_check)
        report.equation = Equation.EULER_VISCOUS
        return report
    return _euler(sol, grid, sol.ell.doubled, Equation.EULER_VISCOUS, cfg, path, workers, True, cross_check)


def governing_equations(sol: FluidSolution) -> tuple[Equation, ...]:
    if sol.z is not None:
        return (Equation.CONTINUITY, Equation.EULER_LIFSHITZ)
    if sol.viscous:
        return (Equation.CONTINUITY, Equation.EULER_VISCOUS)
    return (Equation.CONTINUITY, Equation.EULER_GALILEI)


_RUNNERS = {
    Equation.CONTINUITY: lambda sol, grid, cfg, path, workers: continuity_residual(sol, grid, cfg, workers),
    Equation.EULER_GALILEI: lambda sol, grid, cfg, path, workers: euler_residual_galilei(sol, grid, cfg, path, workers),
    Equation.EULER_LIFSHITZ: lambda sol, grid, cfg, path, workers: euler_residual_lifshitz(sol, grid, cfg, path, workers),
    Equation.EULER_VISCOUS: lambda sol, grid, cfg, path, workers: euler_residual_viscous(sol, grid, cfg, path, workers),
}


def residual_suite(sol: FluidSolution, grid, cfg: StencilConfig | None = None, equations=None, path: str = "auto", workers: int = 1) -> dict[Equation, ResidualReport]:
    """All governing-equation residuals of a solution, in a fixed order."""
    equations = equations or governing_equations(sol)
    return {Equation(eq): _RUNNERS[Equation(eq)](sol, grid, cfg, path, workers) for eq in equations}


# --------------------------------------------------------------------------
# reduced first integrals


def first_integrals(u, w, y, a: float) -> tuple[np.ndarray, np.ndarray]:
    """((u - y/2) w / y, (u^2 + 3 a w^2)/y - u)."""
    return (u - 0.5 * y) * w / y, (u * u + 3.0 * a * w * w) / y - u


@dataclass
class FirstIntegralReport:
    means: tuple[float, float]
    deviations: tuple[float, float]
    relative: tuple[float, float]
    n_points: int

    def passed(self, tol: float) -> bool:
        return max(self.relative) <= tol

    def summary(self) -> dict[str, Any]:
        return {"means": list(self.means), "deviations": list(self.deviations), "relative": list(self.relative), "n_points": self.n_points}


def ode_first_integral_check(sol: FluidSolution, y_grid, reduced=None) -> FirstIntegralReport:
    """Spread of both reduced first integrals over ``y_grid``.

    ``reduced`` overrides the solution's own (u, w) map, e.g. to probe a
    perturbed profile.
    """
    if sol.family not in (Family.GCA_QUARTIC_1D, Family.GCA_CONTINUITY_BRANCH_1D):
        raise InvalidParameter("first integrals exist for the one-dimensional reduced families only")
    y = np.asarray(y_grid, dtype=float).reshape(-1)
    ok = np.zeros(y.shape, dtype=bool)
    for lo, hi in sol.metadata["positivity_intervals"]:
        ok |= (y > lo) & (y < hi)
    if not ok.all():
        raise DomainExceeded(f"y = {y[~ok][0]} outside the positivity intervals")
    u, w = (reduced or sol.metadata["reduced"])(y)
    ints = first_integrals(u, w, y, sol.metadata["a"])
    means, devs, rels = [], [], []
    for I in ints:
        m = float(np.mean(I))
        dev = float(np.max(np.abs(I - m)))
        means.append(m)
        devs.append(dev)
        rels.append(dev / max(abs(m), float(np.max(np.abs(I))), RELATIVE_FLOOR) if dev else 0.0)
    return FirstIntegralReport(tuple(means), tuple(devs), tuple(rels), int(y.size))


# --------------------------------------------------------------------------
# perturbation helper


def corrupt_density(sol: FluidSolution, eps: float = 1e-3, axis: int = 0) -> FluidSolution:
    """Same solution with rho multiplied by (1 + eps x_axis); used to test detectors."""
    from dataclasses import replace

    base = sol.density_fn

    def density(t, x):
        return base(t, x) * (1.0 + eps * x[..., axis])

    return replace(sol, density_fn=density, label=f"{sol.label or sol.family.value}+corrupted({eps})")
