"""Particle orbits, the vorticity/shear/expansion split and mass in a ball."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import FluidSolution, as_points
from .errors import DomainExceeded, InvalidParameter, NonPositiveDensity
from .material import StencilConfig, velocity_gradient


@dataclass
class Orbit:
    """Samples of a particle path x(t) with x(t_start) = b.

    ``t`` is strictly increasing whichever way the integration ran.
    ``complete`` is False when the path left the domain before reaching the
    requested end time; the samples then stop at the last good step.
    """

    t_start: float
    b: np.ndarray
    h: float
    t: np.ndarray
    x: np.ndarray
    complete: bool = True

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    def at(self, t) -> np.ndarray:
        """Linear interpolation of the samples, for plotting-grade lookups only."""
        t = np.asarray(t, dtype=float)
        return np.stack([np.interp(t, self.t, self.x[:, i]) for i in range(self.dim)], axis=-1)

    def rows(self) -> list[list[float]]:
        return [[float(ti), *map(float, xi)] for ti, xi in zip(self.t, self.x)]

    def header(self) -> list[str]:
        return ["t"] + [f"x{i + 1}" for i in range(self.dim)]


def _velocity_fn(field_):
    if isinstance(field_, FluidSolution):
        dim = field_.dim

        def fn(t, x):
            return field_.velocity(np.asarray([t]), np.asarray(x)[None, :])[0]
        return fn, dim
    return (lambda t, x: np.asarray(field_(t, x), dtype=float)), None


def rk4_step(f, t: float, x: np.ndarray, h: float) -> np.ndarray:
    """One classical fourth-order Runge-Kutta step of dx/dt = f(t, x)."""
    k1 = f(t, x)
    k2 = f(t + h / 2, x + h / 2 * k1)
    k3 = f(t + h / 2, x + h / 2 * k2)
    k4 = f(t + h, x + h * k3)
    return x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def trace_orbit(sol, b, t_range, h: float = 1e-3, strict: bool = True) -> Orbit:
    """Integrate dx/dt = v(t, x) from x(t_range[0]) = b to t_range[1].

    ``sol`` is a FluidSolution or a plain callable v(t, x) -> (d,). The end
    time may lie before the start, in which case the path is traced
    backwards. The step count is ceil(|span| / h) and the step is shrunk to
    land on the end time exactly, so the run is fully deterministic.

    Leaving the domain raises DomainExceeded carrying the partial orbit as
    ``err.orbit``; with ``strict=False`` that partial orbit is returned with
    ``complete=False`` instead.
    """
    if not h > 0:
        raise InvalidParameter("step h must be positive")
    f, dim = _velocity_fn(sol)
    b = np.atleast_1d(np.asarray(b, dtype=float)).copy()
    if dim is not None and b.shape != (dim,):
        raise InvalidParameter(f"initial point must have {dim} components")
    t0, t1 = map(float, t_range)
    span = t1 - t0
    n = max(1, math.ceil(abs(span) / h - 1e-9)) if span != 0 else 0
    step = span / n if n else 0.0

    ts = [t0]
    xs = [b]
    complete = True
    x = b
    for i in range(n):
        t = t0 + i * step
        try:
            x = rk4_step(f, t, x, step)
            if not np.all(np.isfinite(x)):
                raise DomainExceeded(f"orbit diverged near t={t}")
            if isinstance(sol, FluidSolution) and not sol.domain.contains(np.asarray([t + step]), x[None, :])[0]:
                raise DomainExceeded(f"orbit left the domain at t={t + step}")
        except DomainExceeded as err:
            complete = False
            orbit = _make_orbit(t0, b, h, ts, xs, step, complete)
            if strict:
                err.orbit = orbit
                raise
            return orbit
        ts.append(t0 + (i + 1) * step if i + 1 < n else t1)
        xs.append(x)
    return _make_orbit(t0, b, h, ts, xs, step, complete)


def _make_orbit(t0, b, h, ts, xs, step, complete) -> Orbit:
    t = np.asarray(ts, dtype=float)
    x = np.asarray(xs, dtype=float)
    if step < 0:
        t, x = t[::-1], x[::-1]
    return Orbit(t0, b, h, t, x, complete)


def _trace_batch(sol, starts: np.ndarray, t_range, h: float) -> list[Orbit] | None:
    """All orbits stepped together; None if any of them leaves the domain."""
    t0, t1 = map(float, t_range)
    span = t1 - t0
    n = max(1, math.ceil(abs(span) / h - 1e-9)) if span != 0 else 0
    step = span / n if n else 0.0
    m = len(starts)
    if isinstance(sol, FluidSolution):
        def f(t, x):
            return sol.velocity(np.full(m, t), x)
    else:
        def f(t, x):
            return np.stack([np.asarray(sol(t, xi), dtype=float) for xi in x])
    xs = np.empty((n + 1,) + starts.shape)
    xs[0] = starts
    try:
        for i in range(n):
            xs[i + 1] = rk4_step(f, t0 + i * step, xs[i], step)
    except DomainExceeded:
        return None
    ts = t0 + step * np.arange(n + 1)
    if n:
        ts[-1] = t1
    if not np.all(np.isfinite(xs)):
        return None
    if isinstance(sol, FluidSolution) and not np.all(sol.domain.contains(np.repeat(ts, m), xs.reshape(-1, starts.shape[1]))):
        return None
    return [_make_orbit(t0, starts[j].copy(), h, list(ts), list(xs[:, j]), step, True) for j in range(m)]


def trace_orbits(sol, starts, t_range, h: float = 1e-3, strict: bool = True, workers: int | None = None) -> list[Orbit]:
    """Trace several independent orbits; results come back in input order.

    Orbits are first stepped together as one vectorised system. If any of
    them leaves the domain they are redone one at a time, so the partial-orbit
    handling of :func:`trace_orbit` applies per orbit.
    """
    starts = [np.atleast_1d(np.asarray(s, dtype=float)) for s in starts]
    if not starts:
        return []
    if not h > 0:
        raise InvalidParameter("step h must be positive")
    batch = _trace_batch(sol, np.stack(starts), t_range, h)
    if batch is not None:
        return batch
    if workers is None or workers <= 1:
        return [trace_orbit(sol, s, t_range, h, strict) for s in starts]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda s: trace_orbit(sol, s, t_range, h, strict), starts))


@dataclass
class KinematicDecomposition:
    """Split of the velocity gradient G_ij = dv_i/dx_j.

    vorticity_ij = G_ij - G_ji, shear_ij = G_ij + G_ji - (2/d) delta_ij tr G,
    and expansion = tr G, the coefficient multiplying delta_ij.
    """

    gradient: np.ndarray
    vorticity: np.ndarray
    shear: np.ndarray
    expansion: np.ndarray

    def reassemble(self) -> np.ndarray:
        d = self.gradient.shape[-1]
        eye = np.eye(d)
        return 0.5 * self.vorticity + 0.5 * self.shear + (self.expansion[..., None, None] / d) * eye

    def reassembly_error(self) -> float:
        return float(np.max(np.abs(self.reassemble() - self.gradient)))


def decompose_gradient(G) -> KinematicDecomposition:
    G = np.asarray(G, dtype=float)
    d = G.shape[-1]
    Gt = np.swapaxes(G, -1, -2)
    tr = np.trace(G, axis1=-2, axis2=-1)
    shear = G + Gt - (2.0 / d) * tr[..., None, None] * np.eye(d)
    return KinematicDecomposition(G, G - Gt, shear, tr)


def kinematic_decomposition(sol, t, x, cfg: StencilConfig | None = None) -> KinematicDecomposition:
    """Vorticity, shear and expansion of the velocity field at (t, x).

    Works on arrays of points. The gradient comes from Richardson-extrapolated
    central differences; points whose stencil leaves the domain raise
    DomainExceeded.
    """
    if isinstance(sol, FluidSolution):
        t, x = as_points(t, x, sol.dim)
        if not np.all(sol.domain.contains(t, x)):
            raise DomainExceeded("decomposition requested outside the domain")
    G = velocity_gradient(sol, t, x, cfg)
    return decompose_gradient(G)


@dataclass(frozen=True)
class QuadratureConfig:
    """Resolution of the ball quadrature.

    ``method="polar"`` is a tensor-product midpoint rule in (r, angles), with
    n radial cells, n polar cells and 2n azimuthal cells in 3d. It converges
    at second order for smooth densities. ``method="mask"`` sums midpoint
    cells of an n**d cube whose centres fall in the ball; its boundary error
    is irregular and of lower order.
    """

    n: int | None = None
    method: str = "polar"
    chunk: int = 1 << 18

    DEFAULT_N = {1: 4096, 2: 512, 3: 96}

    def __post_init__(self):
        if self.method not in ("polar", "mask"):
            raise InvalidParameter(f"unknown quadrature method {self.method!r}")
        if self.n is not None and self.n < 1:
            raise InvalidParameter("quadrature resolution must be positive")

    def resolution(self, d: int) -> int:
        return self.n or self.DEFAULT_N.get(d, 32)


def _midpoints(lo, hi, n):
    return lo + (np.arange(n) + 0.5) * (hi - lo) / n


def _ball_nodes(d: int, radius: float, cfg: QuadratureConfig):
    """Offsets from the centre and their weights."""
    n = cfg.resolution(d)
    if cfg.method == "mask" or d == 1:
        axis = _midpoints(-radius, radius, n)
        mesh = np.meshgrid(*([axis] * d), indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1)
        keep = np.sum(pts**2, axis=-1) <= radius**2
        return pts[keep], np.full(int(keep.sum()), (2 * radius / n) ** d)
    r = _midpoints(0.0, radius, n)
    dr = radius / n
    if d == 2:
        th = _midpoints(0.0, 2 * math.pi, n)
        R, TH = np.meshgrid(r, th, indexing="ij")
        pts = np.stack([R * np.cos(TH), R * np.sin(TH)], axis=-1).reshape(-1, 2)
        w = (R * dr * (2 * math.pi / n)).ravel()
        return pts, w
    if d == 3:
        th = _midpoints(0.0, math.pi, n)
        ph = _midpoints(0.0, 2 * math.pi, 2 * n)
        R, TH, PH = np.meshgrid(r, th, ph, indexing="ij")
        st = np.sin(TH)
        pts = np.stack([R * st * np.cos(PH), R * st * np.sin(PH), R * np.cos(TH)], axis=-1).reshape(-1, 3)
        w = (R**2 * st * dr * (math.pi / n) * (math.pi / n)).ravel()
        return pts, w
    raise InvalidParameter("polar quadrature supports d in {1, 2, 3}; use method='mask'")


def mass_in_ball(sol: FluidSolution, center, radius: float, t: float, cfg: QuadratureConfig | None = None) -> float:
    """Integral of the density over the ball |x - center| <= radius at time t.

    Partial sums run over fixed chunks in index order, so the result is
    reproducible to the last bit.
    """
    cfg = cfg or QuadratureConfig()
    if radius < 0:
        raise InvalidParameter("radius must be non-negative")
    if radius == 0:
        return 0.0
    center = np.atleast_1d(np.asarray(center, dtype=float))
    if center.shape != (sol.dim,):
        raise InvalidParameter(f"center must have {sol.dim} components")
    pts, w = _ball_nodes(sol.dim, radius, cfg)
    pts = pts + center
    total = 0.0
    for lo in range(0, len(w), cfg.chunk):
        p = pts[lo:lo + cfg.chunk]
        try:
            rho = sol.density(np.full(len(p), float(t)), p)
        except NonPositiveDensity as err:
            raise DomainExceeded(f"ball leaves the positivity region at t={t}") from err
        total += float(np.dot(rho, w[lo:lo + cfg.chunk]))
    return total


def mass_curve(sol: FluidSolution, times, center=None, radius: float = 1.0, cfg: QuadratureConfig | None = None,
               workers: int | None = None) -> np.ndarray:
    center = np.zeros(sol.dim) if center is None else center
    times = [float(t) for t in np.asarray(times, dtype=float)]
    if workers is None or workers <= 1:
        return np.array([mass_in_ball(sol, center, radius, t, cfg) for t in times])
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return np.array(list(pool.map(lambda t: mass_in_ball(sol, center, radius, t, cfg), times)))


def sign_changes(t, f) -> list[float]:
    """Times where f changes sign, located by linear interpolation."""
    t = np.asarray(t, dtype=float)
    f = np.asarray(f, dtype=float)
    s = np.sign(f)
    out = []
    for i in np.nonzero(s[:-1] * s[1:] < 0)[0]:
        out.append(float(t[i] - f[i] * (t[i + 1] - t[i]) / (f[i + 1] - f[i])))
    out.extend(float(t[i]) for i in np.nonzero(s == 0)[0])
    return sorted(out)
