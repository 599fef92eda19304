"""Data behind the five reference plots, as plain tables ready for CSV."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import InvalidParameter
from .catalog import GcaScalingParams, acceleration_deformed_solution, gca_scaling_solution, lifshitz_scaling_solution
from .kinematics import QuadratureConfig, mass_curve, sign_changes, trace_orbits
from .transforms import AccelerationElement

FIGURES = ("fig1", "fig2", "fig3", "fig4", "fig5")

C, A = 0.1, 0.5

# a^(0) = (0, 1), rotated clockwise by 2 pi / 3 once and twice
ROTATED_TRIPLE = (
    (0.0, 1.0),
    (np.sqrt(3) / 2, -0.5),
    (-np.sqrt(3) / 2, -0.5),
)


@dataclass
class Table:
    name: str
    header: list[str]
    rows: list[list[float]]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        for row in self.rows:
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


@dataclass
class FigureData:
    which: str
    tables: list[Table]
    summary: dict = field(default_factory=dict)


def _ell_tag(ell) -> str:
    return str(Fraction(ell)).replace("/", "-")


def fig1(n_t: int = 41, n_x: int = 201) -> FigureData:
    """Density surfaces rho(t, x) in one dimension for four half-integer ell."""
    ts = np.linspace(2.0, 6.0, n_t)
    xs = np.linspace(-10.0, 10.0, n_x)
    T, X = np.meshgrid(ts, xs, indexing="ij")
    tables = []
    peaks = {}
    for ell in ("1/2", "5/2", "9/2", "13/2"):
        sol = gca_scaling_solution(ell=ell, d=1, a=A, c=C)
        rho = sol.density(T.ravel(), X.ravel()[:, None])
        tables.append(Table(f"fig1_ell_{_ell_tag(ell)}", ["t", "x", "rho"], np.column_stack([T.ravel(), X.ravel(), rho]).tolist()))
        peaks[ell] = float(rho.max())
    return FigureData("fig1", tables, {"max_density": peaks})


def fig2(n: int = 21, t: float = 10.0) -> FigureData:
    """Velocity arrows of v = x/t on [-1, 1]^2 at t = 10."""
    sol = gca_scaling_solution(ell=1, d=2, a=A, c=C)
    axis = np.linspace(-1.0, 1.0, n)
    X1, X2 = np.meshgrid(axis, axis, indexing="ij")
    x = np.column_stack([X1.ravel(), X2.ravel()])
    v = sol.velocity(np.full(len(x), t), x)
    return FigureData("fig2", [Table("fig2_velocity", ["x1", "x2", "v1", "v2"], np.column_stack([x, v]).tolist())], {"t": t})


def fig3(n_t: int = 111, quad: QuadratureConfig | None = None, workers: int | None = None) -> FigureData:
    """Unit-disk mass against time for ell = 1/2 and 5/2 in two dimensions."""
    quad = quad or QuadratureConfig(n=128)
    ts = np.linspace(0.8, 3.0, n_t)
    masses = {}
    tables = []
    for ell in ("1/2", "5/2"):
        sol = gca_scaling_solution(ell=ell, d=2, a=A, c=C)
        masses[ell] = mass_curve(sol, ts, cfg=quad, workers=workers)
        tables.append(Table(f"fig3_ell_{_ell_tag(ell)}", ["t", "mass"], np.column_stack([ts, masses[ell]]).tolist()))
    crossings = sign_changes(ts, masses["1/2"] - masses["5/2"])
    return FigureData("fig3", tables, {"crossings": crossings})


def fig4_field():
    return acceleration_deformed_solution(GcaScalingParams(ell=1, d=2, a=A, c=C), ROTATED_TRIPLE)


def fig4_start(b, t: float = 1.0) -> np.ndarray:
    """Point at time t of the deformed orbit whose linear-in-t coefficient is b.

    The base orbits are the rays x = beta t; the acceleration shift adds
    a0 + a1 t + a2 t^2, so the traced path is (beta + a1) t + a0 + a2 t^2 and
    beta = b - a1.
    """
    g = AccelerationElement(np.asarray(ROTATED_TRIPLE))
    beta = np.asarray(b, dtype=float) - np.asarray(ROTATED_TRIPLE[1])
    return beta * t + g.shift(t, 0)


def fig4_labels() -> list[np.ndarray]:
    return [np.array([0.1, round(0.1 * k, 10)]) for k in range(1, 11)]


def fig4(h: float = 1e-3, t_end: float = 1e-3, workers: int | None = None) -> FigureData:
    """Ten orbits of the accelerated flow, traced from t = 1 back towards t = 0."""
    sol = fig4_field()
    labels = fig4_labels()
    orbits = trace_orbits(sol, [fig4_start(b) for b in labels], (1.0, t_end), h, workers=workers)
    tables = [Table(f"fig4_orbit_b2_{b[1]:.1f}", o.header(), o.rows()) for b, o in zip(labels, orbits)]
    return FigureData("fig4", tables, {"h": h, "t_range": [t_end, 1.0], "labels": [b.tolist() for b in labels]})


def fig5(n_t: int = 100, quad: QuadratureConfig | None = None, workers: int | None = None) -> FigureData:
    """Unit-disk mass against time for the Lifshitz flow with z = 0.6, 0.7, 0.8."""
    quad = quad or QuadratureConfig(n=128)
    ts = np.linspace(0.1, 10.0, n_t)
    tables = []
    monotone = {}
    for z in ("3/5", "7/10", "4/5"):
        sol = lifshitz_scaling_solution(z=z, d=2, a=A, c=C)
        m = mass_curve(sol, ts, cfg=quad, workers=workers)
        tables.append(Table(f"fig5_z_{float(Fraction(z)):.1f}", ["t", "mass"], np.column_stack([ts, m]).tolist()))
        monotone[str(float(Fraction(z)))] = "decreasing" if np.all(np.diff(m) < 0) else "increasing" if np.all(np.diff(m) > 0) else "mixed"
    return FigureData("fig5", tables, {"monotonicity": monotone})


def figure_data(which: str, **kw) -> FigureData:
    builders = {"fig1": fig1, "fig2": fig2, "fig3": fig3, "fig4": fig4, "fig5": fig5}
    if which not in builders:
        raise InvalidParameter(f"unknown figure {which!r}; choose from {', '.join(FIGURES)}")
    return builders[which](**kw)
