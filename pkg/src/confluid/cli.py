"""Command-line front end.

Subcommands: catalog, verify, transform, figures, algebra. Exit codes are
0 (pass), 1 (a tolerance check failed) and 2 (invalid input).
"""
from __future__ import annotations

import argparse
import configparser
import hashlib
import io
import json
import os
import re
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .algebra import verify_structure_relations
from .catalog import CATALOG, GcaScalingParams, build_solution, catalog_manifest, conformal_deformed_solution
from .core import Family, validate_z
from .errors import ConfluidError, DomainError, InvalidParameter
from .figures import FIGURES, figure_data
from .kinematics import trace_orbits
from .material import StencilConfig
from .residuals import Grid, residual_suite
from .transforms import Sl2Element, apply_transform, parse_transform

EXIT_OK, EXIT_FAIL, EXIT_INVALID = 0, 1, 2

_RATIONAL_RE = re.compile(r"^\s*\d+\s*(/\s*\d+\s*)?$")

# every parameter name used by some family, mapped to its flag
_PARAM_KEYS = sorted({k for entry in CATALOG.values() for k in entry["parameters"]})


def parse_ell_arg(text: str) -> Fraction:
    """ell as an integer or "p/q"; decimals are refused because admissibility is exact."""
    if not _RATIONAL_RE.match(str(text)):
        raise InvalidParameter(f"ell must be written as an integer or p/q, got {text!r}")
    return Fraction(str(text).replace(" ", ""))


def parse_z_arg(text: str) -> Fraction:
    """z as p/q or a decimal; decimals are stored as the nearest rational within 1e-12."""
    s = str(text).strip()
    try:
        z = Fraction(s) if _RATIONAL_RE.match(s) else Fraction(s).limit_denominator(10**12)
    except ValueError as exc:
        raise InvalidParameter(f"cannot parse z = {text!r}") from exc
    return validate_z(z)


def workers_from_env(default: int = 1) -> int:
    raw = os.environ.get("CFL_WORKERS")
    if raw is None:
        return default
    try:
        n = int(raw)
    except ValueError as exc:
        raise InvalidParameter(f"CFL_WORKERS must be an integer, got {raw!r}") from exc
    if n < 1:
        raise InvalidParameter("CFL_WORKERS must be at least 1")
    return n


@dataclass
class ExperimentConfig:
    """Everything needed to re-run a command; round-trips through an INI file."""

    command: str
    family: str | None = None
    params: dict[str, str] = field(default_factory=dict)
    grid: str | None = None
    max_points: int = 10_000
    stencil: dict[str, str] = field(default_factory=dict)
    transform: str | None = None
    out: str | None = None
    seed: int = 0
    tol: float = 1e-6
    path: str = "auto"
    extra: dict[str, str] = field(default_factory=dict)

    def to_ini(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp["run"] = {"command": self.command, "seed": str(self.seed), "tol": repr(self.tol), "path": self.path}
        if self.family is not None:
            cp["solution"] = {"family": self.family, **{k: str(v) for k, v in sorted(self.params.items())}}
        if self.grid is not None:
            cp["grid"] = {"spec": self.grid, "max_points": str(self.max_points)}
        if self.stencil:
            cp["stencil"] = dict(sorted(self.stencil.items()))
        if self.transform is not None:
            cp["transform"] = {"spec": self.transform}
        if self.extra:
            cp["extra"] = dict(sorted(self.extra.items()))
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text: str) -> "ExperimentConfig":
        cp = configparser.ConfigParser(interpolation=None)
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise InvalidParameter(f"unreadable config: {exc}") from exc
        run = cp["run"] if cp.has_section("run") else {}
        cfg = cls(command=run.get("command", ""))
        cfg.seed = int(run.get("seed", 0))
        cfg.tol = float(run.get("tol", 1e-6))
        cfg.path = run.get("path", "auto")
        cfg.out = run.get("out")
        if cp.has_section("solution"):
            sec = dict(cp["solution"])
            cfg.family = sec.pop("family", None)
            cfg.params = sec
        if cp.has_section("grid"):
            cfg.grid = cp["grid"].get("spec")
            cfg.max_points = int(cp["grid"].get("max_points", 10_000))
        if cp.has_section("stencil"):
            cfg.stencil = dict(cp["stencil"])
        if cp.has_section("transform"):
            cfg.transform = cp["transform"].get("spec")
        if cp.has_section("extra"):
            cfg.extra = dict(cp["extra"])
        return cfg

    def to_dict(self) -> dict[str, Any]:
        return {
            "command": self.command,
            "family": self.family,
            "params": dict(sorted(self.params.items())),
            "grid": self.grid,
            "max_points": self.max_points,
            "stencil": dict(sorted(self.stencil.items())),
            "transform": self.transform,
            "seed": self.seed,
            "tol": self.tol,
            "path": self.path,
            "extra": dict(sorted(self.extra.items())),
        }


# --------------------------------------------------------------------------
# helpers


def _stencil(cfg: ExperimentConfig) -> StencilConfig:
    kinds = {"h_base": float, "h_gradient": float, "richardson": lambda s: str(s).lower() in ("1", "true", "yes"), "max_depth": int}
    kw = {}
    for key, value in cfg.stencil.items():
        if key not in kinds:
            raise InvalidParameter(f"unknown stencil setting {key!r}")
        kw[key] = kinds[key](value)
    return StencilConfig(**kw)


def _solution(cfg: ExperimentConfig):
    if cfg.family is None:
        raise InvalidParameter("--family is required")
    params = dict(cfg.params)
    if "ell" in params:
        params["ell"] = parse_ell_arg(params["ell"])
    if "z" in params:
        params["z"] = parse_z_arg(params["z"])
    return build_solution(cfg.family, params)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class _Writer:
    """Collects output files and writes the manifest last."""

    def __init__(self, out: str | None):
        self.dir = Path(out) if out else None
        self.files: list[Path] = []
        if self.dir is not None:
            self.dir.mkdir(parents=True, exist_ok=True)

    def write(self, name: str, text: str):
        if self.dir is None:
            return
        path = self.dir / name
        with open(path, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(text)
        self.files.append(path)

    def finish(self, cfg: ExperimentConfig):
        if self.dir is None:
            return
        self.write("config.ini", cfg.to_ini())
        manifest = {
            "tool": "confluid",
            "version": __version__,
            "config": cfg.to_dict(),
            "outputs": {p.name: _sha256(p) for p in sorted(self.files, key=lambda p: p.name)},
        }
        with open(self.dir / "manifest.json", "w", newline="\n", encoding="utf-8") as fh:
            fh.write(json.dumps(manifest, sort_keys=True, indent=2) + "\n")


def _field_csv(sol, t, x) -> str:
    rho = sol.density(t, x)
    v = sol.velocity(t, x)
    buf = io.StringIO()
    d = sol.dim
    buf.write(",".join(["t"] + [f"x{i + 1}" for i in range(d)] + ["rho"] + [f"v{i + 1}" for i in range(d)]) + "\n")
    for i in range(len(t)):
        row = [t[i], *x[i], rho[i], *v[i]]
        buf.write(",".join(repr(float(c)) for c in row) + "\n")
    return buf.getvalue()


_TRACE_RE = re.compile(r"^\s*b\s*=\s*\(([^)]*)\)\s*(?:\.\.\s*\(([^)]*)\)\s*)?$")


def parse_trace(text: str, count: int) -> list[np.ndarray]:
    """``"b=(0.1,0.1)..(0.1,1.0)"`` -> ``count`` evenly spaced points; a single ``b=(..)`` -> one."""
    m = _TRACE_RE.match(text)
    if not m:
        raise InvalidParameter(f"cannot parse trace spec {text!r}")
    first = np.array([float(v) for v in m.group(1).split(",")])
    if m.group(2) is None:
        return [first]
    last = np.array([float(v) for v in m.group(2).split(",")])
    if first.shape != last.shape:
        raise InvalidParameter("trace endpoints differ in dimension")
    if count < 2:
        raise InvalidParameter("a trace range needs at least two orbits")
    return [first + (last - first) * k / (count - 1) for k in range(count)]


# --------------------------------------------------------------------------
# commands


def cmd_catalog(args) -> int:
    manifest = catalog_manifest()
    if args.family:
        entries = [e for e in manifest if e["family"] == args.family]
        if not entries:
            raise InvalidParameter(f"unknown family {args.family!r}")
        manifest = entries
    if args.json:
        print(json.dumps(manifest, sort_keys=True, indent=2))
        return EXIT_OK
    for entry in manifest:
        print(f"{entry['family']}: {entry['summary']}")
        if args.family:
            print(f"  constructor: {entry['constructor']}")
            print(f"  domain: {entry['domain']}")
            print(f"  tags: {', '.join(entry['tags'])}")
            for name, schema in entry["parameters"].items():
                extra = "; ".join(f"{k}={v}" for k, v in schema.items() if k != "type")
                print(f"  {name} ({schema['type']}){': ' + extra if extra else ''}")
    return EXIT_OK


def _config_from_args(args, command: str) -> ExperimentConfig:
    if getattr(args, "config", None):
        cfg = ExperimentConfig.from_ini(Path(args.config).read_text())
        cfg.command = command
    else:
        cfg = ExperimentConfig(command=command)
    if getattr(args, "family", None):
        cfg.family = args.family
    for key in _PARAM_KEYS:
        value = getattr(args, f"p_{key}", None)
        if value is not None:
            cfg.params[key] = value
    for attr in ("grid", "transform", "out", "path"):
        value = getattr(args, attr, None)
        if value is not None:
            setattr(cfg, attr, value)
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "tol", None) is not None:
        cfg.tol = args.tol
    if getattr(args, "max_points", None) is not None:
        cfg.max_points = args.max_points
    for item in getattr(args, "stencil", None) or []:
        key, _, value = item.partition("=")
        cfg.stencil[key.strip()] = value.strip()
    return cfg


def cmd_verify(args) -> int:
    cfg = _config_from_args(args, "verify")
    sol = _solution(cfg)
    if cfg.grid is None:
        raise InvalidParameter("--grid is required")
    grid = Grid.parse(cfg.grid, sol.dim, cfg.max_points, cfg.seed)
    stencil = _stencil(cfg)
    reports = residual_suite(sol, grid, stencil, path=cfg.path, workers=args.workers)
    writer = _Writer(cfg.out)
    ok = True
    summary = {"tol": cfg.tol, "solution": sol.label, "equations": {}}
    for eq, rep in reports.items():
        if rep.t.size == 0:
            raise DomainError(f"no grid point inside the domain for {eq.value}")
        passed = rep.passed(cfg.tol)
        ok &= passed
        summary["equations"][eq.value] = {**rep.summary(), "passed": passed}
        print(f"{eq.value}: relative={rep.relative:.3e} max_abs={rep.max_abs:.3e} points={rep.t.size} path={rep.path} {'PASS' if passed else 'FAIL'}")
        writer.write(f"residuals_{eq.value}.csv", rep.to_csv())
    summary["passed"] = bool(ok)
    writer.write("report.json", json.dumps(summary, sort_keys=True, indent=2) + "\n")
    writer.finish(cfg)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_transform(args) -> int:
    cfg = _config_from_args(args, "transform")
    if cfg.transform is None:
        raise InvalidParameter("--transform is required")
    sol = _solution(cfg)
    g = parse_transform(cfg.transform)
    image = apply_transform(g, sol)
    writer = _Writer(cfg.out)
    status = EXIT_OK
    grid_spec = cfg.grid or "t=1:4:16," + ",".join(f"x{i + 1}=-2:2:9" for i in range(sol.dim))
    cfg.grid = grid_spec
    t, x = Grid.parse(grid_spec, sol.dim, cfg.max_points, cfg.seed).points()
    keep = image.domain.contains(t, x)
    t, x = t[keep], x[keep]
    writer.write("base_field.csv", _field_csv(sol, t, x))
    writer.write("image_field.csv", _field_csv(image, t, x))
    print(f"transformed {sol.label}: {len(t)} field samples")

    if args.check_closed_form:
        if not (isinstance(g, Sl2Element) and g.alpha == 1 and g.beta == 0 and g.delta == 1 and cfg.family == Family.GCA_SCALING.value):
            raise InvalidParameter("closed form available only for a special conformal element applied to gca-scaling")
        gamma = -g.gamma
        p = sol.params
        closed = conformal_deformed_solution(GcaScalingParams(ell=p["ell"], d=p["d"], a=p["a"], c=p["c"], t0=p.get("t0", 0.0)), gamma)
        dev = 0.0
        for f_img, f_ref in ((image.density, closed.density), (image.velocity, closed.velocity)):
            a, b = f_img(t, x), f_ref(t, x)
            dev = max(dev, float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1.0))))
        passed = dev <= args.closed_form_tol
        print(f"closed-form deviation: {dev:.3e} {'PASS' if passed else 'FAIL'}")
        writer.write("closed_form.json", json.dumps({"gamma": gamma, "max_deviation": dev, "tol": args.closed_form_tol, "passed": passed}, sort_keys=True, indent=2) + "\n")
        cfg.extra["closed_form_tol"] = repr(args.closed_form_tol)
        if not passed:
            status = EXIT_FAIL

    if args.trace:
        starts = parse_trace(args.trace, args.trace_count)
        orbits = trace_orbits(image, starts, (args.trace_from, args.trace_to), args.h, strict=False, workers=args.workers)
        for k, orbit in enumerate(orbits):
            rows = io.StringIO()
            rows.write(",".join(orbit.header()) + "\n")
            for r in orbit.rows():
                rows.write(",".join(repr(v) for v in r) + "\n")
            writer.write(f"orbit_{k:02d}.csv", rows.getvalue())
            if not orbit.complete:
                print(f"orbit {k} left the domain at t={orbit.t[0] if args.trace_to < args.trace_from else orbit.t[-1]}")
        print(f"traced {len(orbits)} orbits with h={args.h}")
        cfg.extra.update({"trace": args.trace, "trace_count": str(args.trace_count), "trace_from": repr(args.trace_from), "trace_to": repr(args.trace_to), "h": repr(args.h)})
    writer.finish(cfg)
    return status


def cmd_figures(args) -> int:
    cfg = ExperimentConfig(command="figures", out=args.out, extra={"which": args.which})
    writer = _Writer(args.out)
    which = FIGURES if args.which == "all" else (args.which,)
    for name in which:
        kw = {"workers": args.workers} if name in ("fig3", "fig4", "fig5") else {}
        if name == "fig4":
            kw["h"] = args.h
            cfg.extra["h"] = repr(args.h)
        data = figure_data(name, **kw)
        for table in data.tables:
            writer.write(f"{table.name}.csv", table.to_csv())
        writer.write(f"{name}_summary.json", json.dumps(data.summary, sort_keys=True, indent=2) + "\n")
        print(f"{name}: {len(data.tables)} tables {json.dumps(data.summary, sort_keys=True)}")
    writer.finish(cfg)
    return EXIT_OK


def cmd_algebra(args) -> int:
    if args.family == "gca":
        if args.ell is None:
            raise InvalidParameter("--ell is required for the gca algebra")
        param = parse_ell_arg(args.ell)
    else:
        if args.z is None:
            raise InvalidParameter("--z is required for the lifshitz algebra")
        param = parse_z_arg(args.z)
    report = verify_structure_relations(args.family, param, args.d, jacobi=not args.no_jacobi)
    if args.json:
        print(report.to_json())
    else:
        bad = report.mismatches()
        print(f"{args.family} parameter={param} d={args.d}: {len(report.relations)} brackets, "
              f"{len(bad)} mismatches, {report.jacobi_checked} Jacobi triples, {len(report.jacobi_failures)} failures")
        for item in bad[:10]:
            print(f"  mismatch: {item}")
    return EXIT_OK if report.ok else EXIT_FAIL


# --------------------------------------------------------------------------
# parser


def _add_solution_args(p: argparse.ArgumentParser):
    p.add_argument("--config", help="INI file with [run], [solution], [grid], [stencil], [transform] sections")
    p.add_argument("--family", help="catalog family name (see `catalog`)")
    for key in _PARAM_KEYS:
        p.add_argument(f"--{key.replace('_', '-')}", dest=f"p_{key}", help=f"family parameter {key}")
    p.add_argument("--grid", help='e.g. "t=2:6:50,x=-10:10:100"')
    p.add_argument("--max-points", type=int, help="cap on sampled grid points (seeded subsample)")
    p.add_argument("--seed", type=int, help="seed for grid subsampling")
    p.add_argument("--stencil", action="append", metavar="KEY=VALUE", help="finite-difference setting, repeatable")
    p.add_argument("--out", help="directory for reports, CSVs and the manifest")
    p.add_argument("--workers", type=int, default=1, help="worker threads (CFL_WORKERS overrides)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="confluid", description="Exact fluid solutions with conformal Galilei and Lifshitz symmetry.")
    parser.add_argument("--version", action="version", version=f"confluid {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("catalog", help="list solution families")
    p.add_argument("--family", help="show one family's parameter schema")
    p.add_argument("--json", action="store_true", help="machine-readable manifest")
    p.set_defaults(func=cmd_catalog)

    p = sub.add_parser("verify", help="residuals of the governing equations on a grid")
    _add_solution_args(p)
    p.add_argument("--tol", type=float, help="pass threshold on relative residual norms (default 1e-6)")
    p.add_argument("--path", choices=["auto", "analytic", "fd"], help="material-derivative evaluation path")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("transform", help="apply a symmetry transformation to a solution")
    _add_solution_args(p)
    p.add_argument("--transform", help='JSON, e.g. \'{"sl2": {"special_conformal": 0.3}}\' or \'{"accel": [[0,1],[1,0]]}\'')
    p.add_argument("--check-closed-form", action="store_true", help="compare a special conformal image with its closed form")
    p.add_argument("--closed-form-tol", type=float, default=1e-12)
    p.add_argument("--trace", help='orbit start points at --trace-from, e.g. "b=(0.1,0.1)..(0.1,1.0)"')
    p.add_argument("--trace-count", type=int, default=10)
    p.add_argument("--trace-from", type=float, default=1.0)
    p.add_argument("--trace-to", type=float, default=2.0)
    p.add_argument("--h", type=float, default=1e-3, help="fixed RK4 step")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("figures", help="regenerate the data behind the reference plots")
    p.add_argument("which", choices=list(FIGURES) + ["all"])
    p.add_argument("--out", default="figures-out")
    p.add_argument("--h", type=float, default=1e-3, help="RK4 step for fig4 orbits")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_figures)

    p = sub.add_parser("algebra", help="check the structure relations of a symmetry algebra")
    p.add_argument("family", choices=["gca", "lifshitz"])
    p.add_argument("--ell", help="integer or p/q (gca)")
    p.add_argument("--z", help="p/q or decimal > 1/2 (lifshitz)")
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--no-jacobi", action="store_true", help="skip the Jacobi identity")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_algebra)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if hasattr(args, "workers"):
            args.workers = workers_from_env(args.workers)
        return args.func(args)
    except (ConfluidError, ValueError, configparser.Error, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
