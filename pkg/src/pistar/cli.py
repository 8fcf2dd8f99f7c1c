"""Command-line frontend: ``pistar {spectrum,sweep-beta,surface,threshold,field,validate}``.

Exit codes: 0 success, 1 failed validation, 2 configuration error,
3 solver failure.  Sweeps and surfaces fan out over ``--jobs`` worker
processes (default ``$PISTAR_JOBS`` or 1); rows are always collected in
input order, so outputs do not depend on the worker count.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import specfun
from .bands import PolymerModel, dz_deps, polymer_threshold
from .checks import run_checks
from .config import RunConfig, load_config, parse_angle
from .errors import ConfigError, GeometryError, PistarError
from .field import GridSpec, evaluate_field, export_field, nodal_segments
from .geometry import StarGeometry, build_star
from .krein import SpectralProblem, find_eigenvalues, ground_state, solve_star

__all__ = ["main", "build_parser"]

EXIT_OK, EXIT_VALIDATE, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3


class SolverFailure(Exception):
    pass


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def _write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else _fmt(v) for v in row])


def _geometry_dict(g: StarGeometry) -> dict:
    return {
        "n_arms": g.n_arms,
        "angle_increments": list(g.angle_increments),
        "spacing": g.spacing,
        "points_per_arm": g.points_per_arm,
    }


def _output_dir(cfg: RunConfig | None, args) -> Path:
    out = Path(args.out) if args.out else (cfg.output if cfg is not None else Path("."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _map(func, items, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [func(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, items))


# ---------------------------------------------------------------------------
# subcommands


def cmd_spectrum(cfg: RunConfig, out: Path) -> dict:
    s = cfg.solver
    spec = solve_star(
        cfg.geometry,
        cfg.alpha,
        window=s.window,
        tol=s.tol,
        grid_size=s.grid_size,
        convergence_drop=s.convergence_drop,
        convergence_tol=s.convergence_tol,
    )
    report = {
        "alpha": cfg.alpha,
        "geometry": _geometry_dict(cfg.geometry),
        "threshold": spec.threshold_ref,
        "eigenvalues": list(spec.eigenvalues),
        "multiplicities": list(spec.multiplicities),
        "below_threshold": spec.below_threshold,
        "converged": spec.converged,
        "residuals": list(spec.residuals),
        "sites_digest": build_star(cfg.geometry).digest(),
    }
    (out / "spectrum.json").write_text(json.dumps(report, indent=2) + "\n")
    rows = [
        (i, z, m, b, c)
        for i, (z, m, b, c) in enumerate(zip(spec.eigenvalues, spec.multiplicities, spec.below_threshold, spec.converged))
    ]
    _write_csv(out / "spectrum.csv", ["index", "z", "multiplicity", "below_threshold", "converged"], rows)
    print(f"{len(spec)} distinct eigenvalues, {spec.count_below(spec.threshold_ref)} states below E0 = {spec.threshold_ref:.12g}")
    return report


def _sweep_row(task):
    beta, geom_args, alpha, e0, solver = task
    n_arms, spacing, m = geom_args
    try:
        geom = StarGeometry(n_arms, (beta,), spacing, m)
        spec = find_eigenvalues(
            SpectralProblem(build_star(geom), alpha), solver.window, solver.tol, solver.grid_size, threshold_ref=e0
        )
    except (PistarError, ValueError) as exc:
        return [(beta, None, None, None, f"error: {exc}")]
    e = spec.energies
    if len(e) == 0:
        return [(beta, None, None, None, "no eigenvalues")]
    return [(beta, k, float(z), bool(z < e0), "ok") for k, z in enumerate(e)]


def cmd_sweep_beta(cfg: RunConfig, out: Path, jobs: int, betas=None) -> list:
    g = cfg.geometry
    if g.n_arms != 2:
        raise ConfigError(f"sweep-beta needs a two-arm geometry, got n_arms = {g.n_arms}")
    betas = list(betas if betas is not None else (cfg.sweep_betas or g.angle_increments))
    e0 = polymer_threshold(PolymerModel(g.spacing, cfg.alpha))
    tasks = [(b, (g.n_arms, g.spacing, g.points_per_arm), cfg.alpha, e0, cfg.solver) for b in betas]
    rows = [r for chunk in _map(_sweep_row, tasks, jobs) for r in chunk]
    _write_csv(out / "sweep.csv", ["beta", "k", "z_k", "below_threshold", "status"], rows)
    failed = sum(1 for r in rows if r[4].startswith("error"))
    print(f"{len(betas)} angles, {len(rows)} rows, {failed} failed")
    return rows


def _surface_row(task):
    b1, b2, spacing, m, alpha, tol = task
    try:
        geom = StarGeometry(3, (b1, b2), spacing, m)
        z = ground_state(SpectralProblem(build_star(geom), alpha), tol=tol)
    except (PistarError, ValueError) as exc:
        return (b1, b2, None, f"error: {exc}")
    return (b1, b2, z, "ok" if z is not None else "unbound")


def cmd_surface(cfg: RunConfig, out: Path, jobs: int) -> list:
    g = cfg.geometry
    if g.n_arms != 3:
        raise ConfigError(f"surface needs a three-arm geometry, got n_arms = {g.n_arms}")
    b1 = cfg.surface_beta1 or (g.angle_increments[0],)
    b2 = cfg.surface_beta2 or (g.angle_increments[1],)
    tasks = [(x, y, g.spacing, g.points_per_arm, cfg.alpha, cfg.solver.tol) for x in b1 for y in b2]
    rows = _map(_surface_row, tasks, jobs)
    _write_csv(out / "surface.csv", ["beta1", "beta2", "z_ground", "status"], rows)
    ok = [r for r in rows if r[2] is not None]
    if ok:
        best = max(ok, key=lambda r: r[2])
        print(f"{len(rows)} grid points; weakest binding z = {best[2]:.12g} at beta = ({best[0]:.6g}, {best[1]:.6g})")
    return rows


def cmd_threshold(alpha: float, spacing: float, out: Path) -> dict:
    pm = PolymerModel(spacing, alpha)
    e0 = polymer_threshold(pm)
    report = {"alpha": alpha, "spacing": spacing, "E0": e0, "kappa0": math.sqrt(-e0), "dz_deps": dz_deps(pm)}
    (out / "threshold.json").write_text(json.dumps(report, indent=2) + "\n")
    print(f"E0 = {_fmt(e0)}")
    print(f"dz/deps = {_fmt(report['dz_deps'])}")
    return report


def cmd_field(cfg: RunConfig, out: Path, state: int | None = None) -> dict:
    fc = cfg.field
    state = fc.state if state is None else state
    prob = SpectralProblem(build_star(cfg.geometry), cfg.alpha)
    spec = find_eigenvalues(prob, cfg.solver.window, cfg.solver.tol, cfg.solver.grid_size)
    states = spec.states()
    if state >= len(states):
        raise SolverFailure(f"state {state} requested but only {len(states)} eigenvalues were found")
    z0, d = states[state]
    sites = prob.points.sites
    auto = GridSpec.around(sites, math.sqrt(-z0), cfg.geometry.spacing, fc.nx, fc.ny)
    grid = GridSpec(fc.x_range or auto.x_range, fc.y_range or auto.y_range, fc.nx, fc.ny)
    f = evaluate_field(prob, z0, d, grid)
    f.metadata.update(
        {
            "z0": z0,
            "alpha": cfg.alpha,
            "state": state,
            "geometry": _geometry_dict(cfg.geometry),
            "geometry_hash": prob.points.digest(),
        }
    )
    lines = nodal_segments(f)
    for fmt in fc.formats:
        export_field(f, fmt, out / f"field.{fmt}", lines)
    closed = sum(ln.closed for ln in lines)
    print(f"state {state}: z0 = {_fmt(z0)}, {len(lines)} nodal lines ({closed} closed)")
    return f.metadata


def cmd_validate(perturb_gamma: float = 0.0) -> int:
    if perturb_gamma:
        with specfun.perturbed_constants(perturb_gamma):
            results = run_checks()
    else:
        results = run_checks()
    failed = [r for r in results if not r[1]]
    if failed:
        print(f"validation failed: {failed[0][0]} ({len(failed)} of {len(results)} checks failed)", file=sys.stderr)
        return EXIT_VALIDATE
    print(f"all {len(results)} checks passed")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def _default_jobs() -> int:
    raw = os.environ.get("PISTAR_JOBS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="TOML run configuration")
    common.add_argument("--out", metavar="DIR", help="output directory (overrides the config)")
    common.add_argument("--jobs", type=int, default=None, metavar="N", help="worker processes (default $PISTAR_JOBS or 1)")

    parser = argparse.ArgumentParser(prog="pistar", description="Bound states of point interactions on star graphs.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common], help="eigenvalues of one star, with threshold and convergence flags")
    p = sub.add_parser("sweep-beta", parents=[common], help="eigenvalues of a two-arm star over a list of angles")
    p.add_argument("--betas", nargs="+", help="angles overriding [sweep].betas, e.g. pi/40 pi/20")
    sub.add_parser("surface", parents=[common], help="ground state of a three-arm star over an angle grid")
    p = sub.add_parser("threshold", parents=[common], help="band bottom E0 of the straight chain")
    p.add_argument("--alpha", type=float, help="coupling (default from config, else 0)")
    p.add_argument("--spacing", type=float, help="site spacing (default from config, else 1)")
    p = sub.add_parser("field", parents=[common], help="export one eigenfunction as csv/json/svg")
    p.add_argument("--state", type=int, help="index into the multiplicity-expanded eigenvalue list")
    p = sub.add_parser("validate", parents=[common], help="run the built-in oracle and property checks")
    p.add_argument("--perturb-gamma", type=float, default=0.0, help=argparse.SUPPRESS)
    return parser


def _run(args) -> int:
    if args.command == "validate":
        return cmd_validate(args.perturb_gamma)

    cfg = load_config(args.config) if args.config else None
    if args.command == "threshold":
        alpha = args.alpha if args.alpha is not None else (cfg.alpha if cfg else 0.0)
        spacing = args.spacing if args.spacing is not None else (cfg.geometry.spacing if cfg else 1.0)
        if not spacing > 0:
            raise ConfigError(f"spacing must be positive, got {spacing!r}")
        cmd_threshold(alpha, spacing, _output_dir(cfg, args))
        return EXIT_OK

    if cfg is None:
        raise ConfigError(f"{args.command} needs --config PATH")
    jobs = args.jobs if args.jobs is not None else _default_jobs()
    if jobs < 1:
        raise ConfigError(f"--jobs must be >= 1, got {jobs}")
    out = _output_dir(cfg, args)
    if args.command == "spectrum":
        cmd_spectrum(cfg, out)
    elif args.command == "sweep-beta":
        betas = [parse_angle(b, "--betas") for b in args.betas] if args.betas else None
        cmd_sweep_beta(cfg, out, jobs, betas)
    elif args.command == "surface":
        cmd_surface(cfg, out, jobs)
    elif args.command == "field":
        cmd_field(cfg, out, args.state)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except (ConfigError, GeometryError) as exc:
        print(f"pistar: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PistarError, SolverFailure, ValueError, FloatingPointError) as exc:
        print(f"pistar: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"pistar: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
