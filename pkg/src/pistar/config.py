"""Run configuration read from a TOML file.

A minimal file::

    alpha = 0.0
    output = "out"

    [geometry]
    n_arms = 2
    angles = ["pi/20"]
    angle_mode = "increments"   # or "cumulative"
    spacing = 1.0
    points_per_arm = 20

Optional tables ``[solver]``, ``[sweep]``, ``[surface]`` and ``[field]``
are described on :class:`RunConfig`.  Angles may be numbers or simple
arithmetic strings in ``pi`` such as ``"2*pi/3"``.
"""

from __future__ import annotations

import ast
import math
import operator
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import ConfigError, GeometryError
from .geometry import StarGeometry

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["RunConfig", "SolverConfig", "FieldConfig", "load_config", "parse_config", "parse_angle"]

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNOPS = {ast.USub: operator.neg, ast.UAdd: operator.pos}


def _eval_node(node):
    if isinstance(node, ast.Expression):
        return _eval_node(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        return float(node.value)
    if isinstance(node, ast.Name) and node.id == "pi":
        return math.pi
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval_node(node.left), _eval_node(node.right))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
        return _UNOPS[type(node.op)](_eval_node(node.operand))
    raise ValueError("only numbers, pi and + - * / ** are allowed")


def parse_angle(value, where: str = "angle") -> float:
    """A float from a number or an expression like ``"pi/20"``."""
    if isinstance(value, bool):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            out = _eval_node(ast.parse(value.strip(), mode="eval"))
        except (SyntaxError, ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"{where}: cannot parse {value!r} ({exc})") from None
        if not math.isfinite(out):
            raise ConfigError(f"{where}: {value!r} is not finite")
        return out
    raise ConfigError(f"{where}: expected a number or expression, got {type(value).__name__}")


def _angle_list(value, where: str) -> list[float]:
    if isinstance(value, dict):
        # {start, stop, num} inclusive linear grid
        for key in ("start", "stop", "num"):
            if key not in value:
                raise ConfigError(f"{where}: range needs start, stop and num")
        a, b = parse_angle(value["start"], where), parse_angle(value["stop"], where)
        n = value["num"]
        if not isinstance(n, int) or n < 1:
            raise ConfigError(f"{where}.num must be a positive integer")
        if n == 1:
            return [a]
        return [a + (b - a) * k / (n - 1) for k in range(n)]
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{where}: expected a nonempty list of angles")
    return [parse_angle(v, f"{where}[{k}]") for k, v in enumerate(value)]


def _number(table: dict, key: str, default, where: str, *, positive: bool = False, integer: bool = False):
    if key not in table:
        return default
    v = table[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}.{key}: expected a number, got {v!r}")
    if integer and int(v) != v:
        raise ConfigError(f"{where}.{key}: expected an integer, got {v!r}")
    if not math.isfinite(v):
        raise ConfigError(f"{where}.{key}: must be finite")
    if positive and not v > 0:
        raise ConfigError(f"{where}.{key}: must be positive, got {v!r}")
    return int(v) if integer else float(v)


def _check_keys(table: dict, allowed: set[str], where: str) -> None:
    extra = sorted(set(table) - allowed)
    if extra:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(extra)}")


@dataclass(frozen=True)
class SolverConfig:
    """Options forwarded to the secular-equation solver.

    ``z_lo``/``z_hi`` override the search window; ``convergence_drop`` is
    the number of sites per arm removed for the convergence reference run.
    """

    z_lo: float | None = None
    z_hi: float | None = None
    tol: float = 1e-12
    grid_size: int = 200
    convergence_drop: int = 5
    convergence_tol: float = 1e-4

    @property
    def window(self) -> tuple[float, float] | None:
        if self.z_lo is None and self.z_hi is None:
            return None
        return (self.z_lo if self.z_lo is not None else -1e8, self.z_hi if self.z_hi is not None else -1e-10)


@dataclass(frozen=True)
class FieldConfig:
    """``state`` indexes the multiplicity-expanded sorted eigenvalue list."""

    state: int = 0
    nx: int = 400
    ny: int = 400
    x_range: tuple[float, float] | None = None
    y_range: tuple[float, float] | None = None
    formats: tuple[str, ...] = ("csv", "json", "svg")


@dataclass(frozen=True)
class RunConfig:
    geometry: StarGeometry
    alpha: float = 0.0
    solver: SolverConfig = field(default_factory=SolverConfig)
    output: Path = Path("out")
    sweep_betas: tuple[float, ...] = ()
    surface_beta1: tuple[float, ...] = ()
    surface_beta2: tuple[float, ...] = ()
    field: FieldConfig = field(default_factory=FieldConfig)

    def with_increments(self, increments) -> StarGeometry:
        g = self.geometry
        return StarGeometry(g.n_arms, tuple(increments), g.spacing, g.points_per_arm)


def _parse_geometry(tab: Any) -> StarGeometry:
    if not isinstance(tab, dict):
        raise ConfigError("missing [geometry] table")
    _check_keys(tab, {"n_arms", "angles", "angle_mode", "spacing", "points_per_arm"}, "geometry")
    for key in ("n_arms", "angles", "points_per_arm"):
        if key not in tab:
            raise ConfigError(f"geometry.{key} is required")
    n_arms = _number(tab, "n_arms", None, "geometry", integer=True)
    m = _number(tab, "points_per_arm", None, "geometry", integer=True)
    spacing = _number(tab, "spacing", 1.0, "geometry", positive=True)
    angles = _angle_list(tab["angles"], "geometry.angles")
    mode = tab.get("angle_mode", "increments")
    try:
        if mode == "increments":
            return StarGeometry(n_arms, tuple(angles), spacing, m)
        if mode == "cumulative":
            geom = StarGeometry.from_directions(angles, spacing, m)
            if geom.n_arms != n_arms:
                raise GeometryError(f"n_arms = {n_arms} but {len(angles)} cumulative directions give {geom.n_arms} arms")
            return geom
    except GeometryError as exc:
        raise ConfigError(f"geometry: {exc}") from None
    raise ConfigError(f"geometry.angle_mode must be 'increments' or 'cumulative', got {mode!r}")


def _parse_solver(tab: dict) -> SolverConfig:
    _check_keys(tab, {"z_lo", "z_hi", "tol", "grid_size", "convergence_drop", "convergence_tol"}, "solver")
    z_lo = _number(tab, "z_lo", None, "solver")
    z_hi = _number(tab, "z_hi", None, "solver")
    cfg = SolverConfig(
        z_lo=z_lo,
        z_hi=z_hi,
        tol=_number(tab, "tol", 1e-12, "solver", positive=True),
        grid_size=_number(tab, "grid_size", 200, "solver", positive=True, integer=True),
        convergence_drop=_number(tab, "convergence_drop", 5, "solver", integer=True),
        convergence_tol=_number(tab, "convergence_tol", 1e-4, "solver", positive=True),
    )
    w = cfg.window
    if w is not None and not w[0] < w[1] < 0:
        raise ConfigError(f"solver window must satisfy z_lo < z_hi < 0, got {w!r}")
    if cfg.grid_size < 2:
        raise ConfigError("solver.grid_size must be at least 2")
    if cfg.convergence_drop < 0:
        raise ConfigError("solver.convergence_drop must be >= 0")
    return cfg


def _parse_range(v, where: str) -> tuple[float, float] | None:
    if v is None:
        return None
    if not isinstance(v, list) or len(v) != 2:
        raise ConfigError(f"{where}: expected [lo, hi]")
    lo, hi = (parse_angle(t, where) for t in v)
    if not lo < hi:
        raise ConfigError(f"{where}: need lo < hi")
    return lo, hi


def _parse_field(tab: dict) -> FieldConfig:
    _check_keys(tab, {"state", "nx", "ny", "x_range", "y_range", "formats"}, "field")
    formats = tab.get("formats", ["csv", "json", "svg"])
    if isinstance(formats, str):
        formats = [formats]
    bad = [f for f in formats if f not in ("csv", "json", "svg")]
    if bad or not formats:
        raise ConfigError(f"field.formats: unsupported {bad or formats!r}")
    state = _number(tab, "state", 0, "field", integer=True)
    if state < 0:
        raise ConfigError("field.state must be >= 0")
    nx = _number(tab, "nx", 400, "field", integer=True)
    ny = _number(tab, "ny", 400, "field", integer=True)
    if nx < 2 or ny < 2:
        raise ConfigError("field.nx and field.ny must be at least 2")
    return FieldConfig(
        state, nx, ny, _parse_range(tab.get("x_range"), "field.x_range"), _parse_range(tab.get("y_range"), "field.y_range"), tuple(formats)
    )


def parse_config(data: dict, base: Path | None = None) -> RunConfig:
    """Validate a parsed TOML document; relative output paths resolve against ``base``."""
    _check_keys(data, {"alpha", "output", "geometry", "solver", "sweep", "surface", "field"}, "config")
    geom = _parse_geometry(data.get("geometry"))
    alpha = _number(data, "alpha", 0.0, "config")
    out = Path(data.get("output", "out"))
    if base is not None and not out.is_absolute():
        out = base / out
    solver = _parse_solver(data.get("solver", {}))
    sweep = data.get("sweep", {})
    _check_keys(sweep, {"betas"}, "sweep")
    surface = data.get("surface", {})
    _check_keys(surface, {"beta1", "beta2"}, "surface")
    return RunConfig(
        geometry=geom,
        alpha=alpha,
        solver=solver,
        output=out,
        sweep_betas=tuple(_angle_list(sweep["betas"], "sweep.betas")) if "betas" in sweep else (),
        surface_beta1=tuple(_angle_list(surface["beta1"], "surface.beta1")) if "beta1" in surface else (),
        surface_beta2=tuple(_angle_list(surface["beta2"], "surface.beta2")) if "beta2" in surface else (),
        field=_parse_field(data.get("field", {})),
    )


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: invalid TOML ({exc})") from None
    return parse_config(data)
