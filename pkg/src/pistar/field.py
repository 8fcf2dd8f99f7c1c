"""Eigenfunctions on rectangular grids, nodal lines and file exports.

An eigenfunction at ``z0 = -kappa0**2`` with null vector ``d`` of the
secular matrix is ``phi(x) = sum_j d_j K0(kappa0 |x - a_j|) / (2 pi)``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from skimage import measure

from . import specfun
from .errors import DimensionError, DomainError
from .krein import SpectralProblem

__all__ = [
    "GridSpec",
    "EigenfunctionField",
    "Polyline",
    "evaluate_field",
    "evaluate_at",
    "nodal_segments",
    "export_field",
    "read_field_csv",
    "arm_decay_slope",
    "arm_decay_window",
    "touches_boundary",
    "MAX_NODES",
]

TWO_PI = 2.0 * math.pi
MAX_NODES = 10**8
EXCLUDE_RTOL = 1e-6
# half-decade magnitude levels for the SVG rendering
LOG_LEVELS = 13


@dataclass(frozen=True)
class GridSpec:
    x_range: tuple[float, float]
    y_range: tuple[float, float]
    nx: int = 400
    ny: int = 400

    def __post_init__(self):
        for name, (a, b) in (("x_range", self.x_range), ("y_range", self.y_range)):
            if not a < b:
                raise DomainError(f"{name} must be a nondegenerate interval, got {(a, b)!r}")
        if self.nx < 2 or self.ny < 2:
            raise DomainError("nx and ny must be at least 2")
        if self.nx * self.ny > MAX_NODES:
            raise DomainError(f"grid of {self.nx}x{self.ny} nodes exceeds the {MAX_NODES} guard")

    @classmethod
    def around(cls, sites: np.ndarray, kappa0: float, spacing: float = 1.0, nx: int = 400, ny: int = 400):
        """Bounding box of the sites padded by ``max(2/kappa0, 2*spacing)``."""
        pad = max(2.0 / kappa0, 2.0 * spacing)
        lo = sites.min(axis=0) - pad
        hi = sites.max(axis=0) + pad
        return cls((float(lo[0]), float(hi[0])), (float(lo[1]), float(hi[1])), nx, ny)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(*self.x_range, self.nx)

    @property
    def y(self) -> np.ndarray:
        return np.linspace(*self.y_range, self.ny)

    @property
    def cell(self) -> tuple[float, float]:
        return ((self.x_range[1] - self.x_range[0]) / (self.nx - 1), (self.y_range[1] - self.y_range[0]) / (self.ny - 1))

    def to_dict(self) -> dict:
        return {"x_range": list(self.x_range), "y_range": list(self.y_range), "nx": self.nx, "ny": self.ny}


@dataclass(frozen=True)
class Polyline:
    points: np.ndarray  # shape (n, 2), physical coordinates
    closed: bool


@dataclass
class EigenfunctionField:
    """Samples ``values[i, j] = phi(x[i], y[j])``; excluded nodes hold NaN."""

    grid: GridSpec
    values: np.ndarray
    eigenvalue: float
    coefficients: np.ndarray
    excluded: list[tuple[int, int]] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)


def evaluate_at(prob: SpectralProblem, z0: float, d: Sequence[float], points: np.ndarray) -> np.ndarray:
    """``phi`` at arbitrary points, shape ``(n, 2)``; NaN within the exclusion radius."""
    d = np.asarray(d, dtype=float)
    sites = prob.points.sites
    if d.shape != (len(sites),):
        raise DimensionError(f"coefficient vector has shape {d.shape}, expected ({len(sites)},)")
    if not z0 < 0:
        raise DomainError(f"eigenvalue must be negative, got {z0!r}")
    kappa = math.sqrt(-z0)
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    out = np.zeros(len(pts))
    near = np.zeros(len(pts), dtype=bool)
    radius = EXCLUDE_RTOL * prob.points.scale
    for dj, (ax, ay) in zip(d, sites):
        r = np.hypot(pts[:, 0] - ax, pts[:, 1] - ay)
        hit = r <= radius
        near |= hit
        r[hit] = radius
        out += dj * specfun.bessel_k0(kappa * r)
    out /= TWO_PI
    out[near] = np.nan
    return out


def evaluate_field(prob: SpectralProblem, z0: float, d: Sequence[float], grid: GridSpec) -> EigenfunctionField:
    xx, yy = np.meshgrid(grid.x, grid.y, indexing="ij")
    pts = np.column_stack([xx.ravel(), yy.ravel()])
    values = evaluate_at(prob, z0, d, pts).reshape(grid.nx, grid.ny)
    excluded = [tuple(int(v) for v in ij) for ij in np.argwhere(np.isnan(values))]
    return EigenfunctionField(grid, values, float(z0), np.asarray(d, dtype=float).copy(), excluded)


def _filled(values: np.ndarray) -> np.ndarray:
    """Replace NaN nodes by the mean of their finite 8-neighbours."""
    out = values.copy()
    for i, j in np.argwhere(np.isnan(values)):
        block = values[max(i - 1, 0) : i + 2, max(j - 1, 0) : j + 2]
        finite = block[np.isfinite(block)]
        out[i, j] = finite.mean() if finite.size else 0.0
    return out


def _index_to_xy(grid: GridSpec, contour: np.ndarray) -> np.ndarray:
    dx, dy = grid.cell
    return np.column_stack([grid.x_range[0] + contour[:, 0] * dx, grid.y_range[0] + contour[:, 1] * dy])


def nodal_segments(f: EigenfunctionField) -> list[Polyline]:
    """Zero-level polylines of the field (marching squares)."""
    values = _filled(f.values)
    if np.all(values > 0) or np.all(values < 0):
        return []
    lines = []
    for contour in measure.find_contours(values, 0.0):
        closed = len(contour) > 2 and np.allclose(contour[0], contour[-1])
        lines.append(Polyline(_index_to_xy(f.grid, contour), bool(closed)))
    return lines


def touches_boundary(line: Polyline, grid: GridSpec) -> bool:
    dx, dy = grid.cell
    p = line.points
    return bool(
        np.any(p[:, 0] <= grid.x_range[0] + 0.5 * dx)
        or np.any(p[:, 0] >= grid.x_range[1] - 0.5 * dx)
        or np.any(p[:, 1] <= grid.y_range[0] + 0.5 * dy)
        or np.any(p[:, 1] >= grid.y_range[1] - 0.5 * dy)
    )


def arm_decay_window(points_per_arm: int, spacing: float) -> tuple[float, float]:
    """Radial window from the last quarter of an arm to ``3 l`` past its tip."""
    return 0.75 * points_per_arm * spacing, (points_per_arm + 3) * spacing


def arm_decay_slope(
    prob: SpectralProblem,
    z0: float,
    d: Sequence[float],
    direction: float,
    r_start: float,
    r_end: float,
    n: int = 64,
) -> float:
    """Least-squares slope of ``log|phi|`` against distance along a ray from the origin."""
    r = np.linspace(r_start, r_end, n)
    pts = np.column_stack([r * math.cos(direction), r * math.sin(direction)])
    vals = np.abs(evaluate_at(prob, z0, d, pts))
    ok = np.isfinite(vals) & (vals > 0)
    slope, _ = np.polyfit(r[ok], np.log(vals[ok]), 1)
    return float(slope)


# ---------------------------------------------------------------------------
# export


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _write_csv(f: EigenfunctionField, path: Path) -> None:
    x, y = f.grid.x, f.grid.y
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "value"])
        for i in range(f.grid.nx):
            for j in range(f.grid.ny):
                w.writerow([_fmt(x[i]), _fmt(y[j]), _fmt(f.values[i, j])])


def read_field_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Columns ``x, y, value`` of an exported CSV as float arrays."""
    data = np.genfromtxt(path, delimiter=",", names=True)
    return data["x"], data["y"], data["value"]


def _json_payload(f: EigenfunctionField, lines: list[Polyline]) -> dict:
    return {
        "grid": f.grid.to_dict(),
        "eigenvalue": f.eigenvalue,
        "coefficients": f.coefficients.tolist(),
        "values": [[None if math.isnan(v) else v for v in row] for row in f.values.tolist()],
        "excluded": [list(ij) for ij in f.excluded],
        "nodal_lines": [{"closed": ln.closed, "points": ln.points.tolist()} for ln in lines],
        "metadata": f.metadata,
    }


def _band_colour(k: int) -> str:
    # dark (k = 0, near the maximum) to pale
    t = k / (LOG_LEVELS - 1)
    r, g, b = (int(round(30 + 220 * t)), int(round(60 + 190 * t)), int(round(140 + 110 * t)))
    return f"#{r:02x}{g:02x}{b:02x}"


def _write_svg(f: EigenfunctionField, lines: list[Polyline], path: Path, max_cells: int = 120) -> None:
    g = f.grid
    width = 600.0
    height = width * (g.y_range[1] - g.y_range[0]) / (g.x_range[1] - g.x_range[0])

    def sx(x):
        return (x - g.x_range[0]) / (g.x_range[1] - g.x_range[0]) * width

    def sy(y):
        return height - (y - g.y_range[0]) / (g.y_range[1] - g.y_range[0]) * height

    mag = np.abs(_filled(f.values))
    top = float(np.nanmax(mag)) if np.any(mag > 0) else 1.0
    # level k <=> |phi| in (top 10^{-(k+1)/2}, top 10^{-k/2}]
    with np.errstate(divide="ignore"):
        band = np.floor(-2.0 * np.log10(np.maximum(mag, 1e-300) / top))
    band = np.clip(band, 0, LOG_LEVELS - 1).astype(int)
    step_i = max(1, math.ceil(g.nx / max_cells))
    step_j = max(1, math.ceil(g.ny / max_cells))
    xs, ys = g.x, g.y
    dx, dy = g.cell
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" height="{height:.0f}" '
        f'viewBox="0 0 {width:.3f} {height:.3f}">',
        f"<title>eigenfunction z0={_fmt(f.eigenvalue)}</title>",
        '<g class="heatmap" shape-rendering="crispEdges">',
    ]
    for i in range(0, g.nx, step_i):
        x0, x1 = sx(xs[i] - 0.5 * dx), sx(xs[min(i + step_i, g.nx) - 1] + 0.5 * dx)
        j = 0
        while j < g.ny:
            k = band[i, j]
            j_end = j + step_j
            while j_end < g.ny and band[i, j_end] == k:
                j_end += step_j
            y_top = sy(ys[min(j_end, g.ny) - 1] + 0.5 * dy)
            y_bot = sy(ys[j] - 0.5 * dy)
            out.append(
                f'<rect x="{x0:.2f}" y="{y_top:.2f}" width="{x1 - x0:.2f}" height="{y_bot - y_top:.2f}" '
                f'fill="{_band_colour(k)}"/>'
            )
            j = j_end
    out.append("</g>")
    out.append('<g class="nodal" fill="none" stroke="#000000" stroke-width="2.5">')
    for ln in lines:
        pts = ln.points
        d = "M " + " L ".join(f"{sx(px):.2f},{sy(py):.2f}" for px, py in pts)
        if ln.closed:
            d += " Z"
        out.append(f'<path d="{d}"/>')
    out.append("</g>")
    out.append("</svg>")
    path.write_text("\n".join(out) + "\n")


def export_field(f: EigenfunctionField, fmt: str, path, lines: list[Polyline] | None = None) -> Path:
    """Write the field as ``csv``, ``json`` or ``svg``; returns the path written."""
    path = Path(path)
    if lines is None and fmt in ("json", "svg"):
        lines = nodal_segments(f)
    try:
        if fmt == "csv":
            _write_csv(f, path)
        elif fmt == "json":
            path.write_text(json.dumps(_json_payload(f, lines), allow_nan=False))
        elif fmt == "svg":
            _write_svg(f, lines, path)
        else:
            raise ValueError(f"unknown export format {fmt!r}; expected csv, json or svg")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path
