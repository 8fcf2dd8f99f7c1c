"""Star-graph geometries and finite sets of interaction sites."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import DuplicateSiteError, GeometryError

__all__ = ["StarGeometry", "PointSet", "build_star", "add_site", "DUPLICATE_RTOL"]

TWO_PI = 2.0 * math.pi
# Sites closer than this multiple of the length scale count as coincident.
DUPLICATE_RTOL = 1e-12


@dataclass(frozen=True)
class StarGeometry:
    """``N`` half-lines from the origin with ``M`` sites per arm at spacing ``l``.

    ``angle_increments`` are the angles between consecutive arms; arm ``j``
    points in the cumulative direction ``sum(angle_increments[:j])``.
    """

    n_arms: int
    angle_increments: tuple[float, ...]
    spacing: float
    points_per_arm: int

    def __post_init__(self):
        object.__setattr__(self, "angle_increments", tuple(float(b) for b in self.angle_increments))
        if int(self.n_arms) != self.n_arms or self.n_arms < 2:
            raise GeometryError(f"n_arms must be an integer >= 2, got {self.n_arms!r}")
        if len(self.angle_increments) != self.n_arms - 1:
            raise GeometryError(
                f"need n_arms - 1 = {self.n_arms - 1} angle increments, got {len(self.angle_increments)}"
            )
        for j, beta in enumerate(self.angle_increments, start=1):
            if not beta > 0 or not math.isfinite(beta):
                raise GeometryError(f"angle increment beta_{j} must be positive, got {beta!r}")
        total = sum(self.angle_increments)
        if not total < TWO_PI:
            raise GeometryError(f"sum of angle increments must be < 2*pi, got {total!r}")
        if not (self.spacing > 0 and math.isfinite(self.spacing)):
            raise GeometryError(f"spacing must be positive, got {self.spacing!r}")
        if int(self.points_per_arm) != self.points_per_arm or self.points_per_arm < 1:
            raise GeometryError(f"points_per_arm must be an integer >= 1, got {self.points_per_arm!r}")

    @classmethod
    def from_directions(cls, directions: Sequence[float], spacing: float, points_per_arm: int) -> "StarGeometry":
        """Build from cumulative arm directions ``theta_1 < ... < theta_{N-1}``.

        The first arm always points along the positive x-axis, so the
        direction ``0`` is implicit and must not be listed.
        """
        dirs = [float(t) for t in directions]
        prev = 0.0
        increments = []
        for j, theta in enumerate(dirs, start=1):
            if not theta > prev:
                raise GeometryError(
                    f"cumulative directions must be strictly increasing from 0, theta_{j}={theta!r}"
                )
            increments.append(theta - prev)
            prev = theta
        return cls(len(dirs) + 1, tuple(increments), spacing, points_per_arm)

    @property
    def directions(self) -> np.ndarray:
        """Arm directions ``theta_0 = 0, theta_1, ..., theta_{N-1}``."""
        return np.concatenate([[0.0], np.cumsum(self.angle_increments)])

    @property
    def n_sites(self) -> int:
        return self.n_arms * self.points_per_arm + 1


class PointSet:
    """Ordered, validated set of interaction sites in the plane.

    The origin must be present exactly once.  Pairwise distances are cached
    because every secular-matrix evaluation needs them.

    Parameters
    ----------
    sites : array_like, shape (K, 2)
    scale : float
        Length scale used for the duplicate-site tolerance (the arm
        spacing for star graphs).
    """

    def __init__(self, sites: Iterable[Sequence[float]], scale: float = 1.0):
        arr = np.array(sites, dtype=float).reshape(-1, 2)
        if arr.shape[0] == 0:
            raise GeometryError("a point set needs at least one site")
        if not np.all(np.isfinite(arr)):
            raise GeometryError("site coordinates must be finite")
        if not scale > 0:
            raise GeometryError(f"scale must be positive, got {scale!r}")
        arr.setflags(write=False)
        self._sites = arr
        self.scale = float(scale)
        tol = DUPLICATE_RTOL * self.scale
        at_origin = int(np.count_nonzero(np.hypot(arr[:, 0], arr[:, 1]) <= tol))
        if at_origin != 1:
            raise GeometryError(f"the origin must be present exactly once, found {at_origin}")
        if len(arr) > 1:
            d = self.distances[np.triu_indices(len(arr), 1)]
            if d.min() <= tol:
                i, j = np.argwhere(np.triu(self.distances <= tol, 1))[0]
                raise DuplicateSiteError(f"sites {i} and {j} coincide at {tuple(arr[i])}")

    @property
    def sites(self) -> np.ndarray:
        return self._sites

    def __len__(self) -> int:
        return len(self._sites)

    def __repr__(self) -> str:
        return f"PointSet(K={len(self)}, min_separation={self.min_separation:.6g})"

    @cached_property
    def distances(self) -> np.ndarray:
        diff = self._sites[:, None, :] - self._sites[None, :, :]
        d = np.hypot(diff[..., 0], diff[..., 1])
        d.setflags(write=False)
        return d

    @cached_property
    def min_separation(self) -> float:
        if len(self) == 1:
            return math.inf
        return float(self.distances[np.triu_indices(len(self), 1)].min())

    def rotated(self, angle: float) -> "PointSet":
        c, s = math.cos(angle), math.sin(angle)
        rot = np.array([[c, -s], [s, c]])
        return PointSet(self._sites @ rot.T, self.scale)

    def digest(self) -> str:
        """Short stable hash of the coordinates (for output metadata)."""
        return hashlib.sha256(np.ascontiguousarray(self._sites).tobytes()).hexdigest()[:16]


def build_star(geom: StarGeometry, rotation: float = 0.0) -> PointSet:
    """Origin followed by ``points_per_arm`` sites on each arm, arm by arm.

    ``rotation`` turns the whole star about the origin.
    """
    n = np.arange(1, geom.points_per_arm + 1, dtype=float) * geom.spacing
    pts = [np.zeros((1, 2))]
    for theta in geom.directions + rotation:
        pts.append(np.column_stack([n * math.cos(theta), n * math.sin(theta)]))
    return PointSet(np.vstack(pts), scale=geom.spacing)


def add_site(ps: PointSet, y: Sequence[float]) -> PointSet:
    """Return a new set with ``y`` appended; raises on a duplicate site."""
    y = np.asarray(y, dtype=float).reshape(2)
    dist = np.hypot(*(ps.sites - y).T)
    if dist.min() <= DUPLICATE_RTOL * ps.scale:
        raise DuplicateSiteError(f"site {tuple(y)} duplicates an existing site")
    return PointSet(np.vstack([ps.sites, y]), ps.scale)
