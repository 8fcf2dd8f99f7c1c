"""Secular (Krein) matrix of a finite point-interaction set and its spectrum.

For sites ``a_1..a_K`` with common coupling ``alpha`` the energy
``z = -kappa**2`` is an eigenvalue iff the symmetric matrix

    Lambda_ij(kappa) = delta_ij (alpha - xi_plane(kappa)) - (1 - delta_ij) K0(kappa |a_i - a_j|) / (2 pi)

is singular.  Its derivative in ``z`` is minus a Gram matrix of resolvent
kernels, so each sorted eigenvalue ``mu_k(kappa)`` is strictly increasing
in ``kappa``.  Two consequences are used throughout:

* the number of negative eigenvalues of ``Lambda(kappa)`` equals the number
  of bound states below ``-kappa**2``;
* branch ``k`` crosses zero at most once, at the ``k``-th lowest energy,
  so every root has a guaranteed bisection bracket.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from . import specfun
from .bands import PolymerModel, polymer_threshold
from .errors import CoarseGridWarning, DomainError
from .geometry import PointSet, StarGeometry, build_star
from .greens import SpectralPoint, _xi_plane, single_site_kappa
from .roots import KAPPA_MAX, bisect_increasing, bracket_increasing

__all__ = [
    "SpectralProblem",
    "KreinMatrix",
    "Spectrum",
    "build_lambda",
    "eigencurves",
    "count_below",
    "find_eigenvalues",
    "ground_state",
    "two_point_oracle",
    "solve_star",
    "DEFAULT_Z_HI",
    "DEFAULT_GRID",
]

TWO_PI = 2.0 * math.pi
DEFAULT_Z_HI = -1e-10
DEFAULT_GRID = 200
CLUSTER_RTOL = 1e-9
NULL_RTOL = 1e-9
MAX_REFINE = 4


@dataclass(frozen=True)
class SpectralProblem:
    points: PointSet
    coupling: float

    def __post_init__(self):
        if not math.isfinite(self.coupling):
            raise DomainError(f"coupling must be finite, got {self.coupling!r}")

    @cached_property
    def _pairs(self) -> tuple[tuple[np.ndarray, np.ndarray], np.ndarray]:
        iu = np.triu_indices(len(self.points), 1)
        return iu, np.ascontiguousarray(self.points.distances[iu])

    def lambda_matrix(self, kappa: float) -> np.ndarray:
        k = len(self.points)
        out = np.empty((k, k))
        iu, dist = self._pairs
        if dist.size:
            off = specfun.bessel_k0(kappa * dist) / -TWO_PI
            out[iu] = off
            out[iu[1], iu[0]] = off
        np.fill_diagonal(out, self.coupling - _xi_plane(kappa))
        return out

    def branch_values(self, kappa: float) -> np.ndarray:
        """Sorted eigenvalues of ``Lambda(kappa)``."""
        return np.linalg.eigvalsh(self.lambda_matrix(kappa))


@dataclass(frozen=True)
class KreinMatrix:
    entries: np.ndarray
    at: SpectralPoint

    @property
    def order(self) -> int:
        return self.entries.shape[0]


def build_lambda(prob: SpectralProblem, sp: SpectralPoint) -> KreinMatrix:
    return KreinMatrix(prob.lambda_matrix(sp.kappa), sp)


def eigencurves(prob: SpectralProblem, kappa_grid: Sequence[float]) -> np.ndarray:
    """Sorted eigenvalues of ``Lambda`` on each grid point, shape ``(n_grid, K)``."""
    grid = np.asarray(kappa_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise DomainError("kappa grid must be a nonempty 1-d sequence")
    if np.any(grid <= 0):
        raise DomainError("kappa grid must be positive")
    return np.array([prob.branch_values(k) for k in grid])


def count_below(prob: SpectralProblem, z: float) -> int:
    """Number of eigenvalues (with multiplicity) strictly below ``z < 0``."""
    return int(np.count_nonzero(prob.branch_values(SpectralPoint.from_z(z).kappa) < 0.0))


def _sign_normalise(vecs: np.ndarray) -> np.ndarray:
    vecs = vecs.copy()
    for j in range(vecs.shape[1]):
        v = vecs[:, j]
        big = np.flatnonzero(np.abs(v) > 1e-10 * np.abs(v).max())
        if v[big[0]] < 0:
            vecs[:, j] = -v
    return vecs


@dataclass
class Spectrum:
    """Negative eigenvalues of a finite point-interaction Hamiltonian.

    ``eigenvalues`` are the distinct roots in ascending order; degenerate
    roots appear once with their multiplicity.  ``null_vectors[i]`` has
    shape ``(K, multiplicities[i])`` with orthonormal columns.

    The multiplicity-expanded list (see :meth:`states`) is the indexing
    convention used by field exports and sweeps: state ``k`` is the ``k``-th
    lowest eigenvalue counted with multiplicity.
    """

    eigenvalues: list[float]
    multiplicities: list[int]
    null_vectors: list[np.ndarray]
    residuals: list[float] = field(default_factory=list)
    threshold_ref: float | None = None
    converged: list[bool | None] | None = None

    def __len__(self) -> int:
        return len(self.eigenvalues)

    @property
    def below_threshold(self) -> list[bool]:
        if self.threshold_ref is None:
            return [True] * len(self)
        return [z < self.threshold_ref for z in self.eigenvalues]

    @property
    def energies(self) -> np.ndarray:
        """Multiplicity-expanded eigenvalues, ascending."""
        return np.repeat(np.asarray(self.eigenvalues, dtype=float), self.multiplicities)

    def states(self) -> list[tuple[float, np.ndarray]]:
        """``(z, coefficient vector)`` per state, multiplicity-expanded."""
        out = []
        for z, vecs in zip(self.eigenvalues, self.null_vectors):
            out.extend((z, vecs[:, j]) for j in range(vecs.shape[1]))
        return out

    def count_below(self, c: float) -> int:
        return int(np.count_nonzero(self.energies < c))


def _default_kappa_max(prob: SpectralProblem) -> float:
    alpha = prob.coupling
    a_min = prob.points.min_separation
    estimate = 2.0 * single_site_kappa(alpha)
    if math.isfinite(a_min):
        estimate = max(estimate, 4.0 / math.sqrt(a_min) * math.exp(specfun.CONSTANTS.psi_one - math.pi * alpha))
    while estimate < KAPPA_MAX and np.any(prob.branch_values(estimate) < 0.0):
        estimate *= 2.0
    return estimate


def _brackets_on_grid(mu: np.ndarray, branches: range) -> tuple[dict[int, tuple[int, int]], bool]:
    out = {}
    stable = True
    for k in branches:
        neg = mu[:, k] < 0.0
        if np.count_nonzero(np.diff(neg)) != 1:
            stable = False
        last_neg = int(np.flatnonzero(neg).max())
        out[k] = (last_neg, last_neg + 1)
    return out, stable


def _refine(prob: SpectralProblem, brackets: dict[int, list[float]], rtol: float) -> None:
    """Shared bisection: each evaluation tightens every bracket it falls inside."""
    while brackets:
        k = max(brackets, key=lambda j: (brackets[j][1] / brackets[j][0], -j))
        lo, hi = brackets[k]
        if hi / lo - 1.0 <= rtol:
            return
        mid = math.sqrt(lo * hi)
        if not lo < mid < hi:
            return
        mu = prob.branch_values(mid)
        for j, b in brackets.items():
            if b[0] < mid < b[1]:
                if mu[j] < 0.0:
                    b[0] = mid
                else:
                    b[1] = mid


def find_eigenvalues(
    prob: SpectralProblem,
    window: tuple[float, float] | None = None,
    tol: float = 1e-12,
    grid_size: int = DEFAULT_GRID,
    threshold_ref: float | None = None,
) -> Spectrum:
    """All eigenvalues of the finite problem inside ``window = (z_lo, z_hi)``.

    Parameters
    ----------
    prob : SpectralProblem
    window : (float, float), optional
        Energy window with ``z_lo < z_hi < 0``.  By default ``z_hi = -1e-10``
        and ``z_lo`` is chosen below the ground state: the two-site estimate
        ``kappa = (4 / sqrt(a_min)) exp(psi(1) - pi alpha)`` is doubled until
        ``Lambda`` is positive definite.
    tol : float
        Relative bisection tolerance in ``kappa``.
    grid_size : int
        Log-spaced ``kappa`` grid used to bracket the branch crossings; it is
        refined (up to 4x) if a branch shows more than one sign change.
    threshold_ref : float, optional
        Reference threshold stored on the result for the
        ``below_threshold`` flags.
    """
    if window is None:
        k_lo = math.sqrt(-DEFAULT_Z_HI)
        k_hi = _default_kappa_max(prob)
    else:
        z_lo, z_hi = window
        if not z_lo < z_hi < 0:
            raise DomainError(f"window must satisfy z_lo < z_hi < 0, got {window!r}")
        k_lo, k_hi = math.sqrt(-z_hi), math.sqrt(-z_lo)

    size = int(grid_size)
    for attempt in range(MAX_REFINE + 1):
        grid = np.geomspace(k_lo, k_hi, size)
        mu = eigencurves(prob, grid)
        n_lo = int(np.count_nonzero(mu[0] < 0.0))
        n_hi = int(np.count_nonzero(mu[-1] < 0.0))
        cells, stable = _brackets_on_grid(mu, range(n_hi, n_lo))
        if stable or size >= MAX_REFINE * grid_size:
            break
        size *= 2
    if not stable:
        warnings.warn(
            f"eigencurve branch counting unstable on a {size}-point grid", CoarseGridWarning, stacklevel=2
        )

    brackets = {k: [float(grid[i]), float(grid[j])] for k, (i, j) in cells.items()}
    _refine(prob, brackets, tol)
    roots = {k: math.sqrt(b[0] * b[1]) for k, b in brackets.items()}

    clusters: list[list[int]] = []
    for k in sorted(roots):
        if clusters and abs(roots[clusters[-1][-1]] - roots[k]) <= CLUSTER_RTOL * roots[k]:
            clusters[-1].append(k)
        else:
            clusters.append([k])

    eigenvalues, mults, vectors, residuals = [], [], [], []
    for members in clusters:
        kappa = float(np.mean([roots[k] for k in members]))
        lam = prob.lambda_matrix(kappa)
        mu, vecs = np.linalg.eigh(lam)
        sel = np.asarray(members)
        eigenvalues.append(-kappa * kappa)
        mults.append(len(members))
        vectors.append(_sign_normalise(vecs[:, sel]))
        residuals.append(float(np.abs(mu[sel]).max() / np.abs(mu).max()))
    return Spectrum(eigenvalues, mults, vectors, residuals, threshold_ref)


def ground_state(prob: SpectralProblem, tol: float = 1e-12) -> float | None:
    """Lowest eigenvalue only (bisection on the lowest branch), or None."""

    def g(kappa):
        return prob.branch_values(kappa)[0]

    k_lo = math.sqrt(-DEFAULT_Z_HI)
    if g(k_lo) >= 0.0:
        return None
    lo, hi = bracket_increasing(g, single_site_kappa(prob.coupling), kmin=k_lo)
    kappa = bisect_increasing(g, lo, hi, tol)
    return -kappa * kappa


def two_point_oracle(alpha: float, a: float, tol: float = 1e-13) -> tuple[float, float | None]:
    """Eigenvalues of two sites at distance ``a`` from the decoupled scalar equations.

    The symmetric state solves ``alpha - xi(kappa) = K0(kappa a)/2pi`` and
    always exists; the antisymmetric one solves
    ``alpha - xi(kappa) = -K0(kappa a)/2pi`` and exists iff
    ``alpha < ln(a) / (2 pi)``.
    """
    if not a > 0:
        raise DomainError(f"distance must be positive, got {a!r}")

    def g_plus(kappa):
        return alpha - _xi_plane(kappa) - specfun.bessel_k0(kappa * a) / TWO_PI

    def g_minus(kappa):
        return alpha - _xi_plane(kappa) + specfun.bessel_k0(kappa * a) / TWO_PI

    guess = single_site_kappa(alpha)
    lo, hi = bracket_increasing(g_plus, guess)
    z_plus = -bisect_increasing(g_plus, lo, hi, tol) ** 2
    z_minus = None
    k_min = math.sqrt(-DEFAULT_Z_HI)
    if alpha < math.log(a) / TWO_PI and g_minus(k_min) < 0.0:
        lo, hi = bracket_increasing(g_minus, guess, kmin=k_min)
        z_minus = -bisect_increasing(g_minus, lo, hi, tol) ** 2
    return z_plus, z_minus


def solve_star(
    geom: StarGeometry,
    alpha: float,
    *,
    window: tuple[float, float] | None = None,
    tol: float = 1e-12,
    grid_size: int = DEFAULT_GRID,
    convergence_drop: int = 5,
    convergence_tol: float = 1e-4,
) -> Spectrum:
    """Spectrum of a truncated star with threshold and convergence flags.

    The convergence reference is the same star with ``convergence_drop``
    fewer sites per arm; state ``k`` is converged when it moved by less
    than ``convergence_tol``.  Flags are None when the reference star would
    have no sites on its arms (``convergence_drop = 0`` disables the check).
    """
    prob = SpectralProblem(build_star(geom), alpha)
    e0 = polymer_threshold(PolymerModel(geom.spacing, alpha))
    spec = find_eigenvalues(prob, window, tol, grid_size, threshold_ref=e0)
    m_ref = geom.points_per_arm - convergence_drop
    if convergence_drop > 0 and m_ref >= 1:
        ref_geom = StarGeometry(geom.n_arms, geom.angle_increments, geom.spacing, m_ref)
        ref = find_eigenvalues(SpectralProblem(build_star(ref_geom), alpha), window, tol, grid_size).energies
        flags: list[bool | None] = []
        k = 0
        for m in spec.multiplicities:
            idx = range(k, k + m)
            flags.append(all(i < len(ref) and abs(spec.energies[i] - ref[i]) < convergence_tol for i in idx))
            k += m
        spec.converged = flags
    else:
        spec.converged = [None] * len(spec)
    return spec
