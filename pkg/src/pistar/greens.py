"""Free-plane and centred Dirichlet-disc Green's functions and their xi-functions.

Units are those with ``2m = 1``, so the free resolvent kernel at energy
``z = -kappa**2`` is ``K0(kappa r) / (2 pi)``.  A single point interaction
with coupling ``alpha`` binds at the root of ``alpha = xi(kappa)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import specfun
from .errors import DomainError, NoRootError, SingularityError
from .roots import bisect_increasing, bracket_increasing

__all__ = [
    "SpectralPoint",
    "DiscModel",
    "g0_plane",
    "xi_plane",
    "g_disc_center",
    "xi_disc",
    "single_site_kappa",
    "single_site_energy",
    "plane_ground",
    "disc_ground",
]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SpectralPoint:
    """A negative energy ``z`` together with its decay rate ``kappa = sqrt(-z)``."""

    kappa: float

    def __post_init__(self):
        if not (self.kappa > 0 and math.isfinite(self.kappa)):
            raise DomainError(f"kappa must be positive and finite, got {self.kappa!r}")

    @classmethod
    def from_z(cls, z: float) -> "SpectralPoint":
        if not z < 0:
            raise DomainError(f"energy must be negative, got {z!r}")
        return cls(math.sqrt(-z))

    @property
    def z(self) -> float:
        return -self.kappa * self.kappa


@dataclass(frozen=True)
class DiscModel:
    """Single interaction at the centre of a Dirichlet disc of radius ``R``."""

    radius: float
    coupling: float = 0.0

    def __post_init__(self):
        if not self.radius > 0:
            raise DomainError(f"disc radius must be positive, got {self.radius!r}")


def _xi_plane(kappa):
    return (specfun.CONSTANTS.psi_one - np.log(0.5 * kappa)) / TWO_PI


def g0_plane(r, sp: SpectralPoint):
    """Free Green's function ``K0(kappa r) / (2 pi)``; ``r`` may be an array."""
    arr = np.asarray(r, dtype=float)
    if np.any(arr <= 0):
        raise DomainError("g0_plane: distance must be positive")
    out = specfun.bessel_k0(sp.kappa * arr) / TWO_PI
    return float(out) if np.ndim(out) == 0 else out


def xi_plane(sp: SpectralPoint) -> float:
    """Regularised free Green's function ``(psi(1) - ln(kappa/2)) / (2 pi)``."""
    return float(_xi_plane(sp.kappa))


def g_disc_center(r, sp: SpectralPoint, disc: DiscModel):
    """Dirichlet-disc Green's function with the source at the centre.

    ``(K0(kappa r) - K0(kappa R)/I0(kappa R) * I0(kappa r)) / (2 pi)``,
    exactly zero on the boundary ``r = R``.
    """
    arr = np.asarray(r, dtype=float)
    if np.any(arr > disc.radius):
        raise DomainError(f"g_disc_center: r exceeds disc radius {disc.radius}")
    if np.any(arr <= 0):
        raise SingularityError("g_disc_center: r = 0 is the logarithmic singularity; use xi_disc")
    kappa, big = sp.kappa, sp.kappa * disc.radius
    small = kappa * np.atleast_1d(arr)
    # K0(kappa r) - ratio * I0(kappa r), written with scaled forms:
    #   ratio * I0(kr) = K0e(kR)/I0e(kR) * I0e(kr) * exp(kr - 2 kR)
    ratio_e = specfun.bessel_k0e(big) / specfun.bessel_i0e(big)
    with np.errstate(under="ignore"):
        image = ratio_e * specfun.bessel_i0e(small) * np.exp(small - 2.0 * big)
    out = (specfun.bessel_k0(small) - image) / TWO_PI
    out[np.atleast_1d(arr) == disc.radius] = 0.0
    return float(out[0]) if np.ndim(arr) == 0 else out.reshape(arr.shape)


def xi_disc(sp: SpectralPoint, disc: DiscModel) -> float:
    """Regularised centred disc Green's function, ``xi_plane - K0/I0(kappa R) / (2 pi)``."""
    return float(_xi_plane(sp.kappa) - specfun.k0_i0_ratio(sp.kappa * disc.radius) / TWO_PI)


def single_site_kappa(alpha: float) -> float:
    """Closed-form root of ``alpha = xi_plane``: ``2 exp(psi(1) - 2 pi alpha)``."""
    return 2.0 * math.exp(specfun.CONSTANTS.psi_one - TWO_PI * alpha)


def single_site_energy(alpha: float) -> float:
    return -single_site_kappa(alpha) ** 2


def plane_ground(alpha: float, rtol: float = 1e-13) -> float:
    """Single-site energy found by bisection (cross-check of the closed form)."""

    def g(kappa):
        return alpha - _xi_plane(kappa)

    lo, hi = bracket_increasing(g, 1.0)
    return -bisect_increasing(g, lo, hi, rtol) ** 2


def disc_ground(disc: DiscModel, rtol: float = 1e-13) -> float | None:
    """Negative ground-state energy of the disc problem, or None if there is none.

    ``xi_disc`` decreases from ``ln(R) / (2 pi)`` at ``kappa -> 0`` to
    ``-inf``, so a negative eigenvalue exists iff ``alpha < ln(R) / (2 pi)``.
    """
    alpha, radius = disc.coupling, disc.radius

    def g(kappa):
        return alpha - xi_disc(SpectralPoint(kappa), disc)

    if alpha >= math.log(radius) / TWO_PI:
        return None
    try:
        lo, hi = bracket_increasing(g, single_site_kappa(alpha), must_exist=False)
    except NoRootError:
        return None
    return -bisect_increasing(g, lo, hi, rtol) ** 2
