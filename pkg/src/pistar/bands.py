"""Floquet-Bloch xi-functions of the straight polymer and the Neumann strip.

Everything is evaluated at quasi-momentum ``theta = 0``, which is where the
lowest band edge ``E0`` of the infinite equidistant chain sits.  ``E0`` is
the essential-spectrum threshold of every star graph with the same spacing
and coupling.

Lattice series are summed explicitly up to a cutoff ``n_terms`` and the
remainder is taken from the Euler-Maclaurin midpoint formula

    sum_{m > M} f(m) ~ int_{M+1/2}^inf f + f'(M + 1/2) / 24,

whose neglected term is ``O(f'''(M))``, i.e. ``O(M**-6)`` here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import specfun
from .errors import DomainError, NoRootError
from .greens import SpectralPoint, single_site_kappa
from .roots import bisect_increasing, bracket_increasing

__all__ = [
    "PolymerModel",
    "StripModel",
    "kappa_m",
    "xi_polymer",
    "lattice_sum_inverse",
    "lattice_sum_inverse_three_halves",
    "polymer_threshold",
    "xi_strip",
    "strip_ground",
    "dz_deps",
    "default_terms",
]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class PolymerModel:
    """Infinite straight chain of point interactions, spacing ``l``."""

    spacing: float
    coupling: float = 0.0

    def __post_init__(self):
        if not self.spacing > 0:
            raise DomainError(f"spacing must be positive, got {self.spacing!r}")


@dataclass(frozen=True)
class StripModel:
    """The chain confined to a Neumann strip of width ``1/epsilon``."""

    spacing: float
    coupling: float
    epsilon: float

    def __post_init__(self):
        if not self.spacing > 0:
            raise DomainError(f"spacing must be positive, got {self.spacing!r}")
        if not self.epsilon > 0:
            raise DomainError(f"epsilon must be positive, got {self.epsilon!r}")

    @property
    def width(self) -> float:
        return 1.0 / self.epsilon


def kappa_m(m, sp: SpectralPoint, l: float):
    """``sqrt((2 pi m / l)**2 - z)``; vectorised over ``m``."""
    q = TWO_PI * np.asarray(m, dtype=float) / l
    out = np.sqrt(q * q + sp.kappa * sp.kappa)
    return float(out) if np.ndim(out) == 0 else out


def default_terms(kappa: float, l: float) -> int:
    """Explicit terms before the Euler-Maclaurin tail takes over."""
    return int(max(256, math.ceil(16.0 * kappa * l / TWO_PI)))


def _polymer_series(kappa: float, l: float, n_terms: int) -> float:
    """``sum_{m>=1} [1/kappa_m - l/(2 pi m)]``."""
    c = TWO_PI / l
    k2 = kappa * kappa
    q = c * np.arange(1, n_terms + 1, dtype=float)
    s = np.sqrt(q * q + k2)
    head = float(np.sum(-k2 / (q * s * (q + s))))
    a = n_terms + 0.5
    u = c * a / kappa
    # int_a^inf f = (ln(2u) - asinh(u)) / c, rewritten without cancellation
    tail = -math.log1p(1.0 / (2.0 * u * (u + math.hypot(u, 1.0)))) / c
    sa = math.hypot(c * a, kappa)
    fprime = -c * c * a / sa**3 + 1.0 / (c * a * a)
    return head + tail + fprime / 24.0


def xi_polymer(sp: SpectralPoint, l: float, n_terms: int | None = None) -> float:
    """Regularised Green's function of the straight polymer at ``theta = 0``.

    ``1/(2 l kappa) + (1/l) sum_{m>=1} [1/kappa_m - l/(2 pi m)] + ln(l/2pi)/(2 pi)``.
    The additive constant makes the value coincide with the real-space
    lattice sum ``xi_plane + (1/pi) sum_{n>=1} K0(n l kappa)``, i.e. it uses
    the same ``-ln|x - a| / (2 pi)`` regularisation as :func:`xi_plane`.
    """
    kappa = sp.kappa
    if n_terms is None:
        n_terms = default_terms(kappa, l)
    series = _polymer_series(kappa, l, n_terms)
    return 1.0 / (2.0 * l * kappa) + series / l + math.log(l / TWO_PI) / TWO_PI


def lattice_sum_inverse(sp: SpectralPoint, l: float) -> float:
    """``sum_{m in Z} [(2 pi m/l)**2 - z]**-1 = (l / 2 kappa) coth(l kappa / 2)``."""
    return 0.5 * l / sp.kappa * specfun.coth_half(l * sp.kappa)


def lattice_sum_inverse_three_halves(sp: SpectralPoint, l: float, n_terms: int | None = None) -> float:
    """``sum_{m in Z} [(2 pi m/l)**2 - z]**-3/2``."""
    kappa = sp.kappa
    if n_terms is None:
        n_terms = default_terms(kappa, l)
    c = TWO_PI / l
    q = c * np.arange(1, n_terms + 1, dtype=float)
    head = float(np.sum((q * q + kappa * kappa) ** -1.5))
    a = n_terms + 0.5
    sa = math.hypot(c * a, kappa)
    tail = 1.0 / (c * sa * (sa + c * a))
    fprime = -3.0 * c * c * a / sa**5
    return kappa**-3 + 2.0 * (head + tail + fprime / 24.0)


def _solve_kappa(g, guess: float, rtol: float, must_exist: bool = True) -> float:
    lo, hi = bracket_increasing(g, guess, must_exist=must_exist)
    return bisect_increasing(g, lo, hi, rtol)


def polymer_threshold(pm: PolymerModel, rtol: float = 1e-12) -> float:
    """Bottom ``E0 < 0`` of the polymer spectrum: the root of ``alpha = xi_polymer``.

    ``rtol`` is relative in the energy.
    """
    l, alpha = pm.spacing, pm.coupling

    def g(kappa):
        return alpha - xi_polymer(SpectralPoint(kappa), l)

    kappa = _solve_kappa(g, single_site_kappa(alpha), 0.5 * rtol)
    return -kappa * kappa


def _strip_excess(kappa: float, l: float, eps: float) -> float:
    """Exponentially small coth corrections of the strip relative to the polymer."""
    total = specfun.coth_half_minus_one(kappa / eps) / (2.0 * l * kappa)
    c = TWO_PI / l
    # terms decay like exp(-c m / eps); stop once exp(-40) is reached
    m_max = max(1, int(math.ceil(40.0 * eps / c)) + 1)
    km = np.sqrt((c * np.arange(1, m_max + 1)) ** 2 + kappa * kappa)
    total += float(np.sum(specfun.coth_half_minus_one(km / eps) / km)) / l
    return total


def xi_strip(sm: StripModel, sp: SpectralPoint, n_terms: int | None = None) -> float:
    """Regularised Green's function of the chain in the Neumann strip, ``theta = 0``.

    ``(eps/l) S1 + (1/(2 l kappa)) coth(kappa/2eps)
    + (1/l) sum_{m>=1} [coth(kappa_m/2eps)/kappa_m - l/(2 pi m)] + ln(l/2pi)/(2 pi)``

    with ``S1 = sum_m 1/kappa_m**2``.  Evaluated as the polymer value plus
    the ``S1`` term plus ``coth - 1`` corrections, so it tends to
    :func:`xi_polymer` as ``eps -> 0`` without overflow.
    """
    l, eps = sm.spacing, sm.epsilon
    return (
        eps / l * lattice_sum_inverse(sp, l)
        + xi_polymer(sp, l, n_terms)
        + _strip_excess(sp.kappa, l, eps)
    )


def strip_ground(sm: StripModel, rtol: float = 1e-12) -> float:
    """Lowest ``theta = 0`` eigenvalue of the strip chain, root of ``alpha = xi_strip``."""
    alpha = sm.coupling

    def g(kappa):
        return alpha - xi_strip(sm, SpectralPoint(kappa))

    try:
        kappa = _solve_kappa(g, single_site_kappa(alpha), 0.5 * rtol, must_exist=False)
    except NoRootError as exc:
        raise NoRootError(f"strip {sm}: {exc}") from None
    return -kappa * kappa


def dz_deps(pm: PolymerModel) -> float:
    """First-order slope of the strip eigenvalue in ``epsilon`` at ``epsilon = 0``.

    ``-4 sum_m kappa_m**-2 / sum_m kappa_m**-3`` evaluated at ``z = E0``.
    """
    sp = SpectralPoint.from_z(polymer_threshold(pm))
    return -4.0 * lattice_sum_inverse(sp, pm.spacing) / lattice_sum_inverse_three_halves(sp, pm.spacing)
