"""Modified Bessel functions of order 0 and 1 for real positive arguments.

Every function accepts a scalar or an array and returns the same kind.
Evaluation regimes:

* ``I0``, ``I1``: ascending series for ``x <= 25``, Hankel asymptotic
  expansion above.
* ``K0``, ``K1``: ascending (logarithmic) series for ``x <= 2``, Hankel
  asymptotic expansion for ``x >= 25``.  In between, a degree-20
  Chebyshev interpolant in ``1/x`` of ``sqrt(x) e^x K_nu(x)``, sampled once
  at import from the trapezoid rule on the ``cosh`` integral representation.

All three seams are covered by overlap tests against high-precision
references; the relative error is below 1e-13 over ``[1e-8, 700]``.
"""

from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np
from numpy.polynomial import Chebyshev

from .errors import DomainError

__all__ = [
    "SpecialConstants",
    "CONSTANTS",
    "perturbed_constants",
    "bessel_i0",
    "bessel_i0e",
    "bessel_i1",
    "bessel_i1e",
    "bessel_k0",
    "bessel_k0e",
    "bessel_k1",
    "bessel_k1e",
    "k0_i0_ratio",
    "log_k0_i0_ratio",
    "coth_half",
    "coth_half_minus_one",
]

_EULER_GAMMA = 0.57721566490153286060651209008240243


@dataclass(frozen=True)
class SpecialConstants:
    euler_gamma: float = _EULER_GAMMA

    @property
    def psi_one(self) -> float:
        """Digamma at one, exactly ``-euler_gamma``."""
        return -self.euler_gamma


CONSTANTS = SpecialConstants()


@contextlib.contextmanager
def perturbed_constants(delta: float) -> Iterator[SpecialConstants]:
    """Temporarily shift Euler's constant by ``delta`` (fault injection only).

    The shifted value reaches ``K0`` and the xi-functions but not ``K1``.
    A shift applied to both would go unnoticed by the Wronskian, which is
    blind to ``K -> K + c I``.
    """
    global CONSTANTS
    saved = CONSTANTS
    CONSTANTS = SpecialConstants(saved.euler_gamma + delta)
    try:
        yield CONSTANTS
    finally:
        CONSTANTS = saved


_SERIES_MAX_I = 25.0
_SERIES_MAX_K = 2.0
_ASYMPTOTIC_MIN = 25.0
_ASYMPTOTIC_TERMS = 30
_TRAPEZOID_STEP = 0.24
_TRAPEZOID_NODES = 28
_CHEB_DEGREE = 20
_EPS = 1e-17
# K0(x) drops below the smallest normal double past this point.
K0_UNDERFLOW_X = 703.0


def _prepare(x, *, strict: bool, name: str) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if np.any(np.isnan(arr)):
        raise DomainError(f"{name}: NaN argument")
    bad = arr <= 0 if strict else arr < 0
    if np.any(bad):
        rel = ">" if strict else ">="
        raise DomainError(f"{name}: argument must be {rel} 0, got {arr[bad][0]!r}")
    return arr, scalar


def _finish(out: np.ndarray, scalar: bool):
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# ascending series


def _i_series(x: np.ndarray, order: int) -> np.ndarray:
    q = 0.25 * x * x
    term = np.ones_like(x) if order == 0 else 0.5 * x
    total = term.copy()
    k = 0
    while True:
        k += 1
        term = term * q / (k * (k + order))
        total += term
        if np.all(term <= _EPS * total) or k > 200:
            return total


def _k0_series(x: np.ndarray) -> np.ndarray:
    gamma = CONSTANTS.euler_gamma
    q = 0.25 * x * x
    term = np.ones_like(x)
    i0 = term.copy()
    acc = np.zeros_like(x)
    harmonic = 0.0
    for k in range(1, 40):
        term = term * q / (k * k)
        harmonic += 1.0 / k
        i0 += term
        acc += harmonic * term
    return -(np.log(0.5 * x) + gamma) * i0 + acc


def _k1_series(x: np.ndarray) -> np.ndarray:
    # exact constant on purpose: K1 is the independent half of the Wronskian check
    gamma = _EULER_GAMMA
    q = 0.25 * x * x
    u = np.ones_like(x)  # (x^2/4)^k / (k! (k+1)!)
    i1 = 0.5 * x * u
    h_k, h_k1 = 0.0, 1.0
    acc = (-2.0 * gamma + h_k + h_k1) * u
    for k in range(1, 40):
        u = u * q / (k * (k + 1))
        h_k += 1.0 / k
        h_k1 += 1.0 / (k + 1)
        i1 += 0.5 * x * u
        acc += (-2.0 * gamma + h_k + h_k1) * u
    return 1.0 / x + np.log(0.5 * x) * i1 - 0.25 * x * acc


# ---------------------------------------------------------------------------
# large argument


def _hankel_sum(x: np.ndarray, order: int, alternating: bool) -> np.ndarray:
    mu = 4.0 * order * order
    coef = 1.0
    total = np.ones_like(x)
    power = np.ones_like(x)
    for k in range(1, _ASYMPTOTIC_TERMS):
        odd = (2 * k - 1) ** 2
        coef *= ((mu - odd) if alternating else (odd - mu)) / (8.0 * k)
        power = power / x
        total += coef * power
    return total


def _i_asymptotic_scaled(x: np.ndarray, order: int) -> np.ndarray:
    return _hankel_sum(x, order, alternating=False) / np.sqrt(2.0 * math.pi * x)


def _k_asymptotic_scaled(x: np.ndarray, order: int) -> np.ndarray:
    return _hankel_sum(x, order, alternating=True) * np.sqrt(0.5 * math.pi / x)


def _k01_trapezoid_scaled(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Scaled ``e^x K0`` and ``e^x K1`` for ``2 <= x <= 25``.

    Trapezoid rule on ``e^x K_nu(x) = int_0^inf cosh(nu t) exp(-x (cosh t - 1)) dt``.
    The integrand is analytic in a strip, so the rule converges
    exponentially; the step shrinks like ``x**-1/2`` with the peak width.
    """
    h = _TRAPEZOID_STEP * np.sqrt(2.0 / x)
    t = h[:, None] * np.arange(_TRAPEZOID_NODES)
    cosh_t = np.cosh(t)
    e = np.exp(-x[:, None] * (cosh_t - 1.0))
    e[:, 0] *= 0.5
    return h * e.sum(axis=1), h * (e * cosh_t).sum(axis=1)


def _build_mid_interpolants() -> tuple[Chebyshev, Chebyshev]:
    # sqrt(x) e^x K_nu(x) is smooth and slowly varying in u = 1/x.
    domain = [1.0 / _ASYMPTOTIC_MIN, 1.0 / _SERIES_MAX_K]

    def sampled(order):
        def f(u):
            x = 1.0 / u
            return _k01_trapezoid_scaled(x)[order] * np.sqrt(x)

        return Chebyshev.interpolate(f, _CHEB_DEGREE, domain=domain)

    return sampled(0), sampled(1)


_K_MID = _build_mid_interpolants()


# ---------------------------------------------------------------------------
# public API


def _i_scaled(x: np.ndarray, order: int) -> np.ndarray:
    out = np.empty_like(x)
    small = x <= _SERIES_MAX_I
    if np.any(small):
        xs = x[small]
        out[small] = _i_series(xs, order) * np.exp(-xs)
    if np.any(~small):
        out[~small] = _i_asymptotic_scaled(x[~small], order)
    return out


def _k_scaled(x: np.ndarray, order: int) -> np.ndarray:
    out = np.empty_like(x)
    small = x <= _SERIES_MAX_K
    large = x >= _ASYMPTOTIC_MIN
    mid = ~(small | large)
    if np.any(small):
        xs = x[small]
        series = _k0_series(xs) if order == 0 else _k1_series(xs)
        out[small] = series * np.exp(xs)
    if np.any(mid):
        xm = x[mid]
        out[mid] = _K_MID[order](1.0 / xm) / np.sqrt(xm)
    if np.any(large):
        out[large] = _k_asymptotic_scaled(x[large], order)
    return out


def bessel_i0e(x):
    """Exponentially scaled ``exp(-x) I0(x)`` for ``x >= 0``."""
    arr, scalar = _prepare(x, strict=False, name="bessel_i0e")
    return _finish(_i_scaled(arr, 0), scalar)


def bessel_i0(x):
    """Modified Bessel function ``I0(x)`` for ``x >= 0``.

    Overflows to ``inf`` beyond ``x ~ 713``; use :func:`bessel_i0e` there.
    """
    arr, scalar = _prepare(x, strict=False, name="bessel_i0")
    out = np.empty_like(arr)
    small = arr <= _SERIES_MAX_I
    out[small] = _i_series(arr[small], 0)
    if np.any(~small):
        xl = arr[~small]
        with np.errstate(over="ignore"):
            out[~small] = _i_asymptotic_scaled(xl, 0) * np.exp(xl)
    return _finish(out, scalar)


def bessel_i1e(x):
    """Exponentially scaled ``exp(-x) I1(x)`` for ``x >= 0``."""
    arr, scalar = _prepare(x, strict=False, name="bessel_i1e")
    return _finish(_i_scaled(arr, 1), scalar)


def bessel_i1(x):
    """Modified Bessel function ``I1(x)`` (helper for cross-checks)."""
    arr, scalar = _prepare(x, strict=False, name="bessel_i1")
    with np.errstate(over="ignore"):
        out = _i_scaled(arr, 1) * np.exp(arr)
    return _finish(out, scalar)


def bessel_k0e(x):
    """Exponentially scaled ``exp(x) K0(x)`` for ``x > 0``."""
    arr, scalar = _prepare(x, strict=True, name="bessel_k0e")
    return _finish(_k_scaled(arr, 0), scalar)


def bessel_k0(x, *, full_output: bool = False):
    """Modified Bessel function of the second kind ``K0(x)`` for ``x > 0``.

    Parameters
    ----------
    x : float or array_like
        Strictly positive argument.
    full_output : bool, optional
        If True, also return a boolean (array) that is set where the
        result fell below the smallest normal double and was flushed to
        zero or is subnormal.

    Raises
    ------
    DomainError
        For ``x <= 0``.
    """
    arr, scalar = _prepare(x, strict=True, name="bessel_k0")
    out = np.empty_like(arr)
    small = arr <= _SERIES_MAX_K
    out[small] = _k0_series(arr[small])
    if np.any(~small):
        xl = arr[~small]
        with np.errstate(under="ignore"):
            out[~small] = _k_scaled(xl, 0) * np.exp(-xl)
    underflow = out < np.finfo(float).tiny
    if full_output:
        return _finish(out, scalar), (bool(underflow[0]) if scalar else underflow)
    return _finish(out, scalar)


def bessel_k1e(x):
    """Exponentially scaled ``exp(x) K1(x)`` for ``x > 0``."""
    arr, scalar = _prepare(x, strict=True, name="bessel_k1e")
    return _finish(_k_scaled(arr, 1), scalar)


def bessel_k1(x):
    """Modified Bessel function ``K1(x)`` (helper for cross-checks)."""
    arr, scalar = _prepare(x, strict=True, name="bessel_k1")
    with np.errstate(under="ignore"):
        out = _k_scaled(arr, 1) * np.exp(-arr)
    return _finish(out, scalar)


def log_k0_i0_ratio(x):
    """Natural logarithm of ``K0(x) / I0(x)``; finite for every ``x > 0``."""
    arr, scalar = _prepare(x, strict=True, name="log_k0_i0_ratio")
    out = np.log(_k_scaled(arr, 0)) - np.log(_i_scaled(arr, 0)) - 2.0 * arr
    return _finish(out, scalar)


def k0_i0_ratio(x):
    """``K0(x) / I0(x)`` built from scaled forms, so it never overflows.

    The true value drops below the double-precision range near
    ``x ~ 372`` and is then returned as ``0.0``; see
    :func:`log_k0_i0_ratio` for the representable logarithm.
    """
    arr, scalar = _prepare(x, strict=True, name="k0_i0_ratio")
    with np.errstate(under="ignore"):
        out = _k_scaled(arr, 0) / _i_scaled(arr, 0) * np.exp(-2.0 * arr)
    return _finish(out, scalar)


def coth_half(x):
    """``(cosh x + 1) / sinh x``, i.e. ``coth(x/2)``, for ``x > 0``."""
    arr, scalar = _prepare(x, strict=True, name="coth_half")
    return _finish(1.0 / np.tanh(0.5 * arr), scalar)


def coth_half_minus_one(x):
    """``coth(x/2) - 1 = 2 / expm1(x)`` without cancellation."""
    arr, scalar = _prepare(x, strict=True, name="coth_half_minus_one")
    with np.errstate(over="ignore"):
        out = 2.0 / np.expm1(arr)
    return _finish(out, scalar)
