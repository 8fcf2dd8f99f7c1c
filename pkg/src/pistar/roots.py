"""Bisection on positive variables for monotone secular functions.

All roots in pistar are decay rates ``kappa > 0`` of functions that are
increasing in ``kappa``, so the helpers bisect geometrically.
"""

from __future__ import annotations

import math
from typing import Callable

from .errors import BracketError, NoRootError

KAPPA_MIN = 1e-8
KAPPA_MAX = 1e8


def bisect_increasing(g: Callable[[float], float], lo: float, hi: float, rtol: float = 1e-13) -> float:
    """Root of an increasing ``g`` with ``g(lo) < 0 <= g(hi)``, ``0 < lo < hi``.

    Iterates until ``hi / lo - 1 <= rtol`` (or the bracket stops shrinking)
    and returns the geometric midpoint of the final bracket.
    """
    if not 0 < lo < hi:
        raise BracketError(f"invalid bracket [{lo!r}, {hi!r}]")
    for _ in range(400):
        if hi / lo - 1.0 <= rtol:
            break
        mid = math.sqrt(lo * hi)
        if not lo < mid < hi:
            break
        if g(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return math.sqrt(lo * hi)


def bracket_increasing(
    g: Callable[[float], float],
    guess: float = 1.0,
    kmin: float = KAPPA_MIN,
    kmax: float = KAPPA_MAX,
    *,
    must_exist: bool = True,
) -> tuple[float, float] | None:
    """Expand geometrically from ``guess`` until ``g`` changes sign.

    Returns ``(lo, hi)`` with ``g(lo) < 0 <= g(hi)``.  When no sign change
    exists inside ``[kmin, kmax]`` this raises :class:`NoRootError` if
    ``must_exist`` is False and :class:`BracketError` otherwise.
    """
    guess = min(max(guess, kmin), kmax)
    lo = hi = guess
    g_lo = g_hi = g(guess)
    factor = 2.0
    while g_lo >= 0.0:
        if lo <= kmin:
            break
        hi, g_hi = lo, g_lo
        lo = max(lo / factor, kmin)
        g_lo = g(lo)
        factor *= factor if factor < 1e4 else 1.0
    while g_hi < 0.0:
        if hi >= kmax:
            break
        lo, g_lo = hi, g_hi
        hi = min(hi * factor, kmax)
        g_hi = g(hi)
        factor *= factor if factor < 1e4 else 1.0
    if g_lo < 0.0 <= g_hi:
        return lo, hi
    message = f"no sign change for kappa in [{kmin:g}, {kmax:g}]"
    if must_exist:
        raise BracketError(message)
    raise NoRootError(message)
