"""Self-contained oracle and property checks behind ``pistar validate``.

Each check returns ``(passed, detail)``.  Reference values that need
extended precision are frozen here, so the suite has no test-only
dependencies.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import specfun
from .bands import PolymerModel, StripModel, dz_deps, polymer_threshold, strip_ground
from .geometry import PointSet, StarGeometry, add_site, build_star
from .greens import DiscModel, disc_ground, plane_ground, single_site_energy
from .krein import SpectralProblem, find_eigenvalues, ground_state, two_point_oracle

__all__ = ["Check", "CHECKS", "run_checks"]

# (x, K0, I0, K1, I1) at 40 digits, rounded to double
_BESSEL_REF = [
    (1e-3, 7.023688800562382, 1.0000002500000156, 999.9962381560856, 0.0005000000625000026),
    (0.5, 0.9244190712276659, 1.0634833707413236, 1.656441120003301, 0.2578943053908963),
    (1.0, 0.42102443824070834, 1.2660658777520084, 0.6019072301972346, 0.565159103992485),
    (2.0, 0.11389387274953344, 2.2795853023360673, 0.13986588181652243, 1.590636854637329),
    (5.0, 0.0036910983340425942, 27.239871823604446, 0.004044613445452165, 24.335642142450528),
    (10.0, 1.778006231616765e-05, 2815.7166284662544, 1.8648773453825585e-05, 2670.9883037012546),
    (30.0, 2.1324774964630563e-14, 781672297823.9775, 2.1677320018915495e-14, 768532038938.957),
    (100.0, 4.656628229175902e-45, 1.0737517071310738e42, 4.6798537356369095e-45, 1.0683693903381625e42),
]

ALPHAS = (-0.5, 0.0, 0.5)


@dataclass(frozen=True)
class Check:
    name: str
    func: Callable[[], tuple[bool, str]]


def check_wronskian():
    """``I0 K1 + I1 K0 = 1/x`` on ``[1e-4, 100]`` to 1e-10 relative."""
    x = np.geomspace(1e-4, 100.0, 400)
    # scaled forms keep the product finite at large x
    w = specfun.bessel_i0e(x) * specfun.bessel_k1e(x) + specfun.bessel_i1e(x) * specfun.bessel_k0e(x)
    err = float(np.max(np.abs(w * x - 1.0)))
    return err < 1e-10, f"max relative deviation {err:.2e}"


def check_bessel_reference():
    worst = 0.0
    for x, k0, i0, k1, i1 in _BESSEL_REF:
        for got, ref in (
            (specfun.bessel_k0(x), k0),
            (specfun.bessel_i0(x), i0),
            (specfun.bessel_k1(x), k1),
            (specfun.bessel_i1(x), i1),
        ):
            worst = max(worst, abs(got / ref - 1.0))
    return worst < 1e-13, f"max relative error {worst:.2e}"


def check_single_site():
    worst = 0.0
    for a in ALPHAS:
        closed = -4.0 * math.exp(2.0 * (specfun.CONSTANTS.psi_one - 2.0 * math.pi * a))
        prob = SpectralProblem(PointSet([[0.0, 0.0]]), a)
        for z in (single_site_energy(a), plane_ground(a), find_eigenvalues(prob).eigenvalues[0]):
            worst = max(worst, abs(z / closed - 1.0))
    return worst < 1e-10, f"max relative error {worst:.2e}"


def check_two_point():
    worst = 0.0
    for a_sep in (0.25, 0.5, 1.0, 2.0):
        for alpha in ALPHAS:
            zp, zm = two_point_oracle(alpha, a_sep)
            ref = [zp] if zm is None else [zp, zm]
            got = find_eigenvalues(SpectralProblem(PointSet([[0, 0], [a_sep, 0]]), alpha)).energies
            if len(got) != len(ref):
                return False, f"a={a_sep}, alpha={alpha}: {len(got)} roots, oracle has {len(ref)}"
            worst = max(worst, float(np.max(np.abs(np.asarray(got) / np.asarray(ref) - 1.0))))
    return worst < 1e-10, f"max relative difference {worst:.2e}"


def check_small_a():
    devs = []
    for a in (1e-2, 1e-3, 1e-4):
        zp, _ = two_point_oracle(0.0, a)
        devs.append(abs(math.sqrt(-zp) * math.sqrt(a) / 2.0 * math.exp(-specfun.CONSTANTS.psi_one) - 1.0))
    ok = devs[-1] <= 0.01 and devs[0] > devs[1] > devs[2]
    return ok, "deviations " + ", ".join(f"{d:.2e}" for d in devs)


def check_disc_bracketing():
    for a in ALPHAS:
        e_plane = single_site_energy(a)
        for r in (1.0, 2.0, 5.0):
            e_r = disc_ground(DiscModel(r, a))
            e_half = disc_ground(DiscModel(r / 2, a))
            # an absent root means no negative eigenvalue, i.e. above everything negative
            v_r = 0.0 if e_r is None else e_r
            v_half = 0.0 if e_half is None else e_half
            if not e_plane <= v_r + 1e-12 or not v_r <= v_half + 1e-12:
                return False, f"alpha={a}, R={r}: {e_plane}, {e_r}, {e_half}"
        r_big = 45.0 / math.sqrt(-e_plane)
        e_big = disc_ground(DiscModel(r_big, a))
        if e_big is None or abs(e_big - e_plane) > 1e-6:
            return False, f"alpha={a}: kappa R = 45 gives {e_big}, plane {e_plane}"
    return True, "ordering holds for 9 cases, kappa R = 45 limit within 1e-6"


def check_polymer():
    e0 = polymer_threshold(PolymerModel(50.0, 0.0))
    ref = single_site_energy(0.0)
    ok = abs(e0 - ref) < 1e-4 and e0 <= ref
    return ok, f"l=50: E0 - single site = {e0 - ref:.2e}"


def check_strip():
    pm = PolymerModel(1.0, 0.0)
    e0 = polymer_threshold(pm)
    for eps in (0.05, 0.1, 0.2):
        z = strip_ground(StripModel(1.0, 0.0, eps))
        if not z < e0:
            return False, f"eps={eps}: strip {z} not below {e0}"
    slope = dz_deps(pm)
    eps = 1e-5
    fd = (strip_ground(StripModel(1.0, 0.0, eps)) - e0) / eps
    rel = abs(fd / slope - 1.0)
    return slope < 0 and rel < 1e-4, f"dz/deps = {slope:.8g}, finite difference rel. deviation {rel:.1e}"


def check_add_point(n_cases: int = 20, seed: int = 20240611):
    rng = np.random.default_rng(seed)
    worst = -math.inf
    for _ in range(n_cases):
        k = int(rng.integers(1, 8))
        sites = np.vstack([[0.0, 0.0], rng.uniform(-2.5, 2.5, size=(k - 1, 2))])
        alpha = float(rng.uniform(-0.5, 0.5))
        ps = PointSet(sites)
        # deep levels need a tight tolerance for an absolute 1e-10 slack
        z1 = ground_state(SpectralProblem(ps, alpha), tol=1e-14)
        z2 = ground_state(SpectralProblem(add_site(ps, rng.uniform(-2.5, 2.5, size=2)), alpha), tol=1e-14)
        worst = max(worst, z2 - z1)
    return worst <= 1e-10, f"largest rise {worst:.2e} over {n_cases} cases"


def check_add_leg():
    cases = [
        ((math.pi,), (math.pi / 2, math.pi / 2)),
        ((math.pi / 2,), (math.pi / 4, math.pi / 4)),
        ((2 * math.pi / 3,), (2 * math.pi / 3, 2 * math.pi / 3)),
    ]
    for two, three in cases:
        z2 = find_eigenvalues(SpectralProblem(build_star(StarGeometry(2, two, 1.0, 6)), 0.0)).energies
        z3 = find_eigenvalues(SpectralProblem(build_star(StarGeometry(3, three, 1.0, 6)), 0.0)).energies
        n = min(3, len(z2))
        if len(z3) < n or np.any(z3[:n] > z2[:n] + 1e-10):
            return False, f"{two} -> {three}: {z3[:n]} vs {z2[:n]}"
    return True, "3 arm splits lower the lowest three eigenvalues"


def check_tripod():
    g = StarGeometry(3, (2 * math.pi / 3, 2 * math.pi / 3), 1.0, 3)
    spec = find_eigenvalues(SpectralProblem(build_star(g), 0.0))
    ground = spec.null_vectors[0][:, 0]
    if spec.multiplicities[0] != 1 or not np.all(ground > 0):
        return False, "ground state not simple and positive"
    pairs = sum(1 for m in spec.multiplicities if m == 2)
    return pairs >= 1, f"{pairs} doubly degenerate levels, ground state positive"


def check_bound_below_threshold():
    g = StarGeometry(2, (math.pi / 2,), 1.0, 20)
    e0 = polymer_threshold(PolymerModel(1.0, 0.0))
    z1 = ground_state(SpectralProblem(build_star(g), 0.0))
    return z1 < e0 - 1e-8, f"right-angle star: z1 - E0 = {z1 - e0:.3e}"


def check_five_states():
    g = StarGeometry(2, (math.pi / 20,), 1.0, 20)
    e0 = polymer_threshold(PolymerModel(1.0, 0.0))
    n = find_eigenvalues(SpectralProblem(build_star(g), 0.0), threshold_ref=e0).count_below(e0)
    return n == 5, f"{n} eigenvalues below E0"


CHECKS: list[Check] = [
    Check("bessel-wronskian", check_wronskian),
    Check("bessel-reference", check_bessel_reference),
    Check("single-site-closed-form", check_single_site),
    Check("two-point-oracle", check_two_point),
    Check("small-separation-law", check_small_a),
    Check("disc-bracketing", check_disc_bracketing),
    Check("polymer-decoupling", check_polymer),
    Check("strip-threshold", check_strip),
    Check("add-point-monotonicity", check_add_point),
    Check("add-arm-monotonicity", check_add_leg),
    Check("tripod-symmetry", check_tripod),
    Check("bent-chain-binds", check_bound_below_threshold),
    Check("five-states-narrow-angle", check_five_states),
]


def run_checks(checks=None, report=print) -> list[tuple[str, bool, str, float]]:
    """Run every check, reporting one line each; exceptions count as failures."""
    results = []
    for chk in CHECKS if checks is None else checks:
        t0 = time.perf_counter()
        try:
            ok, detail = chk.func()
        except Exception as exc:  # a crashing check is a failing check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        dt = time.perf_counter() - t0
        results.append((chk.name, bool(ok), detail, dt))
        if report is not None:
            report(f"{'PASS' if ok else 'FAIL'}  {chk.name:<26} {detail} ({dt:.1f}s)")
    return results
