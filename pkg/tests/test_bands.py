import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pistar.bands import (
    PolymerModel,
    StripModel,
    dz_deps,
    kappa_m,
    lattice_sum_inverse,
    lattice_sum_inverse_three_halves,
    polymer_threshold,
    strip_ground,
    xi_polymer,
    xi_strip,
)
from pistar.errors import DomainError
from pistar.geometry import StarGeometry, build_star
from pistar.greens import SpectralPoint, single_site_energy, xi_plane
from pistar.krein import SpectralProblem, find_eigenvalues

# Fourier series summed directly to 1e7 terms with a Richardson step
# against 5e6 terms (tail ~ N^-2), math.fsum accumulation.
BRUTE_XI = {(1.0, 1.0): 0.20510867955042345, (2.0, 0.5): 0.09479087947409764}
# Sign-change scan of alpha - xi on a 2 x 20001 point kappa grid using the
# real-space form xi_plane + (1/pi) sum_n K0(n l kappa) with scipy's K0.
E0_GRID_SCAN = -2.796583564001575


def _brute_xi(kappa, l, n=10**7):
    c = 2 * math.pi / l

    def partial(count):
        m = np.arange(1, count + 1, dtype=float)
        return math.fsum(1 / np.sqrt((c * m) ** 2 + kappa**2) - 1 / (c * m))

    s = (4 * partial(n) - partial(n // 2)) / 3
    return 1 / (2 * l * kappa) + s / l + math.log(l / (2 * math.pi)) / (2 * math.pi)


def _real_space_xi(kappa, l, n_images=4000):
    special = pytest.importorskip("scipy.special")
    n = np.arange(1, n_images + 1)
    return (-np.euler_gamma - math.log(kappa / 2)) / (2 * math.pi) + special.k0(n * l * kappa).sum() / math.pi


def _strip_mode_sum(kappa, l, eps, n_modes=10**5):
    """Transverse cosine-mode sum of the strip kernel with the lattice sum done first.

    Only even modes survive at the site; subtracting their large-mode
    asymptote ``cos(p phi) / (2 pi p)``, whose sum is a logarithm, leaves
    an absolutely convergent series.
    """
    d = 1 / eps

    def lattice(k):
        return 0.5 / k / np.tanh(l * k / 2)

    p = np.arange(1, n_modes // 2 + 1, dtype=float)
    k = np.sqrt((2 * np.pi * p / d) ** 2 + kappa**2)
    return 2 / d * lattice(kappa) + 2 / d * math.fsum(lattice(k) - d / (4 * np.pi * p)) - math.log(2 * math.pi / d) / (2 * math.pi)


# ---------------------------------------------------------------------------
# kappa_m and lattice sums


def test_kappa_m_examples():
    sp = SpectralPoint(1.0)
    assert kappa_m(0, sp, 1.0) == 1.0
    assert kappa_m(1, sp, 2 * math.pi) == pytest.approx(math.sqrt(2), rel=1e-15)
    m = np.arange(-5, 6)
    np.testing.assert_array_equal(kappa_m(m, sp, 0.7), kappa_m(-m, sp, 0.7))


@pytest.mark.parametrize("kappa, l", [(1.0, 1.0), (0.2, 3.0), (5.0, 0.5)])
def test_lattice_sums_against_two_sided_sums(kappa, l):
    sp = SpectralPoint(kappa)
    m = np.arange(-200_000, 200_001, dtype=float)
    q2 = (2 * np.pi * m / l) ** 2 + kappa**2
    two_sided_inv = math.fsum(1 / q2) + l**2 / (2 * np.pi**2 * 200_000)  # integral tail of 1/q^2
    assert lattice_sum_inverse(sp, l) == pytest.approx(two_sided_inv, rel=1e-9)
    # even summand: m and -m fold onto twice the m >= 1 part plus m = 0
    folded = 1 / kappa**3 + 2 * math.fsum(q2[m > 0] ** -1.5)
    assert math.fsum(q2**-1.5) == pytest.approx(folded, rel=1e-14)
    assert lattice_sum_inverse_three_halves(sp, l) == pytest.approx(folded, rel=1e-10)


# ---------------------------------------------------------------------------
# polymer


@pytest.mark.parametrize("key", list(BRUTE_XI))
def test_xi_polymer_matches_brute_force(key):
    kappa, l = key
    assert xi_polymer(SpectralPoint(kappa), l) == pytest.approx(BRUTE_XI[key], abs=1e-10)


@pytest.mark.slow
def test_brute_force_oracle_reproduces():
    assert _brute_xi(1.0, 1.0) == pytest.approx(BRUTE_XI[(1.0, 1.0)], abs=1e-12)


@pytest.mark.parametrize("kappa, l", [(1.0, 1.0), (0.3, 2.0), (3.0, 0.5), (1.0, 10.0)])
def test_xi_polymer_equals_real_space_sum(kappa, l):
    assert xi_polymer(SpectralPoint(kappa), l) == pytest.approx(_real_space_xi(kappa, l), abs=1e-13)


def test_xi_polymer_decoupling_limit():
    sp = SpectralPoint(1.0)
    assert abs(xi_polymer(sp, 50.0) - xi_plane(sp)) < 1e-6


def test_xi_polymer_monotone():
    assert xi_polymer(SpectralPoint(2.0), 1.0) < xi_polymer(SpectralPoint(1.0), 1.0)
    kappas = np.geomspace(1e-3, 1e3, 300)
    vals = [xi_polymer(SpectralPoint(k), 1.0) for k in kappas]
    assert np.all(np.diff(vals) < 0)


@pytest.mark.parametrize("kappa", [1e-3, 0.1, 1.0, 10.0, 300.0])
def test_series_doubling_self_consistency(kappa):
    sp = SpectralPoint(kappa)
    for n in (256, 1024):
        assert abs(xi_polymer(sp, 1.0, n) - xi_polymer(sp, 1.0, 2 * n)) < 1e-12
        a = lattice_sum_inverse_three_halves(sp, 1.0, n)
        assert abs(a - lattice_sum_inverse_three_halves(sp, 1.0, 2 * n)) < 1e-12 * max(1.0, a)
    sm = StripModel(1.0, 0.0, 0.1)
    assert abs(xi_strip(sm, sp, 256) - xi_strip(sm, sp, 512)) < 1e-12


def test_threshold_against_grid_scan():
    assert polymer_threshold(PolymerModel(1.0, 0.0)) == pytest.approx(E0_GRID_SCAN, rel=1e-10)


def test_threshold_decoupling_limit():
    ref = single_site_energy(0.0)
    assert polymer_threshold(PolymerModel(50.0, 0.0)) == pytest.approx(ref, rel=1e-4)


def test_threshold_increasing_in_alpha():
    e = [polymer_threshold(PolymerModel(1.0, a)) for a in (-0.2, 0.0, 0.2)]
    assert e[0] < e[1] < e[2]


@settings(max_examples=25, deadline=None)
@given(st.floats(-0.5, 0.5), st.floats(0.2, 20.0))
def test_threshold_solves_secular_equation(alpha, l):
    e0 = polymer_threshold(PolymerModel(l, alpha))
    assert xi_polymer(SpectralPoint.from_z(e0), l) == pytest.approx(alpha, abs=1e-10)
    # the chain binds more strongly than a lone site
    assert e0 <= single_site_energy(alpha) * (1 - 1e-15)


def test_models_validate():
    with pytest.raises(DomainError):
        PolymerModel(0.0)
    with pytest.raises(DomainError):
        StripModel(1.0, 0.0, 0.0)
    assert StripModel(1.0, 0.0, 0.25).width == 4.0


# ---------------------------------------------------------------------------
# strip


def test_strip_small_epsilon_limit():
    sp = SpectralPoint(1.0)
    assert abs(xi_strip(StripModel(1.0, 0.0, 1e-6), sp) - xi_polymer(sp, 1.0)) <= 1e-5


@pytest.mark.parametrize("kappa, l, eps", [(1.0, 1.0, 0.2), (1.0, 1.0, 0.05), (2.0, 1.5, 0.1), (0.5, 2.0, 0.3)])
def test_strip_against_mode_sum(kappa, l, eps):
    got = xi_strip(StripModel(l, 0.0, eps), SpectralPoint(kappa))
    assert got == pytest.approx(_strip_mode_sum(kappa, l, eps), abs=1e-6)
    # the truncated mode sum is in fact good to ~1e-10 here
    assert got == pytest.approx(_strip_mode_sum(kappa, l, eps), abs=1e-9)


def test_strip_above_polymer():
    for eps in (0.01, 0.1, 0.5):
        for kappa in np.geomspace(0.05, 20.0, 15):
            sp = SpectralPoint(kappa)
            assert xi_strip(StripModel(1.0, 0.0, eps), sp) > xi_polymer(sp, 1.0)


def test_strip_no_overflow_for_wide_strip():
    sp = SpectralPoint(50.0)
    v = xi_strip(StripModel(1.0, 0.0, 1e-4), sp)
    assert math.isfinite(v)


def test_strip_ground_examples(e0_unit):
    assert strip_ground(StripModel(1.0, 0.0, 1e-4)) == pytest.approx(e0_unit, abs=1e-3)
    for eps in (0.05, 0.1, 0.2):
        assert strip_ground(StripModel(1.0, 0.0, eps)) < e0_unit


def test_dz_deps_matches_finite_difference(e0_unit):
    slope = dz_deps(PolymerModel(1.0, 0.0))
    eps = 1e-5
    fd = (strip_ground(StripModel(1.0, 0.0, eps)) - e0_unit) / eps
    assert slope < 0
    assert fd == pytest.approx(slope, rel=1e-4)


@pytest.mark.parametrize("alpha", [-0.5, 0.0, 0.5])
def test_dz_deps_negative(alpha):
    assert dz_deps(PolymerModel(1.0, alpha)) < 0


# ---------------------------------------------------------------------------
# consistency with the finite star


def test_finite_star_levels_below_threshold_stabilise(e0_unit):
    below, above, ground = [], [], []
    for m in (5, 10, 20):
        spec = find_eigenvalues(SpectralProblem(build_star(StarGeometry(2, (math.pi / 2,), 1.0, m)), 0.0))
        e = spec.energies
        below.append(int(np.count_nonzero(e < e0_unit)))
        above.append(int(np.count_nonzero(e >= e0_unit)))
        ground.append(e[0])
    assert above[0] < above[1] < above[2]
    assert below[1] == below[2] >= 1
    assert abs(ground[2] - ground[1]) < abs(ground[1] - ground[0])
