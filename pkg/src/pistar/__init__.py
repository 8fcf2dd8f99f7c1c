"""Bound states of two-dimensional point interactions arranged on star graphs.

Modules
-------
specfun   modified Bessel functions ``I0, I1, K0, K1`` and ratios
geometry  star geometries and validated site sets
greens    free-plane and Dirichlet-disc Green's functions
bands     threshold ``E0`` of the straight chain and its strip perturbation
krein     secular matrix, eigenvalues, multiplicities and null vectors
field     eigenfunctions on grids, nodal lines, exports
cli       the ``pistar`` command
"""

from .bands import PolymerModel, StripModel, dz_deps, polymer_threshold, strip_ground
from .geometry import PointSet, StarGeometry, add_site, build_star
from .greens import DiscModel, SpectralPoint, disc_ground, single_site_energy
from .krein import SpectralProblem, Spectrum, find_eigenvalues, ground_state, solve_star, two_point_oracle

__version__ = "0.1.0"
