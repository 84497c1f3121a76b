"""cgks2d: third-order compact gas-kinetic scheme for 2D compressible flow.

A finite-volume Navier-Stokes solver on quadrilateral meshes with
compact Hermite reconstruction, a BGK interface flux with exact time
dependence, two-stage fourth-order time integration, and three wall
boundary treatments (gradient-based, ghost-cell, and one-sided on
curved geometry) plus a kinetic isothermal-wall flux with exact mass
no-penetration.
"""

__version__ = "0.1.0"

from .kinetic import DEFAULT_K, MaxwellianParams, PositivityError
from .mesh import MeshError, build_geometry, read_mesh, write_mesh
from .recon import METHOD_GG, METHOD_GHOST, METHOD_ONESIDED, Reconstructor
from .stepper import NumericalError, Solver
from .cases import CaseSpec, make_case, build_mesh, build_solver

__all__ = [
    "DEFAULT_K", "MaxwellianParams", "PositivityError",
    "MeshError", "build_geometry", "read_mesh", "write_mesh",
    "METHOD_GG", "METHOD_GHOST", "METHOD_ONESIDED", "Reconstructor",
    "NumericalError", "Solver",
    "CaseSpec", "make_case", "build_mesh", "build_solver",
]
