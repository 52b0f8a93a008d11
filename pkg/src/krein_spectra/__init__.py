"""Discrete Krein-Laplacian spectra on lattice domains.

The Krein (soft) extension of ``-Laplace + V`` is modelled on a uniform grid
by a clamped buckling pencil; the package assembles the operators, solves the
pencil, reconstructs eigenfunctions, builds Dirichlet-to-Neumann maps and fits
Weyl asymptotics to the counting function.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import KreinSpectraError, NumericalError  # noqa: E402
from .geometry import Box, Disk, GridDomain, LShape, Rectangle, RectilinearPolygon, rasterize  # noqa: E402
from .operators import (  # noqa: E402
    Potential,
    assemble_extended,
    assemble_interior,
    assemble_neumann,
    assemble_pencil,
    sample_potential,
)
from .eigensolve import Spectrum, counting, residual, solve_pencil, solve_symmetric  # noqa: E402
from .krein import krein_eigenpairs, krein_spectrum, reconstruct, split_max_domain  # noqa: E402
from .dtn import dtn_map, sigma_lambda  # noqa: E402
from .weyl import fit_counting, kozlov_constant, weyl_coefficient  # noqa: E402

__all__ = [
    "__version__",
    "KreinSpectraError",
    "NumericalError",
    "Box",
    "Disk",
    "GridDomain",
    "LShape",
    "Rectangle",
    "RectilinearPolygon",
    "rasterize",
    "Potential",
    "assemble_extended",
    "assemble_interior",
    "assemble_neumann",
    "assemble_pencil",
    "sample_potential",
    "Spectrum",
    "counting",
    "residual",
    "solve_pencil",
    "solve_symmetric",
    "krein_eigenpairs",
    "krein_spectrum",
    "reconstruct",
    "split_max_domain",
    "dtn_map",
    "sigma_lambda",
    "fit_counting",
    "kozlov_constant",
    "weyl_coefficient",
]
