"""Quantum walks on 2-dimensional simplicial complexes.

Builders for admissible complexes, sparse construction and application of
the walk operator, observables over the walker distribution, homology of
the underlying complex, and structural classifiers.
"""

from .complexes import (
    SimplicialComplex2D,
    build_cylinder,
    build_cylinder_with_tetrahedron,
    build_grid_patch,
    build_moebius,
    build_tether_example,
    build_two_triangles,
    check_admissible,
    check_orientability,
)

__version__ = "0.1.0"

__all__ = [
    "SimplicialComplex2D",
    "build_grid_patch",
    "build_cylinder",
    "build_cylinder_with_tetrahedron",
    "build_moebius",
    "build_two_triangles",
    "build_tether_example",
    "check_admissible",
    "check_orientability",
    "__version__",
]
