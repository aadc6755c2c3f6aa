"""netmesh: hierarchical simplicial grids for embedded networks.

Line and triangle grids in R^w with non-manifold facet sharing,
non-conforming red refinement, element parametrizations, runtime growth
and shrinkage, Gmsh/VTK I/O, and finite-volume demo solvers for vessel
networks and growing root systems.
"""

from .errors import (
    DimensionMismatchError,
    FactoryError,
    LifecycleError,
    MeshError,
    MshParseError,
    NeighborIndexError,
    ScenarioError,
    SingularGeometryError,
    SingularSystemError,
    StaleEntityError,
)
from .geometry import AffineGeometry
from .gmsh_io import read_gmsh
from .intersections import intersections, pairwise_intersections
from .topology import (
    LINE,
    TRIANGLE,
    Grid,
    GridConfig,
    GridFactory,
    SimplexKind,
    audit_grid,
)
from .vtk_io import write_vtk

__all__ = [
    "AffineGeometry",
    "DimensionMismatchError",
    "FactoryError",
    "Grid",
    "GridConfig",
    "GridFactory",
    "LINE",
    "LifecycleError",
    "MeshError",
    "MshParseError",
    "NeighborIndexError",
    "ScenarioError",
    "SimplexKind",
    "SingularGeometryError",
    "SingularSystemError",
    "StaleEntityError",
    "TRIANGLE",
    "audit_grid",
    "intersections",
    "pairwise_intersections",
    "read_gmsh",
    "write_vtk",
]

__version__ = "0.1.0"
