"""Polygonal meshes, mesh families and Voronoi/Delaunay dual pairs."""

from .dual import (
    AcutenessFailure,
    DualityViolation,
    DualMeshPair,
    EdgePatch,
    build_dual_pairing,
    generate_hexa_dual,
    generate_voro_dual,
)
from .generators import generate_ncvx, generate_triangle_mesh, generate_voronoi
from .io import MeshFormatError, read_mesh, write_mesh
from .polymesh import BOUNDARY, MeshError, MeshValidationError, PolygonalMesh

__all__ = [
    "AcutenessFailure",
    "BOUNDARY",
    "DualMeshPair",
    "DualityViolation",
    "EdgePatch",
    "MeshError",
    "MeshFormatError",
    "MeshValidationError",
    "PolygonalMesh",
    "build_dual_pairing",
    "generate_hexa_dual",
    "generate_ncvx",
    "generate_triangle_mesh",
    "generate_voro_dual",
    "generate_voronoi",
    "read_mesh",
    "write_mesh",
]
