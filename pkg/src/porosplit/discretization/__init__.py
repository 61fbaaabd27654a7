"""Mesh, discrete spaces and operator assembly."""
from .assembly import (
    OperatorSet,
    assemble_operators,
    body_force_vector,
    boundary_pressure_vector,
    darcy_force_vector,
    divergence_check,
    element_geometry,
    source_vector,
    traction_vector,
)
from .mesh import SIDES, Mesh, build_mesh
from .spaces import BCSpec, DofMap, SideBC, build_spaces

__all__ = [
    "BCSpec",
    "DofMap",
    "Mesh",
    "OperatorSet",
    "SIDES",
    "SideBC",
    "assemble_operators",
    "body_force_vector",
    "boundary_pressure_vector",
    "build_mesh",
    "build_spaces",
    "darcy_force_vector",
    "divergence_check",
    "element_geometry",
    "source_vector",
    "traction_vector",
]
