"""Boundary conditions and degree-of-freedom numbering.

Displacement lives on vertices (two components each, continuous piecewise
linear), flux on edges (one normal component each, lowest-order face
element), pressure on triangles (piecewise constant). Homogeneous essential
conditions are imposed by removing the constrained degrees of freedom.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError
from .mesh import SIDES

DISPLACEMENT_KINDS = ("fixed", "fixed_x", "fixed_y", "free", "traction")
FLOW_KINDS = ("impermeable", "drained")


@dataclass(frozen=True)
class SideBC:
    """Conditions on one side of the rectangle.

    ``traction`` is the reference traction vector (used when
    ``displacement == "traction"``) and ``pressure`` the reference boundary
    pressure (used when ``flow == "drained"``); both are scaled in time by
    the load profiles.
    """

    displacement: str = "free"
    flow: str = "impermeable"
    traction: tuple = (0.0, 0.0)
    pressure: float = 0.0

    def __post_init__(self):
        if self.displacement not in DISPLACEMENT_KINDS:
            raise ConfigError(f"unknown displacement condition {self.displacement!r}")
        if self.flow not in FLOW_KINDS:
            raise ConfigError(f"unknown flow condition {self.flow!r}")
        object.__setattr__(self, "traction", tuple(float(t) for t in self.traction))
        if len(self.traction) != 2:
            raise ConfigError("traction must have two components")

    @property
    def fixed_components(self):
        return {"fixed": (0, 1), "fixed_x": (0,), "fixed_y": (1,)}.get(self.displacement, ())


@dataclass(frozen=True)
class BCSpec:
    sides: dict = field(default_factory=lambda: {s: SideBC() for s in SIDES})

    def __post_init__(self):
        missing = set(SIDES) - set(self.sides)
        extra = set(self.sides) - set(SIDES)
        if missing or extra:
            raise ConfigError(
                f"boundary conditions must name exactly {SIDES}; missing {sorted(missing)}, unknown {sorted(extra)}"
            )

    @classmethod
    def uniform(cls, displacement="free", flow="impermeable"):
        return cls({s: SideBC(displacement, flow) for s in SIDES})

    def __getitem__(self, side):
        return self.sides[side]


@dataclass(frozen=True, eq=False)
class DofMap:
    """Reduced numbering of the three fields.

    ``u_free`` lists the kept global displacement indices ``2 * vertex +
    component``; ``q_free`` the kept edges. Reduced vectors are ordered as
    these arrays; pressure is never reduced.
    """

    n_vertices: int
    n_edges: int
    n_triangles: int
    u_free: np.ndarray
    q_free: np.ndarray

    @property
    def n_u(self):
        return len(self.u_free)

    @property
    def n_q(self):
        return len(self.q_free)

    @property
    def n_p(self):
        return self.n_triangles

    def u_full(self, u):
        out = np.zeros(2 * self.n_vertices)
        out[self.u_free] = u
        return out

    def q_full(self, q):
        out = np.zeros(self.n_edges)
        out[self.q_free] = q
        return out

    def slices(self):
        """Slices of the stacked ``(u, q, p)`` vector."""
        a, b = self.n_u, self.n_u + self.n_q
        return slice(0, a), slice(a, b), slice(b, b + self.n_p)


def build_spaces(mesh, bc):
    if mesh.n_triangles == 0:
        raise ConfigError("mesh has no triangles")
    fixed = np.zeros((mesh.n_vertices, 2), dtype=bool)
    blocked = np.zeros(mesh.n_edges, dtype=bool)
    for k, side in enumerate(SIDES):
        edges = np.flatnonzero(mesh.edge_side == k)
        verts = np.unique(mesh.edges[edges])
        for c in bc[side].fixed_components:
            fixed[verts, c] = True
        if bc[side].flow == "impermeable":
            blocked[edges] = True
    if not fixed.any():
        warnings.warn(
            "no displacement component is fixed: singular mechanics operator "
            "compensated by mass term",
            RuntimeWarning,
            stacklevel=2,
        )
    u_free = np.flatnonzero(~fixed.ravel())
    q_free = np.flatnonzero(~blocked)
    return DofMap(mesh.n_vertices, mesh.n_edges, mesh.n_triangles, u_free, q_free)
