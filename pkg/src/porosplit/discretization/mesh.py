"""Structured triangulation of a rectangle."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError

SIDES = ("bottom", "right", "top", "left")
INTERIOR = -1


@dataclass(frozen=True, eq=False)
class Mesh:
    """Triangulated rectangle ``[0, Lx] x [0, Ly]``.

    Vertices are numbered row-major (x fastest). Each grid cell is split
    along its ``(i, j) -> (i+1, j+1)`` diagonal into two counter-clockwise
    triangles. Edges are sorted lexicographically by ``(low vertex, high
    vertex)`` and oriented from the low to the high vertex index.

    ``tri_edges[t, k]`` is the edge of triangle ``t`` opposite its local
    vertex ``k``. ``edge_side`` holds an index into :data:`SIDES` for
    boundary edges and :data:`INTERIOR` otherwise.
    """

    Lx: float
    Ly: float
    nx: int
    ny: int
    vertices: np.ndarray
    triangles: np.ndarray
    edges: np.ndarray
    tri_edges: np.ndarray
    edge_tris: np.ndarray
    edge_side: np.ndarray

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def n_triangles(self):
        return len(self.triangles)

    def signed_areas(self):
        x = self.vertices[self.triangles]
        d1 = x[:, 1] - x[:, 0]
        d2 = x[:, 2] - x[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def edge_lengths(self):
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    def boundary_edges(self, side):
        return np.flatnonzero(self.edge_side == SIDES.index(side))

    def centroids(self):
        return self.vertices[self.triangles].mean(axis=1)


def build_mesh(nx, ny, Lx=1.0, Ly=1.0):
    if int(nx) != nx or int(ny) != ny or nx < 1 or ny < 1:
        raise ConfigError(f"grid counts must be positive integers, got nx={nx}, ny={ny}")
    if not (Lx > 0 and Ly > 0):
        raise ConfigError(f"extents must be positive, got Lx={Lx}, Ly={Ly}")
    nx, ny = int(nx), int(ny)

    i, j = np.meshgrid(np.arange(nx + 1), np.arange(ny + 1))
    vertices = np.column_stack([i.ravel() * (Lx / nx), j.ravel() * (Ly / ny)])
    vid = lambda a, b: b * (nx + 1) + a  # noqa: E731

    ci, cj = np.meshgrid(np.arange(nx), np.arange(ny))
    ci, cj = ci.ravel(), cj.ravel()
    v00, v10 = vid(ci, cj), vid(ci + 1, cj)
    v01, v11 = vid(ci, cj + 1), vid(ci + 1, cj + 1)
    triangles = np.empty((2 * nx * ny, 3), dtype=np.int64)
    triangles[0::2] = np.column_stack([v00, v10, v11])
    triangles[1::2] = np.column_stack([v00, v11, v01])

    # local edge k is opposite local vertex k
    local = triangles[:, [[1, 2], [2, 0], [0, 1]]]
    pairs = np.sort(local.reshape(-1, 2), axis=1)
    edges, inverse = np.unique(pairs, axis=0, return_inverse=True)
    tri_edges = inverse.reshape(-1, 3)

    edge_tris = np.full((len(edges), 2), -1, dtype=np.int64)
    count = np.zeros(len(edges), dtype=np.int64)
    for t, row in enumerate(tri_edges):
        for e in row:
            edge_tris[e, count[e]] = t
            count[e] += 1

    gi = np.column_stack([i.ravel(), j.ravel()])
    a, b = gi[edges[:, 0]], gi[edges[:, 1]]
    edge_side = np.full(len(edges), INTERIOR, dtype=np.int64)
    boundary = count == 1
    for k, (axis, value) in enumerate(((1, 0), (0, nx), (1, ny), (0, 0))):
        on_side = boundary & (a[:, axis] == value) & (b[:, axis] == value)
        edge_side[on_side] = k

    return Mesh(float(Lx), float(Ly), nx, ny, vertices, triangles, edges, tri_edges, edge_tris, edge_side)
