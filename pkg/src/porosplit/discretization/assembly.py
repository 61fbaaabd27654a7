"""Sparse operators of the three-field stage problem.

All matrices act on reduced coefficient vectors (see :class:`DofMap`):

========  ===========================================  ==========
name      bilinear form                                 shape
========  ===========================================  ==========
M_u       rho <u, v>                                   (n_u, n_u)
K_C       <C e(u), e(v)>                                (n_u, n_u)
K_aa      <(alpha x alpha / c0) e(u), e(v)>             (n_u, n_u)
M_kappa   <kappa^{-1} q, w>                             (n_q, n_q)
A_alpha   int_T alpha : e(u)                            (n_p, n_u)
D         int_T div q                                   (n_p, n_q)
M_p       c0 |T| (diagonal)                             (n_p, n_p)
========  ===========================================  ==========

The flux degree of freedom on an edge is the normal component of the flux
with respect to the edge's global normal, which is the low-to-high tangent
rotated clockwise.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from ..model import SQRT2, check_material, contraction_factor, voigt
from .mesh import SIDES
from .quadrature import gauss_line, triangle_rule


@dataclass(frozen=True, eq=False)
class ElementGeometry:
    coords: np.ndarray      # (nT, 3, 2)
    area: np.ndarray        # (nT,)
    grad: np.ndarray        # (nT, 3, 2) gradients of the barycentric coordinates
    edge_len: np.ndarray    # (nT, 3) length of the edge opposite local vertex k
    edge_sign: np.ndarray   # (nT, 3) +1 where the global edge normal points outward
    normal: np.ndarray      # (nT, 3, 2) outward unit normals


def element_geometry(mesh):
    X = mesh.vertices[mesh.triangles]
    area = mesh.signed_areas()
    ones = np.ones((len(X), 3, 1))
    grad = np.linalg.inv(np.concatenate([ones, X], axis=2))[:, 1:, :].transpose(0, 2, 1)

    e = mesh.edges[mesh.tri_edges]                       # (nT, 3, 2)
    t = mesh.vertices[e[..., 1]] - mesh.vertices[e[..., 0]]
    length = np.hypot(t[..., 0], t[..., 1])
    n_glob = np.stack([t[..., 1], -t[..., 0]], axis=-1) / length[..., None]
    mid = 0.5 * (mesh.vertices[e[..., 0]] + mesh.vertices[e[..., 1]])
    sign = np.where(np.einsum("tki,tki->tk", mid - X, n_glob) > 0, 1.0, -1.0)
    return ElementGeometry(X, area, grad, length, sign, sign[..., None] * n_glob)


def strain_matrices(geom):
    """Voigt strain-displacement matrices, shape (nT, 3, 6).

    Local displacement ordering is ``(v0x, v0y, v1x, v1y, v2x, v2y)``.
    """
    g = geom.grad
    B = np.zeros((len(g), 3, 6))
    B[:, 0, 0::2] = g[:, :, 0]
    B[:, 1, 1::2] = g[:, :, 1]
    B[:, 2, 0::2] = g[:, :, 1] / SQRT2
    B[:, 2, 1::2] = g[:, :, 0] / SQRT2
    return B


def face_basis(geom, bary):
    """Values of the three local face basis functions at barycentric points.

    Returns an array of shape (nT, n_points, 3, 2); entry ``[t, q, k]`` is
    the function attached to the edge opposite local vertex ``k``, whose
    normal component on that edge equals one along the global normal.
    """
    x = np.einsum("qk,tki->tqi", bary, geom.coords)
    scale = geom.edge_sign * geom.edge_len / (2.0 * geom.area[:, None])
    return scale[:, None, :, None] * (x[:, :, None, :] - geom.coords[:, None, :, :])


def _scatter(rows, cols, vals, shape):
    return sp.coo_matrix((vals.ravel(), (rows.ravel(), cols.ravel())), shape=shape).tocsr()


def _sym(A):
    return ((A + A.T) * 0.5).tocsr()


@dataclass(frozen=True, eq=False)
class OperatorSet:
    M_u: sp.csr_matrix
    K_C: sp.csr_matrix
    K_aa: sp.csr_matrix
    M_kappa: sp.csr_matrix
    A_alpha: sp.csr_matrix
    D: sp.csr_matrix
    M_p: sp.dia_matrix
    area: np.ndarray
    c0: np.ndarray
    coupling: np.ndarray    # per-element alpha : C^{-1} : alpha

    @cached_property
    def mp(self):
        """Diagonal of M_p."""
        return self.M_p.diagonal()

    @property
    def n_u(self):
        return self.M_u.shape[0]

    @property
    def n_q(self):
        return self.M_kappa.shape[0]

    @property
    def n_p(self):
        return self.M_p.shape[0]

    @property
    def theoretical_rate(self):
        return contraction_factor(self.coupling.max(), self.c0.min())


def assemble_operators(mesh, dofmap, mat, quad_points=3):
    mat = mat.on(mesh.n_triangles)
    check_material(mat)
    geom = element_geometry(mesh)
    area = geom.area
    nT, nV, nE = mesh.n_triangles, mesh.n_vertices, mesh.n_edges

    udofs = np.empty((nT, 6), dtype=np.int64)
    udofs[:, 0::2] = 2 * mesh.triangles
    udofs[:, 1::2] = 2 * mesh.triangles + 1
    rows6 = np.repeat(udofs[:, :, None], 6, axis=2)
    cols6 = np.repeat(udofs[:, None, :], 6, axis=1)
    tri_rows = np.repeat(np.arange(nT)[:, None], 6, axis=1)

    B = strain_matrices(geom)
    a = voigt(mat.alpha)                                  # (nT, 3)
    KC_e = area[:, None, None] * np.einsum("tai,tab,tbj->tij", B, mat.C, B)
    aB = np.einsum("ta,tai->ti", a, B)                    # alpha : e(phi_i)
    Kaa_e = (area / mat.c0)[:, None, None] * aB[:, :, None] * aB[:, None, :]
    A_e = area[:, None] * aB

    bary, w = triangle_rule(quad_points)
    N = bary                                              # P1 shape values = barycentric coords
    m = np.einsum("q,qk,ql->kl", w, N, N)                 # reference mass / area
    Mu_e = np.zeros((nT, 6, 6))
    scal = (mat.rho * area)[:, None, None] * m[None]
    Mu_e[:, 0::2, 0::2] = scal
    Mu_e[:, 1::2, 1::2] = scal

    phi = face_basis(geom, bary)                          # (nT, nq, 3, 2)
    kinv = np.linalg.inv(mat.kappa)
    Mk_e = area[:, None, None] * np.einsum("q,tqki,tij,tqlj->tkl", w, phi, kinv, phi)
    D_e = geom.edge_sign * geom.edge_len
    edofs = mesh.tri_edges
    rows3 = np.repeat(edofs[:, :, None], 3, axis=2)
    cols3 = np.repeat(edofs[:, None, :], 3, axis=1)
    tri_rows3 = np.repeat(np.arange(nT)[:, None], 3, axis=1)

    uf, qf = dofmap.u_free, dofmap.q_free
    uu = lambda vals: _sym(_scatter(rows6, cols6, vals, (2 * nV, 2 * nV))[uf][:, uf])  # noqa: E731

    return OperatorSet(
        M_u=uu(Mu_e),
        K_C=uu(KC_e),
        K_aa=uu(Kaa_e),
        M_kappa=_sym(_scatter(rows3, cols3, Mk_e, (nE, nE))[qf][:, qf]),
        A_alpha=_scatter(tri_rows, udofs, A_e, (nT, 2 * nV))[:, uf].tocsr(),
        D=_scatter(tri_rows3, edofs, D_e, (nT, nE))[:, qf].tocsr(),
        M_p=sp.diags(mat.c0 * area),
        area=area,
        c0=np.asarray(mat.c0),
        coupling=mat.coupling_strength(),
    )


def divergence_check(mesh, dofmap, ops, n_samples=20, rng=None):
    """Largest mismatch between ``D q`` and the boundary flux of ``q`` per triangle.

    The flux through each triangle boundary is integrated with two-point Gauss
    quadrature of the reconstructed field against geometric outward normals.
    """
    rng = np.random.default_rng(rng)
    geom = element_geometry(mesh)
    s, w = gauss_line(2)
    worst = 0.0
    for _ in range(n_samples):
        q = rng.standard_normal(dofmap.n_q)
        qe = dofmap.q_full(q)[mesh.tri_edges]             # (nT, 3)
        flux = np.zeros(mesh.n_triangles)
        for j in range(3):
            # edge j joins local vertices j+1 and j+2
            bary = np.zeros((len(s), 3))
            bary[:, (j + 1) % 3] = 1.0 - s
            bary[:, (j + 2) % 3] = s
            field = np.einsum("tqki,tk->tqi", face_basis(geom, bary), qe)
            qn = np.einsum("tqi,ti->tq", field, geom.normal[:, j])
            flux += geom.edge_len[:, j] * (qn @ w)
        worst = max(worst, float(np.abs(ops.D @ q - flux).max()))
    return worst


# -- load functionals -------------------------------------------------------

def body_force_vector(mesh, dofmap, force):
    """``int f . v`` for a spatially constant force vector."""
    share = np.repeat(mesh.signed_areas() / 3.0, 3)
    out = np.zeros(2 * mesh.n_vertices)
    for c in range(2):
        np.add.at(out, 2 * mesh.triangles.ravel() + c, share * force[c])
    return out[dofmap.u_free]


def source_vector(mesh, value):
    """``int_T h`` for a spatially constant mass source."""
    return value * mesh.signed_areas()


def darcy_force_vector(mesh, dofmap, g):
    """``int g . w`` for a spatially constant Darcy forcing vector."""
    geom = element_geometry(mesh)
    centroid = geom.coords.mean(axis=1)
    # int_T phi_k = sign |e| / 2 (centroid - x_k)
    integ = 0.5 * (geom.edge_sign * geom.edge_len)[..., None] * (centroid[:, None, :] - geom.coords)
    out = np.zeros(mesh.n_edges)
    np.add.at(out, mesh.tri_edges.ravel(), (integ @ np.asarray(g, dtype=float)).ravel())
    return out[dofmap.q_free]


def traction_vector(mesh, dofmap, side, traction):
    """``int_side t . v ds`` for a constant traction on one side."""
    edges = mesh.edges[mesh.edge_side == SIDES.index(side)]
    length = np.hypot(*(mesh.vertices[edges[:, 1]] - mesh.vertices[edges[:, 0]]).T)
    out = np.zeros(2 * mesh.n_vertices)
    for c in range(2):
        np.add.at(out, 2 * edges.ravel() + c, np.repeat(0.5 * length * traction[c], 2))
    return out[dofmap.u_free]


def boundary_pressure_vector(mesh, dofmap, side, pressure):
    """``-int_side pbar (w . n) ds`` for a constant boundary pressure."""
    geom = element_geometry(mesh)
    out = np.zeros(mesh.n_edges)
    k = SIDES.index(side)
    for t, row in enumerate(mesh.tri_edges):
        for j, e in enumerate(row):
            if mesh.edge_side[e] == k:
                out[e] -= pressure * geom.edge_sign[t, j] * geom.edge_len[t, j]
    return out[dofmap.q_free]
