"""Sparse symmetric positive definite solves.

``direct`` uses a sparse LU with a symmetric fill-reducing ordering and no
partial pivoting. For a symmetric matrix that is an LDL^T factorisation in
disguise, so the matrix is positive definite exactly when every pivot on
the diagonal of U is positive; that is the definiteness check. ``cg`` is a
Jacobi-preconditioned conjugate gradient that stops on non-positive
curvature.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SolverError

METHODS = ("direct", "cg")


class SPDSolver:
    """Reusable solver for one SPD matrix.

    Parameters
    ----------
    A : sparse matrix
        Symmetric positive definite operator.
    method : {"direct", "cg"}
    tol : float
        Relative residual target for ``cg``.
    name : str
        Block name used in error messages.
    """

    def __init__(self, A, method="direct", tol=1e-12, name="system", maxiter=None):
        if method not in METHODS:
            raise ValueError(f"unknown linear method {method!r}")
        self.A = sp.csc_matrix(A, dtype=float)
        self.method = method
        self.tol = tol
        self.name = name
        self.maxiter = maxiter
        self.last_iterations = 0
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise SolverError(f"{name}: matrix is not square", block=name)
        self._lu = None
        if n == 0:
            return
        if method == "direct":
            self._factorize()
        else:
            d = self.A.diagonal()
            if np.any(d <= 0):
                raise SolverError(f"{name}: non-positive diagonal, operator is not SPD", block=name)
            self._dinv = 1.0 / d

    def _factorize(self):
        try:
            lu = spla.splu(
                self.A,
                permc_spec="MMD_AT_PLUS_A",
                diag_pivot_thresh=0.0,
                options={"SymmetricMode": True},
            )
        except RuntimeError as exc:
            raise SolverError(f"{self.name}: factorization failed ({exc})", block=self.name) from exc
        pivots = lu.U.diagonal()
        if not np.all(np.isfinite(pivots)) or np.any(pivots <= 0):
            raise SolverError(f"{self.name}: operator is not positive definite", block=self.name)
        self._lu = lu

    def solve(self, b):
        b = np.asarray(b, dtype=float)
        if b.shape != (self.A.shape[0],):
            raise SolverError(f"{self.name}: right-hand side has shape {b.shape}", block=self.name)
        if b.size == 0:
            self.last_iterations = 0
            return b.copy()
        if self.method == "direct":
            self.last_iterations = 1
            return self._lu.solve(b)
        return self._pcg(b)

    def _pcg(self, b):
        A, dinv = self.A, self._dinv
        bnorm = np.linalg.norm(b)
        x = np.zeros_like(b)
        if bnorm == 0.0:
            self.last_iterations = 0
            return x
        r = b.copy()
        z = dinv * r
        d = z.copy()
        rz = r @ z
        maxiter = self.maxiter or 10 * len(b)
        for it in range(1, maxiter + 1):
            Ad = A @ d
            curv = d @ Ad
            if curv <= 0:
                raise SolverError(f"{self.name}: negative curvature in CG, operator is not SPD", block=self.name)
            step = rz / curv
            x += step * d
            r -= step * Ad
            if np.linalg.norm(r) <= self.tol * bnorm:
                self.last_iterations = it
                return x
            z = dinv * r
            rz_new = r @ z
            d = z + (rz_new / rz) * d
            rz = rz_new
        raise SolverError(f"{self.name}: CG did not reach tol={self.tol} in {maxiter} iterations", block=self.name)


def spd_solve(A, b, method="direct", tol=1e-12, name="system"):
    """Solve ``A x = b`` for symmetric positive definite ``A``."""
    return SPDSolver(A, method=method, tol=tol, name=name).solve(b)
