"""Stage energy, its derivatives, pressure recovery and the associated norms.

For a stage with right-hand sides ``(f, h, g)`` the energy of a
displacement/flux pair is

    E(u, q) = 1/(2 dt^2) |u|_M^2 + th1/2 <C e(u), e(u)>
              + th1 th2 dt / 2 <kappa^{-1} q, q>
              + th1 / (2 c0) |h - alpha:e(u) - th2 dt div q|^2
              - <f, u> - th1 th2 dt <g, q>,

(the density sits inside ``M_u``). Its minimiser solves the three-field stage
system once the pressure ``p = (h - alpha:e(u) - th2 dt div q) / c0`` is
recovered. Right-hand sides are stored as dual vectors: ``f`` on displacement
dofs, ``h`` as element integrals, ``g`` on flux dofs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ContractError
from .model import ThetaParams


@dataclass(frozen=True, eq=False)
class StageRHS:
    f: np.ndarray
    h: np.ndarray
    g: np.ndarray
    params: ThetaParams

    def __post_init__(self):
        for name in ("f", "h", "g"):
            v = np.asarray(getattr(self, name), dtype=float)
            if not np.all(np.isfinite(v)):
                raise ContractError(f"stage right-hand side {name} has non-finite entries")
            object.__setattr__(self, name, v)

    @classmethod
    def zeros(cls, ops, params):
        return cls(np.zeros(ops.n_u), np.zeros(ops.n_p), np.zeros(ops.n_q), params)

    def check(self, ops):
        _check_sizes(ops, f=self.f, h=self.h, g=self.g)


@dataclass(frozen=True, eq=False)
class StageState:
    u: np.ndarray
    p: np.ndarray
    q: np.ndarray

    @classmethod
    def zeros(cls, ops):
        return cls(np.zeros(ops.n_u), np.zeros(ops.n_p), np.zeros(ops.n_q))


def _check_sizes(ops, u=None, q=None, p=None, f=None, h=None, g=None):
    expected = {"u": ops.n_u, "f": ops.n_u, "q": ops.n_q, "g": ops.n_q, "p": ops.n_p, "h": ops.n_p}
    for name, v in dict(u=u, q=q, p=p, f=f, h=h, g=g).items():
        if v is not None and np.shape(v) != (expected[name],):
            raise ContractError(f"{name} has shape {np.shape(v)}, expected ({expected[name]},)")


def _coeffs(params):
    th1, th2, dt = params.theta1, params.theta2, params.dt
    return th1, th2, dt


def misfit(u, q, rhs, ops):
    """Element integrals of ``h - alpha:e(u) - th2 dt div q``."""
    _check_sizes(ops, u=u, q=q)
    rhs.check(ops)
    return rhs.h - ops.A_alpha @ u - rhs.params.theta2 * rhs.params.dt * (ops.D @ q)


def evaluate_energy(u, q, rhs, ops):
    th1, th2, dt = _coeffs(rhs.params)
    w = misfit(u, q, rhs, ops)
    return float(
        0.5 / dt**2 * (u @ (ops.M_u @ u))
        + 0.5 * th1 * (u @ (ops.K_C @ u))
        + 0.5 * th1 * th2 * dt * (q @ (ops.M_kappa @ q))
        + 0.5 * th1 * (w @ (w / ops.mp))
        - rhs.f @ u
        - th1 * th2 * dt * (rhs.g @ q)
    )


def energy_difference(u1, q1, u0, q0, rhs, ops):
    """``E(u1, q1) - E(u0, q0)`` without subtracting two energy values.

    For a quadratic energy the difference equals the gradient at the
    midpoint applied to the increment, which stays accurate when the two
    energies agree to many digits.
    """
    du, dq = u1 - u0, q1 - q0
    mu, mq = 0.5 * (u1 + u0), 0.5 * (q1 + q0)
    return float(grad_u(mu, mq, rhs, ops) @ du + grad_q(mu, mq, rhs, ops) @ dq)


def grad_u(u, q, rhs, ops):
    th1 = rhs.params.theta1
    p = misfit(u, q, rhs, ops) / ops.mp
    return ops.M_u @ u / rhs.params.dt**2 + th1 * (ops.K_C @ u) - th1 * (ops.A_alpha.T @ p) - rhs.f


def grad_q(u, q, rhs, ops):
    th1, th2, dt = _coeffs(rhs.params)
    p = misfit(u, q, rhs, ops) / ops.mp
    return th1 * th2 * dt * (ops.M_kappa @ q - ops.D.T @ p - rhs.g)


def recover_pressure(u, q, rhs, ops):
    """Piecewise-constant pressure of a displacement/flux pair."""
    return misfit(u, q, rhs, ops) / ops.mp


def mech_norm(v, ops, params):
    th1 = params.theta1
    _check_sizes(ops, u=v)
    av = ops.A_alpha @ v
    val = v @ (ops.M_u @ v) / params.dt**2 + th1 * (v @ (ops.K_C @ v)) + th1 * (av @ (av / ops.mp))
    return float(np.sqrt(max(val, 0.0)))


def flux_norm(w, ops, params):
    th1, th2, dt = _coeffs(params)
    _check_sizes(ops, q=w)
    dw = th2 * dt * (ops.D @ w)
    val = th1 * th2 * dt * (w @ (ops.M_kappa @ w)) + th1 * (dw @ (dw / ops.mp))
    return float(np.sqrt(max(val, 0.0)))


def triple_norm(v, w, ops, params):
    """Energy norm ``|(v, w)|`` induced by the Hessian of the stage energy."""
    th1, th2, dt = _coeffs(params)
    _check_sizes(ops, u=v, q=w)
    mix = ops.A_alpha @ v + th2 * dt * (ops.D @ w)
    val = (
        v @ (ops.M_u @ v) / dt**2
        + th1 * (v @ (ops.K_C @ v))
        + th1 * th2 * dt * (w @ (ops.M_kappa @ w))
        + th1 * (mix @ (mix / ops.mp))
    )
    return float(np.sqrt(max(val, 0.0)))


def state_norm(state, ops, params):
    return triple_norm(state.u, state.q, ops, params)


@dataclass(frozen=True, eq=False)
class HessianBlocks:
    """Blocks of the (constant) Hessian of the stage energy.

    With ``b`` from :func:`linear_terms` the energy equals
    ``x^T H x / 2 - b^T x + const`` for ``x = (u, q)``.
    """

    H_uu: sp.csr_matrix
    H_uq: sp.csr_matrix
    H_qq: sp.csr_matrix

    def full(self):
        return sp.bmat([[self.H_uu, self.H_uq], [self.H_uq.T, self.H_qq]], format="csr")


def hessian_blocks(ops, params):
    th1, th2, dt = _coeffs(params)
    Pinv = sp.diags(1.0 / ops.mp)
    A, D = ops.A_alpha, ops.D
    H_uu = ops.M_u / dt**2 + th1 * ops.K_C + th1 * (A.T @ Pinv @ A)
    H_uq = th1 * th2 * dt * (A.T @ Pinv @ D)
    H_qq = th1 * th2 * dt * ops.M_kappa + th1 * (th2 * dt) ** 2 * (D.T @ Pinv @ D)
    sym = lambda M: ((M + M.T) * 0.5).tocsr()  # noqa: E731
    return HessianBlocks(sym(H_uu), sp.csr_matrix(H_uq), sym(H_qq))


def linear_terms(rhs, ops):
    """Gradient offsets ``(b_u, b_q)``: the energy gradient is ``H x - b``."""
    th1, th2, dt = _coeffs(rhs.params)
    rhs.check(ops)
    hp = rhs.h / ops.mp
    b_u = rhs.f + th1 * (ops.A_alpha.T @ hp)
    b_q = th1 * th2 * dt * (rhs.g + ops.D.T @ hp)
    return b_u, b_q
