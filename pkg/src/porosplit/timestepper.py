"""Single-stage time stepping of the dynamic poroelastic system.

The acceleration uses the three-level second difference
``rho (u^n - 2 u^{n-1} + u^{n-2}) / dt^2``. The remaining terms are weighted
with ``theta1`` (momentum) and ``theta2`` (flux divergence and mass source);
the ``1 - theta`` parts are evaluated at the previous step and moved to the
right-hand side. ``theta1 = theta2 = 1`` is backward Euler.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import coupling, energy
from .discretization import assemble_operators, build_spaces
from .energy import StageRHS, StageState
from .errors import ConfigError, ContractError, ConvergenceError
from .loads import LoadAssembler, LoadSpec
from .model import ThetaParams

SOLVERS = ("monolithic", "undrained-split", "alternating-minimization")


@dataclass(frozen=True, eq=False)
class Problem:
    """A discretised problem: mesh, boundary conditions, material and operators."""

    mesh: object
    bc: object
    material: object
    dofmap: object
    ops: object

    @classmethod
    def build(cls, mesh, bc, material):
        dofmap = build_spaces(mesh, bc)
        return cls(mesh, bc, material, dofmap, assemble_operators(mesh, dofmap, material))


@dataclass(frozen=True, eq=False)
class History:
    u1: np.ndarray          # u^{n-1}
    u2: np.ndarray          # u^{n-2}
    p1: np.ndarray          # p^{n-1}
    q1: np.ndarray          # q^{n-1}
    t: float = 0.0

    def advance(self, state, t):
        return History(state.u, self.u1, state.p, state.q, t)

    @property
    def state(self):
        return StageState(self.u1, self.p1, self.q1)


@dataclass(frozen=True)
class TimeGrid:
    T: float
    N: int

    def __post_init__(self):
        if not (math.isfinite(self.T) and self.T > 0):
            raise ConfigError(f"final time must be positive, got T={self.T}")
        if int(self.N) != self.N or self.N < 1:
            raise ConfigError(f"number of steps must be a positive integer, got N={self.N}")

    @property
    def dt(self):
        return self.T / self.N

    def times(self):
        return np.arange(self.N + 1) * self.dt


def init_history(u0, v0, p0, dt, q0=None):
    """Start values with the first-order ghost step ``u^{-1} = u0 - dt v0``."""
    u0, v0, p0 = (np.asarray(a, dtype=float) for a in (u0, v0, p0))
    if u0.shape != v0.shape:
        raise ContractError(f"u0 has shape {u0.shape} but v0 has shape {v0.shape}")
    q0 = np.zeros(0) if q0 is None else np.asarray(q0, dtype=float)
    return History(u0, u0 - dt * v0, p0, q0)


def _loads(loads, problem):
    if isinstance(loads, LoadAssembler):
        return loads
    return LoadAssembler(loads or LoadSpec(), problem.mesh, problem.dofmap, problem.bc)


def _check_history(hist, ops):
    for name, v, n in (("u1", hist.u1, ops.n_u), ("u2", hist.u2, ops.n_u), ("p1", hist.p1, ops.n_p)):
        if np.shape(v) != (n,):
            raise ContractError(f"history {name} has shape {np.shape(v)}, expected ({n},)")
    if hist.q1.size and hist.q1.shape != (ops.n_q,):
        raise ContractError(f"history q1 has shape {hist.q1.shape}, expected ({ops.n_q},)")


def backward_euler_rhs(hist, loads, problem, t_n, dt):
    """Stage right-hand side of one backward Euler step."""
    ops = problem.ops
    _check_history(hist, ops)
    F, H, G = _loads(loads, problem)(t_n)
    f = ops.M_u @ (2.0 * hist.u1 - hist.u2) / dt**2 + F
    h = dt * H + ops.M_p @ hist.p1 + ops.A_alpha @ hist.u1
    return StageRHS(f, h, G, ThetaParams(1.0, 1.0, dt))


def theta_rhs(hist, loads, problem, t_n, dt, theta1, theta2):
    """Stage right-hand side of the theta-weighted step.

    ``theta1 = theta2 = 1`` gives the backward Euler right-hand side bit for
    bit.
    """
    params = ThetaParams(theta1, theta2, dt)
    ops = problem.ops
    _check_history(hist, ops)
    assemble = _loads(loads, problem)
    F, H, G = assemble(t_n)
    F0, H0, _ = assemble(hist.t) if (theta1 < 1 or theta2 < 1) else (F, H, G)
    q1 = hist.q1 if hist.q1.size else np.zeros(ops.n_q)
    e1, e2 = 1.0 - theta1, 1.0 - theta2

    f = ops.M_u @ (2.0 * hist.u1 - hist.u2) / dt**2 + (theta1 * F + e1 * F0)
    if e1:
        f = f - e1 * (ops.K_C @ hist.u1 - ops.A_alpha.T @ hist.p1)
    h = dt * (theta2 * H + e2 * H0) + ops.M_p @ hist.p1 + ops.A_alpha @ hist.u1
    if e2:
        h = h - e2 * dt * (ops.D @ q1)
    return StageRHS(f, h, G, params)


@dataclass
class Trajectory:
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    reports: list = field(default_factory=list)
    stage_energy: list = field(default_factory=list)
    params: list = field(default_factory=list)

    @property
    def final(self):
        return self.states[-1]


def solve_stage(rhs, problem, settings=None, solver="monolithic", init=None, factors=None):
    """One stage solve with the chosen method; returns ``(state, report)``.

    Iterative solvers start from ``init.u`` with pressure and flux from one
    flow step; the report of a monolithic solve is ``None``.
    """
    ops = problem.ops
    if solver not in SOLVERS:
        raise ConfigError(f"unknown solver {solver!r}; choose from {SOLVERS}")
    if factors is None:
        factors = {}
    reference = coupling.monolithic_solve(rhs, ops, settings, factors)
    if solver == "monolithic":
        return reference, None
    u0 = np.zeros(ops.n_u) if init is None else init.u
    start = coupling.consistent_start(u0, rhs, ops, settings, factors)
    solve = coupling.undrained_split_solve if solver == "undrained-split" else coupling.alternating_minimization_solve
    return solve(start, rhs, ops, settings, reference=reference, factors=factors)


def run(problem, grid, loads=None, settings=None, solver="monolithic", theta=(1.0, 1.0), initial=None):
    """Advance from ``t = 0`` to ``grid.T`` in ``grid.N`` equal steps.

    ``initial`` is an optional ``(u0, v0, p0)`` tuple (zeros by default).
    Each iterative stage starts from the previous step's displacement.

    Raises
    ------
    ConvergenceError
        If a coupled stage does not converge; ``exc.step`` is the step index.
    """
    ops, dt = problem.ops, grid.dt
    theta1, theta2 = theta
    assemble = _loads(loads, problem)
    if initial is None:
        initial = (np.zeros(ops.n_u), np.zeros(ops.n_u), np.zeros(ops.n_p))
    hist = init_history(*initial, dt, q0=np.zeros(ops.n_q))

    factors = {}
    traj = Trajectory()
    traj.times.append(0.0)
    traj.states.append(hist.state)
    for n in range(1, grid.N + 1):
        t_n = n * dt
        if theta1 == 1.0 and theta2 == 1.0:
            rhs = backward_euler_rhs(hist, assemble, problem, t_n, dt)
        else:
            rhs = theta_rhs(hist, assemble, problem, t_n, dt, theta1, theta2)
        state, report = solve_stage(rhs, problem, settings, solver, init=hist.state, factors=factors)
        if report is not None and not report.converged:
            raise ConvergenceError(
                f"step {n} (t={t_n:g}): {report.method} stopped with '{report.stop_reason}'",
                step=n,
                report=report,
            )
        traj.times.append(t_n)
        traj.states.append(state)
        traj.reports.append(report)
        traj.params.append(rhs.params)
        traj.stage_energy.append(energy.evaluate_energy(state.u, state.q, rhs, ops))
        hist = hist.advance(state, t_n)
    return traj


def mechanical_energy(problem, state, previous, dt):
    """Kinetic + elastic + stored fluid energy of a state (velocity by backward difference)."""
    ops = problem.ops
    v = (state.u - previous.u) / dt
    return 0.5 * (v @ (ops.M_u @ v) + state.u @ (ops.K_C @ state.u) + state.p @ (ops.M_p @ state.p))
