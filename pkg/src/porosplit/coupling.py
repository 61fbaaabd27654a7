"""Stage solvers: monolithic, alternating minimisation and undrained split.

The undrained split alternates

* a mechanics solve at frozen pressure, stabilised with
  ``th1 (alpha x alpha / c0)``, and
* a flow solve (pressure and flux) at frozen displacement,

and produces the same iterates as block-coordinate minimisation of the
stage energy over displacement and flux. Both report their error against
the monolithic minimiser in the energy norm, where the error contracts at
least by ``x / (c0 + x)`` per iteration, ``x = max alpha : C^{-1} : alpha``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import energy
from .energy import StageState
from .errors import ConfigError
from .linalg import METHODS, SPDSolver

EPS = np.finfo(float).eps


@dataclass(frozen=True)
class SolverSettings:
    tol_outer: float = 1e-10
    max_outer: int = 200
    tol_lin: float = 1e-12
    method: str = "direct"

    def __post_init__(self):
        if not self.tol_outer > 0 or not self.tol_lin > 0:
            raise ConfigError("solver tolerances must be positive")
        if int(self.max_outer) != self.max_outer or self.max_outer < 1:
            raise ConfigError(f"max_outer must be an integer >= 1, got {self.max_outer}")
        if self.method not in METHODS:
            raise ConfigError(f"inner method must be one of {METHODS}, got {self.method!r}")


@dataclass
class IterationReport:
    """Per-iteration diagnostics of one stage solve.

    Row ``k`` refers to iterate ``k``; row 0 is the initial guess. ``factor``
    is ``err_norm[k] / err_norm[k-1]`` and NaN where undefined or where the
    previous error is at round-off level.
    """

    theory_rate: float
    method: str = ""
    energy_gap: list = field(default_factory=list)
    err_norm: list = field(default_factory=list)
    factor: list = field(default_factory=list)
    increment: list = field(default_factory=list)
    mech_iters: list = field(default_factory=list)
    flow_iters: list = field(default_factory=list)
    half_energies: list = field(default_factory=list)
    iterates: list = field(default_factory=list)
    energy_min: float = math.nan
    converged: bool = False
    stop_reason: str = ""
    gap_norm_constant: float = math.nan
    gap_norm_spread: float = math.nan

    @property
    def iterations(self):
        return len(self.err_norm) - 1

    @property
    def max_factor(self):
        vals = [f for f in self.factor if not math.isnan(f)]
        return max(vals) if vals else math.nan

    def rows(self):
        return [
            {
                "k": k,
                "energy_gap": self.energy_gap[k],
                "err_norm": self.err_norm[k],
                "factor": self.factor[k],
                "theory_rate": self.theory_rate,
            }
            for k in range(len(self.err_norm))
        ]

    def summary(self):
        return {
            "method": self.method,
            "iterations": self.iterations,
            "converged": self.converged,
            "stop_reason": self.stop_reason,
            "theory_rate": self.theory_rate,
            "max_factor": self.max_factor,
            "energy_min": self.energy_min,
            "gap_norm_constant": self.gap_norm_constant,
            "gap_norm_spread": self.gap_norm_spread,
        }

    def to_dict(self):
        out = self.summary()
        out.update(
            energy_gap=list(self.energy_gap),
            err_norm=list(self.err_norm),
            factor=list(self.factor),
            increment=list(self.increment),
            mech_iters=list(self.mech_iters),
            flow_iters=list(self.flow_iters),
        )
        return out


class StageSolver:
    """Factorisations shared by the solvers of one stage problem.

    Operators are built and factorised on first use and reused across
    iterations. Passing the same ``factors`` dict to solvers of later stages
    with the same operators reuses the factorisations across time steps.
    """

    def __init__(self, rhs, ops, settings=None, factors=None):
        rhs.check(ops)
        self.rhs = rhs
        self.ops = ops
        self.params = rhs.params
        self.settings = settings or SolverSettings()
        self._factors = {} if factors is None else factors
        self._b = None

    def _cached(self, key, build):
        full_key = (key, id(self.ops), self.params, self.settings.method, self.settings.tol_lin)
        if full_key not in self._factors:
            self._factors[full_key] = build()
        return self._factors[full_key]

    def _solver(self, key, build):
        s = self.settings
        return self._cached(key, lambda: SPDSolver(build(), method=s.method, tol=s.tol_lin, name=key))

    @property
    def hessian(self):
        return self._cached("hessian", lambda: energy.hessian_blocks(self.ops, self.params))

    # -- undrained split ---------------------------------------------------

    def mechanics_operator(self):
        ops, th1, dt = self.ops, self.params.theta1, self.params.dt
        return ops.M_u / dt**2 + th1 * (ops.K_C + ops.K_aa)

    def flow_operator(self):
        ops, th2, dt = self.ops, self.params.theta2, self.params.dt
        Pinv = sp.diags(1.0 / ops.mp)
        A = ops.M_kappa + th2 * dt * (ops.D.T @ Pinv @ ops.D)
        return ((A + A.T) * 0.5).tocsr()

    def mechanics_step(self, u_prev, p_prev):
        ops, th1 = self.ops, self.params.theta1
        solver = self._solver("mechanics", self.mechanics_operator)
        b = self.rhs.f + th1 * (ops.K_aa @ u_prev) + th1 * (ops.A_alpha.T @ p_prev)
        u = solver.solve(b)
        self.last_mech_iters = solver.last_iterations
        return u

    def flow_step(self, u):
        ops, rhs = self.ops, self.rhs
        solver = self._solver("flow", self.flow_operator)
        b = rhs.g + ops.D.T @ ((rhs.h - ops.A_alpha @ u) / ops.mp)
        q = solver.solve(b)
        self.last_flow_iters = solver.last_iterations
        return energy.recover_pressure(u, q, rhs, ops), q

    # -- alternating minimisation -------------------------------------------

    def minimize_u(self, q):
        H = self.hessian
        solver = self._solver("energy-u", lambda: H.H_uu)
        b_u, _ = self._linear_terms()
        u = solver.solve(b_u - H.H_uq @ q)
        self.last_mech_iters = solver.last_iterations
        return u

    def minimize_q(self, u):
        H = self.hessian
        solver = self._solver("energy-q", lambda: H.H_qq)
        _, b_q = self._linear_terms()
        q = solver.solve(b_q - H.H_uq.T @ u)
        self.last_flow_iters = solver.last_iterations
        return q

    def _linear_terms(self):
        if self._b is None:
            self._b = energy.linear_terms(self.rhs, self.ops)
        return self._b

    # -- monolithic --------------------------------------------------------

    def monolithic(self):
        n_u = self.ops.n_u
        solver = self._solver("monolithic", lambda: self.hessian.full())
        x = solver.solve(np.concatenate(self._linear_terms()))
        u, q = x[:n_u], x[n_u:]
        return StageState(u, energy.recover_pressure(u, q, self.rhs, self.ops), q)


def spd_solve(A, b, settings=None, name="system"):
    settings = settings or SolverSettings()
    return SPDSolver(A, method=settings.method, tol=settings.tol_lin, name=name).solve(b)


def mechanics_step(u_prev_it, p_prev_it, rhs, ops, settings=None):
    """Stabilised mechanics update at frozen pressure."""
    return StageSolver(rhs, ops, settings).mechanics_step(u_prev_it, p_prev_it)


def flow_step(u_new, rhs, ops, settings=None):
    """Pressure and flux update at frozen displacement; returns ``(p, q)``."""
    return StageSolver(rhs, ops, settings).flow_step(u_new)


def monolithic_solve(rhs, ops, settings=None, factors=None):
    """Joint minimiser of the stage energy, with the pressure recovered."""
    return StageSolver(rhs, ops, settings, factors).monolithic()


def consistent_start(u0, rhs, ops, settings=None, factors=None):
    """Initial state ``(u0, p, q)`` with ``(p, q)`` from one flow step."""
    p, q = StageSolver(rhs, ops, settings, factors).flow_step(u0)
    return StageState(np.array(u0, dtype=float), p, q)


def stage_residuals(state, rhs, ops):
    """Relative residuals of the three stage equations.

    Each residual is scaled by the largest norm among the terms of its
    equation, so 0 means exact and 1 means no cancellation at all.
    """
    th1, th2, dt = rhs.params.theta1, rhs.params.theta2, rhs.params.dt
    u, p, q = state.u, state.p, state.q
    terms = {
        "momentum": [ops.M_u @ u / dt**2, th1 * (ops.K_C @ u), -th1 * (ops.A_alpha.T @ p), -rhs.f],
        "mass": [ops.M_p @ p, ops.A_alpha @ u, th2 * dt * (ops.D @ q), -rhs.h],
        "darcy": [ops.M_kappa @ q, -(ops.D.T @ p), -rhs.g],
    }
    out = {}
    for name, parts in terms.items():
        scale = max((np.linalg.norm(t) for t in parts), default=0.0)
        res = np.linalg.norm(sum(parts)) if parts[0].size else 0.0
        out[name] = float(res / scale) if scale > 0 else 0.0
    return out


def _iterate(method, init, rhs, ops, settings, step, reference, keep_iterates, track_half, factors):
    settings = settings or SolverSettings()
    solver = StageSolver(rhs, ops, settings, factors)
    params = rhs.params
    if reference is None:
        reference = solver.monolithic()
    e_star = energy.evaluate_energy(reference.u, reference.q, rhs, ops)
    report = IterationReport(theory_rate=ops.theoretical_rate, method=method, energy_min=e_star)

    def err(s):
        return energy.triple_norm(s.u - reference.u, s.q - reference.q, ops, params)

    def record(s, inc, mech, flow):
        e = err(s)
        report.err_norm.append(e)
        report.energy_gap.append(energy.energy_difference(s.u, s.q, reference.u, reference.q, rhs, ops))
        report.increment.append(inc)
        report.mech_iters.append(mech)
        report.flow_iters.append(flow)
        if len(report.err_norm) == 1:
            report.factor.append(math.nan)
        else:
            prev = report.err_norm[-2]
            ok = prev >= 1e3 * EPS * report.err_norm[0] and prev > 0
            report.factor.append(e / prev if ok else math.nan)
        if keep_iterates:
            report.iterates.append(s)

    state = StageState(*(np.array(v, dtype=float) for v in (init.u, init.p, init.q)))
    record(state, math.nan, 0, 0)
    # |e^k| <= r / (1 - r) |x^k - x^{k-1}| under contraction factor r
    amplify = max(1.0, report.theory_rate / (1.0 - report.theory_rate))
    first_inc = None
    for k in range(1, settings.max_outer + 1):
        new, half = step(solver, state)
        if track_half:
            report.half_energies.append(half)
        inc = energy.triple_norm(new.u - state.u, new.q - state.q, ops, params)
        state = new
        record(state, inc, getattr(solver, "last_mech_iters", 0), getattr(solver, "last_flow_iters", 0))
        if first_inc is None:
            first_inc = inc
            if inc <= settings.tol_outer * energy.state_norm(state, ops, params):
                report.converged, report.stop_reason = True, "initial guess is a fixed point"
                break
        if amplify * inc <= settings.tol_outer * first_inc:
            report.converged, report.stop_reason = True, "increment below tolerance"
            break
    else:
        report.stop_reason = f"max_outer={settings.max_outer} reached"

    _gap_norm_constant(report)
    return state, report


def _gap_norm_constant(report):
    """Ratio of energy gap to squared error while the error is resolvable.

    The reference minimiser carries a small solve error ``d``; it adds a
    term of order ``|d| |e|`` to the gap, so the ratio is only meaningful
    while ``|e|`` is well above ``|d|``. Iterates with ``|e^k| < 1e-5 |e^0|``
    are skipped.
    """
    e0 = report.err_norm[0]
    ratios = [
        g / e**2
        for g, e in zip(report.energy_gap, report.err_norm)
        if e > 0 and e >= 1e-5 * e0
    ]
    if ratios:
        c = float(np.mean(ratios))
        report.gap_norm_constant = c
        report.gap_norm_spread = float(max(abs(r - c) for r in ratios) / abs(c))


def _split_step(solver, state):
    u = solver.mechanics_step(state.u, state.p)
    p, q = solver.flow_step(u)
    return StageState(u, p, q), None


def _am_step(solver, state):
    rhs, ops = solver.rhs, solver.ops
    u = solver.minimize_u(state.q)
    e_half = energy.evaluate_energy(u, state.q, rhs, ops)
    q = solver.minimize_q(u)
    e_full = energy.evaluate_energy(u, q, rhs, ops)
    return StageState(u, energy.recover_pressure(u, q, rhs, ops), q), (e_half, e_full)


def undrained_split_solve(init, rhs, ops, settings=None, *, reference=None, keep_iterates=False, factors=None):
    """Iterate the undrained split from ``(init.u, init.p)``.

    ``init.q`` only enters the error of the initial guess. Returns the last
    iterate and an :class:`IterationReport`; non-convergence is flagged in
    the report, not raised.
    """
    return _iterate(
        "undrained-split", init, rhs, ops, settings, _split_step, reference, keep_iterates, False, factors
    )


def alternating_minimization_solve(
    init, rhs, ops, settings=None, *, reference=None, keep_iterates=False, factors=None
):
    """Block-coordinate minimisation of the stage energy from ``(init.u, init.q)``.

    ``report.half_energies`` holds the energies after each displacement and
    each flux update.
    """
    return _iterate(
        "alternating-minimization", init, rhs, ops, settings, _am_step, reference, keep_iterates, True, factors
    )
