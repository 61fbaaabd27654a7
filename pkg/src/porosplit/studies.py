"""Verification studies behind the CLI scenarios.

Each study returns plain data (dicts, lists, reports) plus named boolean
gates; writing files is left to :mod:`porosplit.cli`.
"""
from __future__ import annotations

import math

import numpy as np

from . import coupling, energy
from .coupling import SolverSettings
from .energy import StageRHS
from .loads import LoadAssembler
from .model import ThetaParams
from .timestepper import History, Problem, TimeGrid, run, theta_rhs

FACTOR_SLACK = 1e-8
GAP_SLACK = 1e-12


def random_stage_rhs(ops, params, seed=0):
    """Standard normal right-hand side; exercises every mode of the error."""
    rng = np.random.default_rng(seed)
    return StageRHS(
        rng.standard_normal(ops.n_u), rng.standard_normal(ops.n_p), rng.standard_normal(ops.n_q), params
    )


def first_stage_rhs(problem, loads, params):
    """Right-hand side of the first step from rest at ``t = dt``."""
    ops = problem.ops
    hist = History(np.zeros(ops.n_u), np.zeros(ops.n_u), np.zeros(ops.n_p), np.zeros(ops.n_q))
    assemble = LoadAssembler(loads, problem.mesh, problem.dofmap, problem.bc)
    return theta_rhs(hist, assemble, problem, params.dt, params.dt, params.theta1, params.theta2)


def factor_gate(report, slack=FACTOR_SLACK):
    """True if every defined observed factor is at most ``theory_rate + slack``."""
    return all(math.isnan(f) or f <= report.theory_rate + slack for f in report.factor)


def gap_recursion_gate(report, slack=GAP_SLACK):
    """``gap_k <= rate^2 gap_{k-1} + slack gap_0`` for every ``k >= 1``."""
    g, r2 = report.energy_gap, report.theory_rate**2
    return all(g[k] <= r2 * g[k - 1] + slack * g[0] for k in range(1, len(g)))


def split_run(rhs, ops, settings=None, solver="undrained-split", keep_iterates=False):
    """Iterate one stage from rest (zero displacement, consistent flow)."""
    factors = {}
    reference = coupling.monolithic_solve(rhs, ops, settings, factors)
    start = coupling.consistent_start(np.zeros(ops.n_u), rhs, ops, settings, factors)
    solve = (
        coupling.undrained_split_solve
        if solver == "undrained-split"
        else coupling.alternating_minimization_solve
    )
    state, report = solve(
        start, rhs, ops, settings, reference=reference, keep_iterates=keep_iterates, factors=factors
    )
    return state, report, reference


def contraction_study(mesh, bc, material, c0_values, params, rhs_spec, loads, settings=None):
    """Run the undrained split once per storage coefficient.

    ``rhs_spec`` is ``{"kind": "random" | "loads", "seed": int}``. Returns
    one entry per ``c0`` with the report and its gates.
    """
    out = []
    for c0 in c0_values:
        problem = Problem.build(mesh, bc, material.replace(c0=np.full(len(material), c0)))
        if rhs_spec.get("kind") == "random":
            rhs = random_stage_rhs(problem.ops, params, rhs_spec.get("seed", 0))
        else:
            rhs = first_stage_rhs(problem, loads, params)
        _, report, _ = split_run(rhs, problem.ops, settings)
        out.append(
            {
                "c0": float(c0),
                "report": report,
                "gates": {
                    "converged": report.converged,
                    "factor_bound": factor_gate(report),
                    "gap_recursion": gap_recursion_gate(report),
                },
            }
        )
    return out


def equivalence_check(rhs, ops, settings=None):
    """Largest iterate-wise discrepancy of the two iterative solvers.

    Discrepancies are triple norms relative to the norm of the monolithic
    solution; both solvers start from the same state and run the same
    number of iterations.
    """
    settings = settings or SolverSettings()
    _, split, ref = split_run(rhs, ops, settings, "undrained-split", keep_iterates=True)
    fixed = SolverSettings(
        tol_outer=settings.tol_outer,
        max_outer=max(split.iterations, 1),
        tol_lin=settings.tol_lin,
        method=settings.method,
    )
    _, am, _ = split_run(rhs, ops, fixed, "alternating-minimization", keep_iterates=True)
    scale = energy.state_norm(ref, ops, rhs.params) or 1.0
    n = min(len(split.iterates), len(am.iterates))
    diffs = [
        energy.triple_norm(a.u - b.u, a.q - b.q, ops, rhs.params) / scale
        for a, b in zip(split.iterates[:n], am.iterates[:n])
    ]
    return {
        "iterations": n - 1,
        "discrepancy": diffs,
        "max_discrepancy": max(diffs),
        "split": split,
        "am": am,
    }


def observed_orders(steps, errors):
    """Orders ``log(e_i / e_{i+1}) / log(dt_i / dt_{i+1})`` of consecutive runs."""
    out = []
    for (d0, e0), (d1, e1) in zip(zip(steps, errors), zip(steps[1:], errors[1:])):
        out.append(math.log(e0 / e1) / math.log(d0 / d1) if e0 > 0 and e1 > 0 else math.nan)
    return out


def time_convergence(problem, T, N_values, loads, reference_factor=64, theta=(1.0, 1.0)):
    """Self-convergence of the final state against a fine monolithic run.

    The reference uses ``min(N_values) * reference_factor`` steps. Errors
    are final-time triple norms of ``(u, q)`` relative to the reference
    state. ``error`` measures every run in the stage norm of the reference
    step, one fixed norm for all runs; ``error_stage`` uses the stage norm
    of each run's own step and is reported for comparison only.
    """
    N_values = sorted(N_values)
    ops = problem.ops
    N_ref = N_values[0] * reference_factor
    ref = run(problem, TimeGrid(T, N_ref), loads, theta=theta)
    ref_state, ref_params = ref.final, ref.params[-1]

    def rel(du, dq, params):
        scale = energy.state_norm(ref_state, ops, params)
        return energy.triple_norm(du, dq, ops, params) / (scale if scale > 0 else 1.0)

    rows = []
    for N in N_values:
        traj = run(problem, TimeGrid(T, N), loads, theta=theta)
        du, dq = traj.final.u - ref_state.u, traj.final.q - ref_state.q
        rows.append(
            {
                "N": N,
                "dt": T / N,
                "error": rel(du, dq, ref_params),
                "error_stage": rel(du, dq, traj.params[-1]),
            }
        )
    dts = [r["dt"] for r in rows]
    orders = observed_orders(dts, [r["error"] for r in rows])
    stage = observed_orders(dts, [r["error_stage"] for r in rows])
    for r, o, f in zip(rows, [math.nan] + orders, [math.nan] + stage):
        r["order"], r["order_stage"] = o, f
    return {"N_ref": N_ref, "rows": rows, "min_order": min(orders), "min_order_stage": min(stage)}


def top_vertices(mesh):
    return np.flatnonzero(np.isclose(mesh.vertices[:, 1], mesh.Ly))


def bottom_triangles(mesh):
    """Triangles with an edge on the bottom side."""
    edges = mesh.boundary_edges("bottom")
    return np.unique(mesh.edge_tris[edges].ravel()[mesh.edge_tris[edges].ravel() >= 0])


def column_series(problem, trajectory):
    """Mean top vertical displacement and mean basal pressure per time."""
    mesh, dm = problem.mesh, problem.dofmap
    top, bottom = top_vertices(mesh), bottom_triangles(mesh)
    rows = []
    for t, s in zip(trajectory.times, trajectory.states):
        u = dm.u_full(s.u).reshape(-1, 2)
        rows.append(
            {"t": t, "top_displacement": float(u[top, 1].mean()), "basal_pressure": float(s.p[bottom].mean())}
        )
    return rows


def trajectory_norms(problem, trajectory):
    """Per-step norms of a trajectory (start state uses the first step's parameters)."""
    ops = problem.ops
    params = [trajectory.params[0] if trajectory.params else ThetaParams()] + list(trajectory.params)
    out = []
    for n, (t, s, prm) in enumerate(zip(trajectory.times, trajectory.states, params)):
        row = {
            "step": n,
            "t": t,
            "u_l2": float(np.linalg.norm(s.u)),
            "p_l2": float(np.linalg.norm(s.p)),
            "q_l2": float(np.linalg.norm(s.q)),
            "triple_norm": energy.state_norm(s, ops, prm),
        }
        if n > 0:
            rep = trajectory.reports[n - 1]
            row["stage_energy"] = trajectory.stage_energy[n - 1]
            row["iterations"] = rep.iterations if rep is not None else 0
        out.append(row)
    return out


__all__ = [
    "bottom_triangles",
    "column_series",
    "contraction_study",
    "equivalence_check",
    "factor_gate",
    "first_stage_rhs",
    "gap_recursion_gate",
    "observed_orders",
    "random_stage_rhs",
    "split_run",
    "time_convergence",
    "top_vertices",
    "trajectory_norms",
]
