"""Command line front end.

::

    porosplit validate --config scenario.json
    porosplit run --config scenario.json --out results/

``run`` writes the scenario's CSV/JSON files and finally ``manifest.json``
listing every file with its SHA-256 checksum. The exit code is 0 iff every
in-run gate passes, 1 if a gate fails and 2 for invalid input.
"""
from __future__ import annotations

import argparse
import logging
import math
import platform
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__, studies
from .config import load_config
from .discretization import build_mesh
from .errors import ConfigError, ConvergenceError
from .report import sha256, write_json, write_report, write_table
from .timestepper import Problem, TimeGrid, run

log = logging.getLogger("porosplit")


@dataclass
class RunArtifacts:
    out_dir: Path
    files: list = field(default_factory=list)
    gates: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    manifest: Path | None = None

    @property
    def passed(self):
        return all(self.gates.values())

    def add(self, path):
        self.files.append(Path(path))
        return path


def _mesh(cfg):
    m = cfg.mesh
    return build_mesh(m["nx"], m["ny"], m["Lx"], m["Ly"])


def _contraction(cfg, art):
    c0_values = cfg.sweep.get("c0") or [float(cfg.material.c0[0])]
    results = studies.contraction_study(
        _mesh(cfg), cfg.bc, cfg.material, c0_values, cfg.params, cfg.rhs, cfg.loads, cfg.settings
    )
    entries = []
    for res in results:
        rep, c0 = res["report"], res["c0"]
        art.add(write_report(rep, art.out_dir / f"contraction_c0_{c0:g}.csv", "csv"))
        for name, ok in res["gates"].items():
            art.gates[f"c0={c0:g}:{name}"] = ok
        entries.append({"c0": c0, "gates": res["gates"], **rep.summary()})
    art.summary = {"scenario": cfg.scenario, "runs": entries}


def _equivalence(cfg, art):
    problem = Problem.build(_mesh(cfg), cfg.bc, cfg.material)
    if cfg.rhs["kind"] == "random":
        rhs = studies.random_stage_rhs(problem.ops, cfg.params, cfg.rhs["seed"])
    else:
        rhs = studies.first_stage_rhs(problem, cfg.loads, cfg.params)
    res = studies.equivalence_check(rhs, problem.ops, cfg.settings)
    rows = [
        {
            "k": k,
            "discrepancy": d,
            "split_err_norm": res["split"].err_norm[k],
            "am_err_norm": res["am"].err_norm[k],
        }
        for k, d in enumerate(res["discrepancy"])
    ]
    art.add(write_table(rows, art.out_dir / "equivalence.csv", list(rows[0])))
    art.gates["equivalence"] = res["max_discrepancy"] <= 1e-10
    art.gates["converged"] = res["split"].converged
    art.summary = {
        "scenario": cfg.scenario,
        "iterations": res["iterations"],
        "max_discrepancy": res["max_discrepancy"],
        "split": res["split"].summary(),
        "am": res["am"].summary(),
    }


def _time_convergence(cfg, art):
    problem = Problem.build(_mesh(cfg), cfg.bc, cfg.material)
    theta = (cfg.params.theta1, cfg.params.theta2)
    res = studies.time_convergence(
        problem, cfg.T, cfg.sweep["N"], cfg.loads, cfg.sweep["reference_factor"], theta
    )
    cols = ["N", "dt", "error", "order", "error_stage", "order_stage"]
    art.add(write_table(res["rows"], art.out_dir / "convergence.csv", cols))
    art.gates["min_order"] = res["min_order"] >= cfg.sweep["min_order"]
    art.summary = {
        "scenario": cfg.scenario,
        "reference_steps": res["N_ref"],
        "min_order": res["min_order"],
        "min_order_stage_norm": res["min_order_stage"],
        "required_order": cfg.sweep["min_order"],
        "rows": res["rows"],
    }


def _write_state(path, problem, state):
    dm = problem.dofmap
    rows = []
    for name, vec, idx in (("u", state.u, dm.u_free), ("q", state.q, dm.q_free), ("p", state.p, None)):
        idx = np.arange(len(vec)) if idx is None else idx
        rows.extend({"field": name, "dof": int(i), "value": float(v)} for i, v in zip(idx, vec))
    return write_table(rows, path, ["field", "dof", "value"])


def _column(cfg, art):
    problem = Problem.build(_mesh(cfg), cfg.bc, cfg.material)
    N = max(1, round(cfg.T / cfg.params.dt))
    checkpoints = cfg.sweep.get("checkpoints") or [N]
    if max(checkpoints) > N:
        raise ConfigError(f"sweep.checkpoints: step {max(checkpoints)} exceeds the {N} steps of the run")
    traj = run(
        problem,
        TimeGrid(cfg.T, N),
        cfg.loads,
        cfg.settings,
        cfg.solver,
        theta=(cfg.params.theta1, cfg.params.theta2),
    )
    series = studies.column_series(problem, traj)
    art.add(write_table(series, art.out_dir / "column.csv", ["t", "top_displacement", "basal_pressure"]))
    for n in checkpoints:
        art.add(_write_state(art.out_dir / f"state_step{n:05d}.csv", problem, traj.states[n]))
    norms = studies.trajectory_norms(problem, traj)
    art.add(write_json({"steps": norms}, art.out_dir / "trajectory.json"))
    reports = [r for r in traj.reports if r is not None]
    art.gates["factor_bound"] = all(studies.factor_gate(r) for r in reports)
    art.gates["finite"] = all(np.isfinite(r["top_displacement"]) for r in series)
    art.summary = {
        "scenario": cfg.scenario,
        "steps": N,
        "dt": cfg.T / N,
        "solver": cfg.solver,
        "max_factor": max((r.max_factor for r in reports), default=math.nan),
        "final": series[-1],
    }


SCENARIO_RUNNERS = {
    "contraction-study": _contraction,
    "equivalence-check": _equivalence,
    "time-convergence": _time_convergence,
    "column": _column,
}


def run_scenario(cfg, out_dir):
    """Run one scenario and write its files into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    art = RunArtifacts(out_dir)
    start = time.perf_counter()
    log.info("running %s into %s", cfg.scenario, out_dir)
    SCENARIO_RUNNERS[cfg.scenario](cfg, art)
    wall = time.perf_counter() - start
    art.summary["gates"] = dict(art.gates)
    art.add(write_json(art.summary, out_dir / "summary.json"))
    manifest = {
        "config": cfg.raw,
        "versions": {
            "porosplit": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "wall_time_s": wall,
        "gates": art.gates,
        "passed": art.passed,
        "files": {p.name: sha256(p) for p in art.files},
    }
    art.manifest = write_json(manifest, out_dir / "manifest.json")
    return art


def _parser():
    ap = argparse.ArgumentParser(prog="porosplit", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario and write its reports")
    r.add_argument("--config", required=True, type=Path)
    r.add_argument("--out", type=Path, help="output directory (default: config 'output')")
    v = sub.add_parser("validate", help="check a scenario file without running it")
    v.add_argument("--config", required=True, type=Path)
    return ap


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.command == "validate":
        print(f"{args.config}: valid {cfg.scenario} scenario")
        return 0
    out = args.out or (Path(cfg.output) if cfg.output else None)
    if out is None:
        print("error: no output directory (use --out or the 'output' field)", file=sys.stderr)
        return 2
    try:
        art = run_scenario(cfg, out)
    except (ConfigError, ConvergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2 if isinstance(exc, ConfigError) else 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for name, ok in art.gates.items():
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
    print(f"manifest: {art.manifest}")
    return 0 if art.passed else 1


if __name__ == "__main__":
    sys.exit(main())
