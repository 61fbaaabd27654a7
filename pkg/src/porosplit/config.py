"""Scenario configuration files.

A scenario is one JSON document. Every section except ``scenario`` has
defaults; unknown keys are rejected so that typos surface. Errors name the
offending field path, e.g. ``material.c0: must be positive``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .coupling import SolverSettings
from .discretization import SIDES, BCSpec, SideBC
from .errors import ConfigError
from .loads import PROFILES, LoadSpec, TimeProfile
from .model import MaterialField, ThetaParams, isotropic_elasticity, validate_material
from .timestepper import SOLVERS

SCENARIOS = ("contraction-study", "equivalence-check", "time-convergence", "column")

DEFAULT_BOUNDARY = {
    "bottom": {"displacement": "fixed", "flow": "impermeable"},
    "left": {"displacement": "fixed_x", "flow": "impermeable"},
    "right": {"displacement": "fixed_x", "flow": "impermeable"},
    "top": {"displacement": "traction", "flow": "drained", "traction": [0.0, -1.0], "pressure": 0.0},
}


@dataclass
class ScenarioConfig:
    scenario: str
    mesh: dict
    material: MaterialField
    material_echo: dict
    params: ThetaParams
    T: float
    bc: BCSpec
    loads: LoadSpec
    settings: SolverSettings
    solver: str
    rhs: dict
    sweep: dict
    output: str | None
    raw: dict = field(repr=False, default_factory=dict)


class _Errors:
    def __init__(self):
        self.items = []

    def add(self, path, msg):
        self.items.append(f"{path}: {msg}")

    def raise_if_any(self):
        if self.items:
            raise ConfigError("invalid configuration:\n  " + "\n  ".join(self.items))


def _section(doc, key, allowed, errs, default=None):
    sec = doc.get(key, {} if default is None else default)
    if not isinstance(sec, dict):
        errs.add(key, "must be an object")
        return {}
    for k in sec:
        if k not in allowed:
            errs.add(f"{key}.{k}", "unknown key")
    return sec


def _number(sec, path, key, default, errs, *, positive=False, nonneg=False, integer=False):
    v = sec.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not np.isfinite(v):
        errs.add(f"{path}.{key}", f"must be a finite number, got {v!r}")
        return default
    if integer and int(v) != v:
        errs.add(f"{path}.{key}", f"must be an integer, got {v!r}")
    if positive and not v > 0:
        errs.add(f"{path}.{key}", f"must be positive, got {v!r}")
    if nonneg and not v >= 0:
        errs.add(f"{path}.{key}", f"must be nonnegative, got {v!r}")
    return int(v) if integer else float(v)


def _tensor(sec, path, key, default, shape, errs):
    v = sec.get(key, default)
    arr = np.asarray(v, dtype=float)
    if arr.ndim == 0 and shape == (2, 2):
        return arr * np.eye(2)
    if arr.shape != shape or not np.all(np.isfinite(arr)):
        errs.add(f"{path}.{key}", f"must be a scalar or a {shape} array")
        return np.eye(shape[0])
    return arr


def _profile(spec, path, errs):
    if spec is None:
        return TimeProfile("zero")
    if isinstance(spec, str):
        spec = {"kind": spec}
    if not isinstance(spec, dict):
        errs.add(path, "must be a profile name or object")
        return TimeProfile("zero")
    allowed = {"kind", "t_ramp", "frequency", "phase", "t_on"}
    for k in spec:
        if k not in allowed:
            errs.add(f"{path}.{k}", "unknown key")
    kind = spec.get("kind", "constant")
    if kind not in PROFILES:
        errs.add(f"{path}.kind", f"unknown preset {kind!r}; choose from {PROFILES}")
        return TimeProfile("zero")
    try:
        return TimeProfile(**{k: v for k, v in spec.items() if k in allowed})
    except (ConfigError, TypeError) as exc:
        errs.add(path, str(exc))
        return TimeProfile("zero")


def parse_config(doc):
    """Validate a decoded JSON document and build a :class:`ScenarioConfig`."""
    errs = _Errors()
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    top = {"scenario", "mesh", "material", "time", "boundary", "loads", "solver", "rhs", "sweep", "output"}
    for k in doc:
        if k not in top:
            errs.add(k, "unknown key")

    scenario = doc.get("scenario")
    if scenario not in SCENARIOS:
        errs.add("scenario", f"must be one of {SCENARIOS}, got {scenario!r}")

    m = _section(doc, "mesh", {"nx", "ny", "Lx", "Ly"}, errs)
    mesh = {
        "nx": _number(m, "mesh", "nx", 16, errs, positive=True, integer=True),
        "ny": _number(m, "mesh", "ny", 16, errs, positive=True, integer=True),
        "Lx": _number(m, "mesh", "Lx", 1.0, errs, positive=True),
        "Ly": _number(m, "mesh", "Ly", 1.0, errs, positive=True),
    }

    mat = _section(doc, "material", {"mu", "lambda", "C", "alpha", "c0", "kappa", "rho"}, errs)
    rho = _number(mat, "material", "rho", 1.0, errs)
    c0 = _number(mat, "material", "c0", 1.0, errs)
    if "C" in mat:
        if "mu" in mat or "lambda" in mat:
            errs.add("material.C", "give either C or (mu, lambda), not both")
        C = _tensor(mat, "material", "C", None, (3, 3), errs)
    else:
        mu = _number(mat, "material", "mu", 1.0, errs)
        lam = _number(mat, "material", "lambda", 1.0, errs)
        try:
            C = isotropic_elasticity(mu, lam)
        except ValueError as exc:
            errs.add("material.mu", str(exc))
            C = np.eye(3)
    alpha = _tensor(mat, "material", "alpha", 1.0, (2, 2), errs)
    kappa = _tensor(mat, "material", "kappa", 1.0, (2, 2), errs)
    material = MaterialField.homogeneous(rho, c0, C, alpha, kappa)
    for problem in validate_material(material):
        errs.add("material", problem.replace("element 0: ", ""))

    t = _section(doc, "time", {"theta1", "theta2", "dt", "T"}, errs)
    th1 = _number(t, "time", "theta1", 1.0, errs)
    th2 = _number(t, "time", "theta2", 1.0, errs)
    dt = _number(t, "time", "dt", 0.01, errs, positive=True)
    T = _number(t, "time", "T", 0.1, errs, positive=True)
    params = ThetaParams()
    for name, v in (("theta1", th1), ("theta2", th2)):
        if not 0 < v <= 1:
            errs.add(f"time.{name}", f"must lie in (0, 1], got {v}")
    try:
        params = ThetaParams(th1, th2, dt)
    except ConfigError:
        pass  # already reported field by field

    b = _section(doc, "boundary", set(SIDES), errs, default=DEFAULT_BOUNDARY)
    sides = {}
    for side in SIDES:
        spec = b.get(side, DEFAULT_BOUNDARY[side])
        if not isinstance(spec, dict):
            errs.add(f"boundary.{side}", "must be an object")
            spec = {}
        for k in spec:
            if k not in {"displacement", "flow", "traction", "pressure"}:
                errs.add(f"boundary.{side}.{k}", "unknown key")
        try:
            sides[side] = SideBC(
                spec.get("displacement", "free"),
                spec.get("flow", "impermeable"),
                tuple(spec.get("traction", (0.0, 0.0))),
                float(spec.get("pressure", 0.0)),
            )
        except (ConfigError, TypeError, ValueError) as exc:
            errs.add(f"boundary.{side}", str(exc))
            sides[side] = SideBC()
    bc = BCSpec(sides)

    ld = _section(doc, "loads", {"body_force", "source", "darcy_force", "boundary"}, errs)
    kw = {}
    for key, vec in (("body_force", True), ("source", False), ("darcy_force", True)):
        spec = ld.get(key)
        if spec is None:
            continue
        if not isinstance(spec, dict) or "value" not in spec:
            errs.add(f"loads.{key}", "must be an object with 'value' and optional 'profile'")
            continue
        val = np.asarray(spec["value"], dtype=float)
        if (vec and val.shape != (2,)) or (not vec and val.ndim != 0):
            errs.add(f"loads.{key}.value", "must be a 2-vector" if vec else "must be a scalar")
            continue
        prof_key = {"body_force": "body_profile", "source": "source_profile", "darcy_force": "darcy_profile"}[key]
        kw[key] = tuple(val) if vec else float(val)
        kw[prof_key] = _profile(spec.get("profile", "constant"), f"loads.{key}.profile", errs)
    kw["boundary_profile"] = _profile(ld.get("boundary", "step"), "loads.boundary", errs)
    loads = LoadSpec(**kw)

    s = _section(doc, "solver", {"tol_outer", "max_outer", "tol_lin", "method", "kind"}, errs)
    settings = SolverSettings()
    try:
        settings = SolverSettings(
            tol_outer=_number(s, "solver", "tol_outer", 1e-10, errs, positive=True),
            max_outer=_number(s, "solver", "max_outer", 200, errs, positive=True, integer=True),
            tol_lin=_number(s, "solver", "tol_lin", 1e-12, errs, positive=True),
            method=s.get("method", "direct"),
        )
    except ConfigError as exc:
        errs.add("solver", str(exc))
    solver = s.get("kind", "undrained-split")
    if solver not in SOLVERS:
        errs.add("solver.kind", f"must be one of {SOLVERS}, got {solver!r}")

    r = _section(doc, "rhs", {"kind", "seed"}, errs)
    rhs = {"kind": r.get("kind", "loads"), "seed": r.get("seed", 0)}
    if rhs["kind"] not in ("loads", "random"):
        errs.add("rhs.kind", "must be 'loads' or 'random'")

    sw = _section(doc, "sweep", {"c0", "N", "reference_factor", "min_order", "checkpoints"}, errs)
    sweep = {}
    if "c0" in sw:
        vals = sw["c0"]
        if not isinstance(vals, list) or not vals:
            errs.add("sweep.c0", "must be a non-empty list")
        elif any(isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0 for v in vals):
            errs.add("sweep.c0", "entries must be positive numbers")
        else:
            sweep["c0"] = [float(v) for v in vals]
    if "N" in sw:
        vals = sw["N"]
        if not isinstance(vals, list) or len(vals) < 2:
            errs.add("sweep.N", "must list at least two step counts")
        elif any(isinstance(v, bool) or not isinstance(v, int) or v < 1 for v in vals):
            errs.add("sweep.N", "entries must be positive integers")
        else:
            sweep["N"] = sorted(vals)
    sweep["reference_factor"] = _number(sw, "sweep", "reference_factor", 64, errs, positive=True, integer=True)
    sweep["min_order"] = _number(sw, "sweep", "min_order", 0.9, errs)
    sweep["checkpoints"] = sw.get("checkpoints", [])
    if not isinstance(sweep["checkpoints"], list) or any(
        isinstance(v, bool) or not isinstance(v, int) or v < 0 for v in sweep["checkpoints"]
    ):
        errs.add("sweep.checkpoints", "must be a list of step indices")
    if scenario == "time-convergence":
        sweep.setdefault("N", [8, 16, 32])

    output = doc.get("output")
    if output is not None and not isinstance(output, str):
        errs.add("output", "must be a path string")

    errs.raise_if_any()
    return ScenarioConfig(
        scenario=scenario,
        mesh=mesh,
        material=material,
        material_echo={"rho": rho, "c0": c0, "C": C.tolist(), "alpha": alpha.tolist(), "kappa": kappa.tolist()},
        params=params,
        T=T,
        bc=bc,
        loads=loads,
        settings=settings,
        solver=solver,
        rhs=rhs,
        sweep=sweep,
        output=output,
        raw=doc,
    )


def load_config(path):
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return parse_config(doc)
