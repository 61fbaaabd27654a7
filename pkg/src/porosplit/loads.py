"""Time-dependent load presets.

Every load is a spatially constant reference value times a scalar time
profile. Boundary tractions and boundary pressures take their reference
values from the boundary conditions and share ``boundary_profile``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .discretization import (
    SIDES,
    body_force_vector,
    boundary_pressure_vector,
    darcy_force_vector,
    source_vector,
    traction_vector,
)
from .errors import ConfigError

PROFILES = ("zero", "constant", "ramp", "sinusoid", "step")


@dataclass(frozen=True)
class TimeProfile:
    """Scalar amplitude in time.

    ``ramp`` rises linearly to 1 at ``t_ramp``; ``sinusoid`` is
    ``sin(2 pi frequency t + phase)``; ``step`` switches from 0 to 1 once
    ``t > t_on``.
    """

    kind: str = "constant"
    t_ramp: float = 1.0
    frequency: float = 1.0
    phase: float = 0.0
    t_on: float = 0.0

    def __post_init__(self):
        if self.kind not in PROFILES:
            raise ConfigError(f"unknown time profile {self.kind!r}; choose from {PROFILES}")
        if self.kind == "ramp" and not self.t_ramp > 0:
            raise ConfigError("ramp profile needs t_ramp > 0")

    def __call__(self, t):
        if self.kind == "zero":
            return 0.0
        if self.kind == "constant":
            return 1.0
        if self.kind == "ramp":
            return min(t / self.t_ramp, 1.0)
        if self.kind == "sinusoid":
            return math.sin(2.0 * math.pi * self.frequency * t + self.phase)
        return 1.0 if t > self.t_on else 0.0


ZERO = TimeProfile("zero")


@dataclass(frozen=True)
class LoadSpec:
    body_force: tuple = (0.0, 0.0)
    body_profile: TimeProfile = ZERO
    source: float = 0.0
    source_profile: TimeProfile = ZERO
    darcy_force: tuple = (0.0, 0.0)
    darcy_profile: TimeProfile = ZERO
    boundary_profile: TimeProfile = ZERO

    @classmethod
    def none(cls):
        return cls()


@dataclass(eq=False)
class LoadAssembler:
    """Caches the unit load vectors of one discretisation."""

    loads: LoadSpec
    mesh: object
    dofmap: object
    bc: object
    _unit: dict = field(default_factory=dict, init=False)

    def __post_init__(self):
        mesh, dm, bc, L = self.mesh, self.dofmap, self.bc, self.loads
        f_bnd = np.zeros(dm.n_u)
        g_bnd = np.zeros(dm.n_q)
        for side in SIDES:
            if bc[side].displacement != "fixed" and any(bc[side].traction):
                f_bnd += traction_vector(mesh, dm, side, bc[side].traction)
            if bc[side].flow == "drained" and bc[side].pressure != 0.0:
                g_bnd += boundary_pressure_vector(mesh, dm, side, bc[side].pressure)
        self._unit = {
            "f": body_force_vector(mesh, dm, np.asarray(L.body_force, dtype=float)),
            "f_bnd": f_bnd,
            "h": source_vector(mesh, float(L.source)),
            "g": darcy_force_vector(mesh, dm, np.asarray(L.darcy_force, dtype=float)),
            "g_bnd": g_bnd,
        }

    def __call__(self, t):
        """Dual load vectors ``(F, H, G)`` at time ``t``."""
        L, u = self.loads, self._unit
        b = L.boundary_profile(t)
        F = L.body_profile(t) * u["f"] + b * u["f_bnd"]
        H = L.source_profile(t) * u["h"]
        G = L.darcy_profile(t) * u["g"] + b * u["g_bnd"]
        return F, H, G
