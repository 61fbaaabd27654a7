"""Fully dynamic poroelasticity with energy-based iterative coupling.

The three-field (displacement, pressure, flux) system is discretised with
P1 displacement, lowest-order Raviart-Thomas flux and P0 pressure on a
structured triangulation of a rectangle. Each implicit time stage is the
minimiser of a quadratic energy; it is solved monolithically, by
alternating minimisation, or by the equivalent undrained split.
"""
from .coupling import (
    IterationReport,
    SolverSettings,
    alternating_minimization_solve,
    flow_step,
    mechanics_step,
    monolithic_solve,
    undrained_split_solve,
)
from .discretization import BCSpec, SideBC, assemble_operators, build_mesh, build_spaces
from .energy import StageRHS, StageState, evaluate_energy, recover_pressure, triple_norm
from .errors import ConfigError, ContractError, ConvergenceError, InvalidMaterialError, SolverError
from .loads import LoadSpec, TimeProfile
from .model import MaterialField, ThetaParams, alpha_C_inv_alpha, theoretical_rate
from .timestepper import Problem, TimeGrid, backward_euler_rhs, run, theta_rhs

__version__ = "0.1.0"

__all__ = [
    "BCSpec",
    "ConfigError",
    "ContractError",
    "ConvergenceError",
    "InvalidMaterialError",
    "IterationReport",
    "LoadSpec",
    "MaterialField",
    "Problem",
    "SideBC",
    "SolverError",
    "SolverSettings",
    "StageRHS",
    "StageState",
    "ThetaParams",
    "TimeGrid",
    "TimeProfile",
    "alpha_C_inv_alpha",
    "alternating_minimization_solve",
    "assemble_operators",
    "backward_euler_rhs",
    "build_mesh",
    "build_spaces",
    "evaluate_energy",
    "flow_step",
    "mechanics_step",
    "monolithic_solve",
    "recover_pressure",
    "run",
    "theoretical_rate",
    "theta_rhs",
    "triple_norm",
    "undrained_split_solve",
]
