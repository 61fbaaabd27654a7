import warnings

import numpy as np
import pytest

from porosplit.discretization import BCSpec, SideBC, build_mesh
from porosplit.energy import StageRHS
from porosplit.model import MaterialField, ThetaParams
from porosplit.timestepper import Problem

# bottom clamped, rollers on the sides, loaded and drained on top
COLUMN_BC = BCSpec(
    {
        "bottom": SideBC("fixed", "impermeable"),
        "left": SideBC("fixed_x", "impermeable"),
        "right": SideBC("fixed_x", "impermeable"),
        "top": SideBC("traction", "drained", (0.0, -1.0)),
    }
)


def make_problem(nx, ny, bc=COLUMN_BC, Lx=1.0, Ly=1.0, **mat):
    kw = dict(mu=1.0, lam=1.0, alpha=1.0, c0=1.0, kappa=1.0, rho=1.0)
    kw.update(mat)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return Problem.build(build_mesh(nx, ny, Lx, Ly), bc, MaterialField.isotropic(**kw))


def random_rhs(ops, params, rng):
    return StageRHS(
        rng.standard_normal(ops.n_u), rng.standard_normal(ops.n_p), rng.standard_normal(ops.n_q), params
    )


def heterogeneous_material(n, rng):
    """Random valid anisotropic material on ``n`` elements."""
    def spd(k, size):
        G = rng.standard_normal((k, size, size))
        return G @ G.transpose(0, 2, 1) + 0.5 * np.eye(size)

    a = rng.standard_normal((n, 2, 2))
    return MaterialField(
        rho=rng.uniform(0.5, 2.0, n),
        c0=rng.uniform(0.1, 2.0, n),
        C=spd(n, 3),
        alpha=0.5 * (a + a.transpose(0, 2, 1)),
        kappa=spd(n, 2),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def small():
    return make_problem(4, 4)


@pytest.fixture(scope="session")
def two_tri():
    """Unit square split into two triangles, nothing eliminated."""
    return make_problem(1, 1, bc=BCSpec.uniform("free", "drained"), c0=0.5, rho=2.0)


@pytest.fixture(scope="session")
def params():
    return ThetaParams(1.0, 1.0, 0.01)
