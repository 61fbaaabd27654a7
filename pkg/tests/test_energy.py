import numpy as np
import pytest
import scipy.sparse as sp

from porosplit import energy
from porosplit.coupling import SolverSettings, flow_step, monolithic_solve, undrained_split_solve
from porosplit.discretization import BCSpec, assemble_operators, build_mesh, build_spaces
from porosplit.energy import StageRHS, StageState
from porosplit.errors import ContractError
from porosplit.model import ThetaParams

from conftest import heterogeneous_material, make_problem, random_rhs

PARAMS = [ThetaParams(1.0, 1.0, 0.01), ThetaParams(0.7, 0.5, 0.3)]


def dense_stage_solve(ops, rhs):
    """Three-field stage system solved as one dense saddle-point problem."""
    th1, th2, dt = rhs.params.theta1, rhs.params.theta2, rhs.params.dt
    M, K, A, D = (X.toarray() for X in (ops.M_u, ops.K_C, ops.A_alpha, ops.D))
    Mk, Mp = ops.M_kappa.toarray(), np.diag(ops.mp)
    nu, nq = ops.n_u, ops.n_q
    Z = np.zeros
    S = np.block(
        [
            [M / dt**2 + th1 * K, Z((nu, nq)), -th1 * A.T],
            [Z((nq, nu)), Mk, -D.T],
            [A, th2 * dt * D, Mp],
        ]
    )
    x = np.linalg.solve(S, np.concatenate([rhs.f, rhs.g, rhs.h]))
    return x[:nu], x[nu + nq :], x[nu : nu + nq]


def fd_gradient(fun, x, h):
    g = np.empty_like(x)
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (fun(x + e) - fun(x - e)) / (2 * h)
    return g


@pytest.fixture(scope="module", params=[(1, 1), (4, 4)], ids=["2tri", "4x4"])
def prob(request):
    nx, ny = request.param
    kw = {"bc": BCSpec.uniform("free", "drained")} if nx == 1 else {}
    return make_problem(nx, ny, c0=0.3, rho=2.0, kappa=0.5, **kw)


@pytest.mark.parametrize("params", PARAMS, ids=["be", "theta"])
def test_minimiser_solves_three_field_system(prob, params, rng):
    ops = prob.ops
    rhs = random_rhs(ops, params, rng)
    u, p, q = dense_stage_solve(ops, rhs)
    s = monolithic_solve(rhs, ops)
    scale = max(np.abs(u).max(), np.abs(q).max(), np.abs(p).max())
    assert np.abs(s.u - u).max() <= 1e-10 * scale
    assert np.abs(s.q - q).max() <= 1e-10 * scale
    assert np.abs(s.p - p).max() <= 1e-10 * scale
    gu, gq = energy.grad_u(s.u, s.q, rhs, ops), energy.grad_q(s.u, s.q, rhs, ops)
    assert np.linalg.norm(np.concatenate([gu, gq])) <= 1e-10 * np.linalg.norm(
        np.concatenate([rhs.f, rhs.h, rhs.g])
    )


@pytest.mark.parametrize("shape", [(1, 1), (8, 8)], ids=["2tri", "8x8"])
def test_gradients_by_central_differences(shape, rng):
    kw = {"bc": BCSpec.uniform("free", "drained")} if shape == (1, 1) else {}
    ops = make_problem(*shape, c0=0.5, **kw).ops
    params = ThetaParams(0.8, 0.6, 0.1)
    worst = 0.0
    for _ in range(20):
        rhs = random_rhs(ops, params, rng)
        u, q = rng.standard_normal(ops.n_u), rng.standard_normal(ops.n_q)
        fu = lambda x: energy.evaluate_energy(x, q, rhs, ops)  # noqa: E731
        fq = lambda x: energy.evaluate_energy(u, x, rhs, ops)  # noqa: E731
        gu, gq = energy.grad_u(u, q, rhs, ops), energy.grad_q(u, q, rhs, ops)
        for g, fd in ((gu, fd_gradient(fu, u, 1e-4)), (gq, fd_gradient(fq, q, 1e-4))):
            worst = max(worst, np.linalg.norm(g - fd) / np.linalg.norm(g))
    assert worst <= 1e-6


def test_zero_state_zero_gradient(small, params):
    rhs = StageRHS.zeros(small.ops, params)
    z = StageState.zeros(small.ops)
    assert not energy.grad_u(z.u, z.q, rhs, small.ops).any()
    assert not energy.grad_q(z.u, z.q, rhs, small.ops).any()


class TestNorms:
    @pytest.mark.parametrize("params", PARAMS, ids=["be", "theta"])
    def test_quadratic_expansion(self, small, params, rng):
        ops = small.ops
        for _ in range(10):
            rhs = random_rhs(ops, params, rng)
            u, q = rng.standard_normal(ops.n_u), rng.standard_normal(ops.n_q)
            v, w = rng.standard_normal(ops.n_u), rng.standard_normal(ops.n_q)
            gu, gq = energy.grad_u(u, q, rhs, ops), energy.grad_q(u, q, rhs, ops)
            for t in (1.0, 0.5):
                lhs = (
                    energy.evaluate_energy(u + t * v, q + t * w, rhs, ops)
                    - energy.evaluate_energy(u, q, rhs, ops)
                    - t * (gu @ v + gq @ w)
                )
                assert lhs == pytest.approx(0.5 * t**2 * energy.triple_norm(v, w, ops, params) ** 2, rel=1e-10)

    def test_partial_expansions(self, small, params, rng):
        ops = small.ops
        rhs = random_rhs(ops, params, rng)
        u, q = rng.standard_normal(ops.n_u), rng.standard_normal(ops.n_q)
        v, w = rng.standard_normal(ops.n_u), rng.standard_normal(ops.n_q)
        E = lambda a, b: energy.evaluate_energy(a, b, rhs, ops)  # noqa: E731
        gu, gq = energy.grad_u(u, q, rhs, ops), energy.grad_q(u, q, rhs, ops)
        assert E(u + v, q) - E(u, q) - gu @ v == pytest.approx(0.5 * energy.mech_norm(v, ops, params) ** 2, rel=1e-10)
        assert E(u, q + w) - E(u, q) - gq @ w == pytest.approx(0.5 * energy.flux_norm(w, ops, params) ** 2, rel=1e-10)

    def test_hessian_matches_norm(self, small, rng):
        ops = small.ops
        params = ThetaParams(0.6, 0.9, 0.05)
        H = energy.hessian_blocks(ops, params).full()
        for _ in range(10):
            v, w = rng.standard_normal(ops.n_u), rng.standard_normal(ops.n_q)
            x = np.concatenate([v, w])
            assert x @ (H @ x) == pytest.approx(energy.triple_norm(v, w, ops, params) ** 2, rel=1e-12)

    def test_polarization(self, small, rng):
        ops = small.ops
        params = ThetaParams(0.6, 0.9, 0.05)
        th1, th2, dt = params.theta1, params.theta2, params.dt
        v, w = rng.standard_normal(ops.n_u), rng.standard_normal(ops.n_q)
        cross = 2 * th1 * ((ops.A_alpha @ v) @ (th2 * dt * (ops.D @ w) / ops.mp))
        lhs = energy.triple_norm(v, w, ops, params) ** 2
        rhs = energy.mech_norm(v, ops, params) ** 2 + energy.flux_norm(w, ops, params) ** 2 + cross
        assert lhs == pytest.approx(rhs, rel=1e-12)

    @pytest.mark.parametrize("c0", [0.01, 1.0])
    def test_beta_bounds(self, c0, rng):
        ops = make_problem(4, 4, c0=c0).ops
        params = ThetaParams(1.0, 1.0, 0.01)
        beta = 1.0 + ops.coupling.max() / ops.c0.min()
        for _ in range(200):
            v, w = rng.standard_normal(ops.n_u), rng.standard_normal(ops.n_q)
            t2 = energy.triple_norm(v, w, ops, params) ** 2
            assert energy.mech_norm(v, ops, params) ** 2 <= beta * t2 * (1 + 1e-12)
            assert energy.flux_norm(w, ops, params) ** 2 <= beta * t2 * (1 + 1e-12)

    def test_elementwise_holder(self, rng):
        mesh = build_mesh(5, 5)
        dm = build_spaces(mesh, BCSpec.uniform("fixed_x", "impermeable"))
        ops = assemble_operators(mesh, dm, heterogeneous_material(mesh.n_triangles, rng))
        x = ops.coupling.max()
        for _ in range(200):
            v = rng.standard_normal(ops.n_u)
            av = ops.A_alpha @ v
            assert av @ (av / ops.area) <= x * (v @ (ops.K_C @ v)) * (1 + 1e-12)

    def test_zero(self, small, params):
        assert energy.triple_norm(np.zeros(small.ops.n_u), np.zeros(small.ops.n_q), small.ops, params) == 0.0


class TestPressureRecovery:
    def test_identity(self, small, rng):
        ops = small.ops
        params = ThetaParams(0.5, 0.7, 0.2)
        for _ in range(20):
            rhs = random_rhs(ops, params, rng)
            u, q = rng.standard_normal(ops.n_u), rng.standard_normal(ops.n_q)
            p = energy.recover_pressure(u, q, rhs, ops)
            res = ops.M_p @ p + ops.A_alpha @ u + params.theta2 * params.dt * (ops.D @ q) - rhs.h
            assert np.abs(res).max() <= 1e-13 * max(np.abs(rhs.h).max(), 1.0)

    def test_unit_pressure(self, small, params):
        ops = small.ops
        rhs = StageRHS(np.zeros(ops.n_u), ops.mp.copy(), np.zeros(ops.n_q), params)
        p = energy.recover_pressure(np.zeros(ops.n_u), np.zeros(ops.n_q), rhs, ops)
        assert np.allclose(p, 1.0, rtol=1e-15)

    def test_decoupled(self, params, rng):
        ops = make_problem(3, 3, alpha=0.0).ops
        rhs = StageRHS.zeros(ops, params)
        assert not energy.recover_pressure(rng.standard_normal(ops.n_u), np.zeros(ops.n_q), rhs, ops).any()

    def test_split_pressure_is_flow_pressure(self, small, params, rng):
        ops = small.ops
        rhs = random_rhs(ops, params, rng)
        state, rep = undrained_split_solve(StageState.zeros(ops), rhs, ops)
        assert rep.converged
        p_flow, _ = flow_step(state.u, rhs, ops)
        p_rec = energy.recover_pressure(state.u, state.q, rhs, ops)
        assert np.abs(p_rec - p_flow).max() <= 1e-12 * np.abs(p_flow).max()


def test_strong_convexity_constant_is_half(small, params, rng):
    ops = small.ops
    rhs = random_rhs(ops, params, rng)
    s = monolithic_solve(rhs, ops, SolverSettings())
    E_star = energy.evaluate_energy(s.u, s.q, rhs, ops)
    for _ in range(5):
        v, w = rng.standard_normal(ops.n_u), rng.standard_normal(ops.n_q)
        gap = energy.evaluate_energy(s.u + v, s.q + w, rhs, ops) - E_star
        assert gap / energy.triple_norm(v, w, ops, params) ** 2 == pytest.approx(0.5, rel=1e-9)


def test_hessian_blocks_symmetric(small, params):
    H = energy.hessian_blocks(small.ops, params).full()
    assert abs(H - H.T).max() <= 1e-14 * abs(H).max()
    assert sp.issparse(H)


def test_size_mismatch(small, params):
    ops = small.ops
    rhs = StageRHS.zeros(ops, params)
    with pytest.raises(ContractError):
        energy.evaluate_energy(np.zeros(ops.n_u + 1), np.zeros(ops.n_q), rhs, ops)
    with pytest.raises(ContractError):
        StageRHS(np.full(ops.n_u, np.nan), np.zeros(ops.n_p), np.zeros(ops.n_q), params)
