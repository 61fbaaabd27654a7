import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from porosplit.errors import ConfigError, InvalidMaterialError
from porosplit.model import (
    MaterialField,
    ThetaParams,
    alpha_C_inv_alpha,
    contraction_factor,
    drained_bulk_modulus,
    isotropic_elasticity,
    theoretical_rate,
    validate_material,
)

moduli = st.floats(0.05, 50.0)
lames = st.floats(0.0, 50.0)


def tensor_C(mu, lam):
    """Isotropic elasticity as a full 2x2x2x2 array."""
    d = np.eye(2)
    return (
        lam * np.einsum("ij,kl->ijkl", d, d)
        + mu * (np.einsum("ik,jl->ijkl", d, d) + np.einsum("il,jk->ijkl", d, d))
    )


def tensor_contraction(C4, alpha):
    """alpha : C^{-1} : alpha by solving C : x = alpha on symmetric 2x2 tensors."""
    basis = [np.array([[1.0, 0], [0, 0]]), np.array([[0, 0], [0, 1.0]]), np.array([[0, 1.0], [1.0, 0]])]
    M = np.array([[np.einsum("ij,ijkl,kl->", bi, C4, bj) for bj in basis] for bi in basis])
    rhs = np.array([np.einsum("ij,ij->", bi, alpha) for bi in basis])
    c = np.linalg.solve(M, rhs)
    x = sum(ci * bi for ci, bi in zip(c, basis))
    return float(np.einsum("ij,ij->", alpha, x))


class TestClosedForms:
    def test_unit_values(self):
        assert contraction_factor(1.0, 1.0) == 0.5

    def test_reference_material(self):
        C = isotropic_elasticity(1.0, 1.0)
        assert alpha_C_inv_alpha(C, np.eye(2)) == pytest.approx(0.5, rel=1e-15)
        mat = MaterialField.isotropic(1.0, 1.0, alpha=1.0, c0=0.25)
        assert theoretical_rate(mat) == pytest.approx(2.0 / 3.0, rel=1e-15)

    def test_zero_coupling(self):
        mat = MaterialField.isotropic(1.0, 1.0, alpha=0.0)
        assert theoretical_rate(mat) == 0.0

    @given(moduli, lames, st.floats(-3.0, 3.0))
    def test_quasi_static_reduction(self, mu, lam, a):
        x = alpha_C_inv_alpha(isotropic_elasticity(mu, lam), a * np.eye(2))
        expected = a**2 / drained_bulk_modulus(mu, lam)
        assert x == pytest.approx(expected, rel=1e-14, abs=1e-300)

    @given(moduli, lames, st.lists(st.floats(-2, 2), min_size=3, max_size=3))
    def test_voigt_matches_tensor_calculus(self, mu, lam, a):
        alpha = np.array([[a[0], a[2]], [a[2], a[1]]])
        got = alpha_C_inv_alpha(isotropic_elasticity(mu, lam), alpha)
        assert got == pytest.approx(tensor_contraction(tensor_C(mu, lam), alpha), rel=1e-10, abs=1e-14)


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1))
def test_contraction_nonnegative_zero_iff_alpha_zero(seed):
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((3, 3))
    C = G @ G.T + 0.1 * np.eye(3)
    a = rng.standard_normal((2, 2))
    alpha = a + a.T
    assert alpha_C_inv_alpha(C, alpha) > 0
    assert alpha_C_inv_alpha(C, np.zeros((2, 2))) == 0.0


@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3), st.floats(1.01, 10.0))
def test_rate_monotone(x, c0, s):
    assert contraction_factor(x * s, c0) > contraction_factor(x, c0)
    assert contraction_factor(x, c0 * s) < contraction_factor(x, c0)
    assert 0 < contraction_factor(x, c0) < 1


def test_heterogeneous_rate_uses_worst_element():
    C = isotropic_elasticity(1.0, 1.0)
    mat = MaterialField(rho=[1, 1], c0=[0.5, 2.0], C=[C, 2 * C], alpha=[np.eye(2), np.eye(2)], kappa=np.eye(2))
    # x = 0.5 on the first element, c0 = 0.5 on the first element
    assert theoretical_rate(mat) == pytest.approx(0.5 / 1.0)


class TestValidation:
    def test_valid(self):
        assert validate_material(MaterialField.isotropic(1.0, 1.0)) == []

    def test_zero_storage_names_element(self):
        C = isotropic_elasticity(1.0, 1.0)
        mat = MaterialField(rho=1.0, c0=[1.0, 0.0, 1.0], C=C, alpha=np.eye(2), kappa=np.eye(2))
        (msg,) = validate_material(mat)
        assert "element 1" in msg and "positive compressibility" in msg

    def test_indefinite_permeability(self):
        mat = MaterialField.isotropic(1.0, 1.0, kappa=np.diag([1.0, -1.0]))
        assert any("permeability not SPD" in m for m in validate_material(mat))

    def test_exhaustive(self):
        mat = MaterialField.isotropic(1.0, 1.0, c0=-1.0, rho=0.0, kappa=-1.0)
        assert len(validate_material(mat)) == 3

    def test_nonsymmetric_coupling(self):
        mat = MaterialField.isotropic(1.0, 1.0, alpha=np.array([[1.0, 1.0], [0.0, 1.0]]))
        assert any("Biot tensor not symmetric" in m for m in validate_material(mat))
        with pytest.raises(InvalidMaterialError):
            theoretical_rate(mat)

    @pytest.mark.parametrize("mu,lam", [(0.0, 1.0), (1.0, -0.1)])
    def test_bad_moduli(self, mu, lam):
        with pytest.raises(InvalidMaterialError):
            isotropic_elasticity(mu, lam)

    def test_inconsistent_lengths(self):
        with pytest.raises(InvalidMaterialError):
            MaterialField(rho=[1, 1], c0=[1, 1, 1], C=np.eye(3), alpha=np.eye(2), kappa=np.eye(2))

    def test_broadcast(self):
        mat = MaterialField.isotropic(1.0, 1.0).on(5)
        assert mat.C.shape == (5, 3, 3) and mat.kappa.shape == (5, 2, 2)


@pytest.mark.parametrize("theta", [(0.0, 1.0), (1.0, 1.5), (-0.5, 0.5)])
def test_theta_range(theta):
    with pytest.raises(ConfigError):
        ThetaParams(*theta, dt=0.1)


def test_dt_positive():
    with pytest.raises(ConfigError):
        ThetaParams(1.0, 1.0, 0.0)
