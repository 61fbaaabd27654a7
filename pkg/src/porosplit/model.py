"""Material data and the scalar quantities of the convergence theory.

Tensors are two-dimensional. Second-order tensors (Biot coupling, permeability)
are stored as symmetric 2x2 arrays. The fourth-order elasticity tensor acts on
symmetric strains written as Voigt vectors ``(e_xx, e_yy, sqrt(2) e_xy)``; with
that scaling the Voigt dot product equals the Frobenius product, so
``A : C^{-1} : A`` is an ordinary 3-vector quadratic form.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InvalidMaterialError

DIM = 2
SQRT2 = np.sqrt(2.0)


def voigt(tensor):
    """Voigt vector(s) of symmetric 2x2 tensor(s), shear scaled by sqrt(2)."""
    t = np.asarray(tensor, dtype=float)
    return np.stack([t[..., 0, 0], t[..., 1, 1], SQRT2 * t[..., 0, 1]], axis=-1)


def isotropic_elasticity(mu, lam):
    """Voigt matrix of ``C e = 2 mu e + lam tr(e) I``.

    Raises
    ------
    InvalidMaterialError
        If ``mu <= 0`` or ``lam < 0``.
    """
    if not mu > 0:
        raise InvalidMaterialError(f"shear modulus must be positive, got mu={mu}")
    if not lam >= 0:
        raise InvalidMaterialError(f"Lame parameter must be nonnegative, got lambda={lam}")
    return np.array(
        [
            [2.0 * mu + lam, lam, 0.0],
            [lam, 2.0 * mu + lam, 0.0],
            [0.0, 0.0, 2.0 * mu],
        ]
    )


def drained_bulk_modulus(mu, lam):
    return lam + 2.0 * mu / DIM


def alpha_C_inv_alpha(C, alpha):
    """Return ``alpha : C^{-1} : alpha`` for one element.

    Solves ``C x = voigt(alpha)`` and returns ``voigt(alpha) . x``.
    """
    C = np.asarray(C, dtype=float)
    a = voigt(alpha)
    try:
        x = np.linalg.solve(C, a)
    except np.linalg.LinAlgError as exc:
        raise InvalidMaterialError("elasticity tensor is singular") from exc
    if not np.all(np.isfinite(x)):
        raise InvalidMaterialError("elasticity tensor is singular")
    return float(a @ x)


@dataclass(frozen=True)
class ThetaParams:
    """Stage parameters: the two implicitness weights and the step size."""

    theta1: float = 1.0
    theta2: float = 1.0
    dt: float = 1.0

    def __post_init__(self):
        for name in ("theta1", "theta2"):
            v = getattr(self, name)
            if not (0.0 < v <= 1.0):
                raise ConfigError(f"{name} must lie in (0, 1], got {v}")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ConfigError(f"dt must be finite and positive, got {self.dt}")


@dataclass(frozen=True, eq=False)
class MaterialField:
    """Piecewise-constant material data.

    Every array has a leading element axis of length ``n`` (the number of
    triangles) or 1; a length-1 field is broadcast to any mesh.

    Attributes
    ----------
    rho : (n,) mass density
    c0 : (n,) specific storage
    C : (n, 3, 3) Voigt elasticity matrices
    alpha : (n, 2, 2) Biot coupling tensors
    kappa : (n, 2, 2) permeability (mobility) tensors
    """

    rho: np.ndarray
    c0: np.ndarray
    C: np.ndarray
    alpha: np.ndarray
    kappa: np.ndarray

    def __post_init__(self):
        rho = np.atleast_1d(np.asarray(self.rho, dtype=float))
        c0 = np.atleast_1d(np.asarray(self.c0, dtype=float))
        C = np.asarray(self.C, dtype=float).reshape(-1, 3, 3)
        alpha = np.asarray(self.alpha, dtype=float).reshape(-1, 2, 2)
        kappa = np.asarray(self.kappa, dtype=float).reshape(-1, 2, 2)
        lengths = {len(rho), len(c0), len(C), len(alpha), len(kappa)}
        n = max(lengths)
        if not lengths <= {1, n}:
            raise InvalidMaterialError(f"inconsistent element counts {sorted(lengths)}")
        for name, arr in (("rho", rho), ("c0", c0), ("C", C), ("alpha", alpha), ("kappa", kappa)):
            arr = np.broadcast_to(arr, (n,) + arr.shape[1:]).copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @classmethod
    def homogeneous(cls, rho, c0, C, alpha, kappa):
        """Single record, broadcast to every element."""
        alpha = np.asarray(alpha, dtype=float)
        kappa = np.asarray(kappa, dtype=float)
        if alpha.ndim == 0:
            alpha = alpha * np.eye(DIM)
        if kappa.ndim == 0:
            kappa = kappa * np.eye(DIM)
        return cls(rho=[rho], c0=[c0], C=[C], alpha=[alpha], kappa=[kappa])

    @classmethod
    def isotropic(cls, mu, lam, alpha=1.0, c0=1.0, kappa=1.0, rho=1.0):
        return cls.homogeneous(rho, c0, isotropic_elasticity(mu, lam), alpha, kappa)

    def __len__(self):
        return len(self.rho)

    def on(self, n_elements):
        """Return the field with every array of length ``n_elements``."""
        if len(self) == n_elements:
            return self
        if len(self) != 1:
            raise InvalidMaterialError(
                f"material has {len(self)} records but the mesh has {n_elements} elements"
            )
        rep = lambda a: np.repeat(a, n_elements, axis=0)  # noqa: E731
        return MaterialField(rep(self.rho), rep(self.c0), rep(self.C), rep(self.alpha), rep(self.kappa))

    def replace(self, **changes):
        fields = dict(rho=self.rho, c0=self.c0, C=self.C, alpha=self.alpha, kappa=self.kappa)
        fields.update(changes)
        return MaterialField(**fields)

    def coupling_strength(self):
        """Per-element ``alpha : C^{-1} : alpha``."""
        return np.array([alpha_C_inv_alpha(C, a) for C, a in zip(self.C, self.alpha)])


def _is_spd(m, sym_tol=1e-12):
    if not np.all(np.isfinite(m)):
        return False, False
    scale = max(np.abs(m).max(), 1e-300)
    symmetric = np.abs(m - m.T).max() <= sym_tol * scale
    if not symmetric:
        return False, False
    return True, bool(np.linalg.eigvalsh(m).min() > 0)


def validate_material(mat):
    """List every violated material assumption; an empty list means valid."""
    problems = []
    for e in range(len(mat)):
        if not (np.isfinite(mat.rho[e]) and mat.rho[e] > 0):
            problems.append(f"element {e}: density rho={mat.rho[e]} must be positive")
        if not (np.isfinite(mat.c0[e]) and mat.c0[e] > 0):
            problems.append(
                f"element {e}: c0={mat.c0[e]} violates positive compressibility (c0 > 0)"
            )
        sym, pd = _is_spd(mat.C[e])
        if not sym:
            problems.append(f"element {e}: elasticity tensor not symmetric")
        elif not pd:
            problems.append(f"element {e}: elasticity tensor not positive definite")
        a = mat.alpha[e]
        if not np.all(np.isfinite(a)):
            problems.append(f"element {e}: Biot tensor has non-finite entries")
        elif np.abs(a - a.T).max() > 1e-12 * max(np.abs(a).max(), 1e-300):
            problems.append(f"element {e}: Biot tensor not symmetric")
        sym, pd = _is_spd(mat.kappa[e])
        if not (sym and pd):
            problems.append(f"element {e}: permeability not SPD")
    return problems


def check_material(mat):
    problems = validate_material(mat)
    if problems:
        raise InvalidMaterialError("; ".join(problems))


def contraction_factor(x, c0):
    return float(x / (c0 + x))


def theoretical_rate(mat):
    """Contraction factor ``x / (c0 + x)`` of the undrained split in the energy norm.

    For heterogeneous data ``x`` is the largest element value of
    ``alpha : C^{-1} : alpha`` and ``c0`` the smallest storage coefficient,
    which keeps the factor an upper bound.
    """
    check_material(mat)
    return contraction_factor(mat.coupling_strength().max(), mat.c0.min())
