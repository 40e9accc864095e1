"""Dense complex small-matrix arithmetic and the group-theoretic predicates.

Matrices are plain ``numpy.ndarray`` of complex128; this module adds the
pseudo-unitary structure: the indefinite metric ``gamma``, the involutions
``tau`` and ``sigma``, and residuals measuring membership in SU(p,q) and in
the Cartan-embedded symmetric space ("Hermitian, unit determinant, and
q*gamma*q*gamma = I").

All residuals are returned as numbers, never booleans; thresholds live with
the caller. The Frobenius norm is used throughout.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericError

ComplexMatrix = np.ndarray  # square, complex128


@dataclass(frozen=True)
class Signature:
    """Target signature (p, q) of SU(p, q); n = p + q."""

    p: int
    q_minus: int

    def __post_init__(self) -> None:
        if self.p < 1 or self.q_minus < 1:
            raise ConfigError(f"signature needs p >= 1 and q >= 1, got ({self.p}, {self.q_minus})")

    @property
    def n(self) -> int:
        return self.p + self.q_minus


def as_matrix(m, n: int | None = None) -> ComplexMatrix:
    """Coerce to a finite square complex matrix (of size n when given)."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ConfigError(f"expected a square matrix, got shape {a.shape}")
    if n is not None and a.shape[0] != n:
        raise ConfigError(f"expected a {n}x{n} matrix, got {a.shape[0]}x{a.shape[0]}")
    if not np.all(np.isfinite(a.view(float))):
        raise ConfigError("matrix has non-finite entries")
    return a


def gamma(sig: Signature) -> ComplexMatrix:
    """Indefinite metric diag(+1 x p, -1 x q). Hermitian, squares to I."""
    return np.diag(np.array([1.0] * sig.p + [-1.0] * sig.q_minus, dtype=complex))


def frobenius(m: ComplexMatrix) -> float:
    return float(np.linalg.norm(m, "fro"))


def inv(m: ComplexMatrix, condition_cap: float = 1e12) -> ComplexMatrix:
    """Inverse via LU with a condition estimate; refuses ill-conditioned input.

    Raises NumericError when the matrix is singular or its estimated
    2-norm condition number exceeds ``condition_cap``.
    """
    a = np.asarray(m, dtype=complex)
    try:
        cond = np.linalg.cond(a)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - cond rarely fails
        raise NumericError(f"condition estimate failed: {exc}") from exc
    if not np.isfinite(cond):
        raise NumericError("matrix is numerically singular")
    if cond > condition_cap:
        raise NumericError(f"condition estimate {cond:.3e} exceeds cap {condition_cap:.3e}")
    return np.linalg.inv(a)


def tau(m: ComplexMatrix, gamma_mat: ComplexMatrix, condition_cap: float = 1e12) -> ComplexMatrix:
    """Conjugate-linear involution g -> gamma (g*)^{-1} gamma.

    Its fixed-point set is SU(p,q) (together with det = 1). Involutive on
    invertible input; singular input raises NumericError.
    """
    return gamma_mat @ inv(m.conj().T, condition_cap) @ gamma_mat


def sigma(m: ComplexMatrix, gamma_mat: ComplexMatrix) -> ComplexMatrix:
    """Linear involution g -> gamma g gamma fixing S(U(p) x U(q))."""
    return gamma_mat @ m @ gamma_mat


def group_residual(m: ComplexMatrix, gamma_mat: ComplexMatrix) -> float:
    """||m* gamma m - gamma||_F + |det m - 1|; zero iff m is in SU(p,q)."""
    metric = frobenius(m.conj().T @ gamma_mat @ m - gamma_mat)
    return metric + abs(np.linalg.det(m) - 1.0)


def symspace_components(m: ComplexMatrix, gamma_mat: ComplexMatrix) -> tuple[float, float, float]:
    """(quadratic, hermiticity, unit-det) components of the symmetric-space
    membership residual: ||m gamma m gamma - I||_F, ||m - m*||_F, |det m - 1|."""
    n = m.shape[0]
    quad = frobenius(m @ gamma_mat @ m @ gamma_mat - np.eye(n))
    herm = frobenius(m - m.conj().T)
    det_dev = abs(np.linalg.det(m) - 1.0)
    return quad, herm, det_dev


def symspace_residual(m: ComplexMatrix, gamma_mat: ComplexMatrix) -> float:
    """Total membership residual for the Cartan-embedded symmetric space."""
    return sum(symspace_components(m, gamma_mat))
