"""Spectral-plane machinery on the two-sheeted surface over the half plane.

For a point x = (rho, z) with rho > 0, the surface is the zero set of
F_x(lam, w) = lam^2 - 2 lam (z - w) - rho^2. Over a fixed surface
coordinate w the two roots form a pole pair with product -rho^2, swapped
by the deck map lam -> -rho^2/lam. The rational coefficients a, b and the
connection components (omega_rho, omega_z) below are the fixed choices that
make the covariant derivative D_mu = d_mu - omega_mu d_lam reduce to d at
lam = 0.
"""
from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError, SingularPointError

#: points closer than this to a branch point are flagged singular
BRANCH_EXCLUSION = 1e-12


@dataclass(frozen=True)
class DomainPoint:
    """Weyl half-plane point; rho is strictly positive (axis excluded)."""

    rho: float
    z: float

    def __post_init__(self) -> None:
        if not (self.rho > 0.0) or not np.isfinite(self.rho) or not np.isfinite(self.z):
            raise DomainError(f"domain point needs rho > 0 and finite coords, got {self!r}")


@dataclass(frozen=True)
class PolePair:
    """The two roots over one surface coordinate; lambda_in is the
    quadratic-formula minus branch, lambda_out the plus branch, and
    lambda_in * lambda_out = -rho^2."""

    lambda_in: complex
    lambda_out: complex


def varpi(lam: complex, x: DomainPoint) -> complex:
    """Surface coordinate rho^2/(2 lam) + z - lam/2; deck-invariant."""
    if lam == 0:
        raise DomainError("varpi is undefined at lam = 0")
    return x.rho * x.rho / (2.0 * lam) + x.z - lam / 2.0


def deck(lam: complex, x: DomainPoint) -> complex:
    """Sheet-swapping involution lam -> -rho^2 / lam."""
    if lam == 0:
        raise DomainError("deck map is undefined at lam = 0")
    return -x.rho * x.rho / lam


def pole_pair(varpi0: complex, x: DomainPoint) -> PolePair:
    """Roots of lam^2 - 2 lam (z - varpi0) - rho^2 over a non-real varpi0.

    Labels use the smooth quadratic-formula branch (principal square root):
    lambda_in = (z - varpi0) - sqrt((z - varpi0)^2 + rho^2), lambda_out the
    conjugate-branch partner. The labels are continuous wherever the
    principal branch is; the dressed solution is invariant under the paired
    relabeling, so labeling is a determinism choice, not physics.
    """
    w0 = complex(varpi0)
    if w0.imag == 0.0:
        raise ConfigError(f"pole position must be non-real, got {w0}")
    c = x.z - w0
    disc = c * c + x.rho * x.rho
    if abs(disc) < BRANCH_EXCLUSION:
        raise SingularPointError(f"branch point of varpi0={w0} at {x!r}")
    root = cmath.sqrt(disc)
    return PolePair(lambda_in=c - root, lambda_out=c + root)


def ab(lam: complex, x: DomainPoint) -> tuple[complex, complex]:
    """The rational pair a = rho^2/(lam^2 + rho^2), b = lam/(lam^2 + rho^2).

    Satisfies a(0) = 1, b(0) = 0 and the algebraic constraint
    a^2 + rho^2 b^2 - a = 0 identically; simple poles at lam = +-i rho.
    """
    den = lam * lam + x.rho * x.rho
    if den == 0:
        raise DomainError(f"a, b have a pole at lam = +-i*rho (lam={lam}, rho={x.rho})")
    return x.rho * x.rho / den, lam / den


def omega_forms(lam: complex, x: DomainPoint) -> tuple[complex, complex]:
    """Connection components (omega_rho, omega_z) of D_mu = d_mu - omega_mu d_lam.

    Closed forms from differentiating the surface coordinate:
    omega_rho = -2 rho lam / (lam^2 + rho^2), omega_z = -2 lam^2 / (lam^2 + rho^2).
    """
    if lam == 0:
        raise DomainError("omega is defined away from lam = 0")
    den = lam * lam + x.rho * x.rho
    if den == 0:
        raise DomainError(f"omega has a pole at lam = +-i*rho (lam={lam}, rho={x.rho})")
    return -2.0 * x.rho * lam / den, -2.0 * lam * lam / den


def ab_partials(lam: complex, x: DomainPoint):
    """Closed-form partial derivatives of a and b wrt (rho, z, lam)."""
    rho = x.rho
    den = lam * lam + rho * rho
    if den == 0:
        raise DomainError("a, b partials undefined on the pole set lam = +-i*rho")
    d2 = den * den
    da = (2.0 * rho * lam * lam / d2, 0.0, -2.0 * lam * rho * rho / d2)
    db = (-2.0 * rho * lam / d2, 0.0, (rho * rho - lam * lam) / d2)
    return da, db


def ab_d_identity_residual(lam: complex, x: DomainPoint) -> float:
    """Residual of the duality identity Da = rho * (hodge dual of Db).

    Componentwise: |D_rho a + rho D_z b| + |D_z a - rho D_rho b|, with
    D_mu f = d_mu f - omega_mu d_lam f assembled from closed-form partials.
    Vanishes identically for the fixed (a, b) pair.
    """
    om_r, om_z = omega_forms(lam, x)
    (da_r, da_z, da_l), (db_r, db_z, db_l) = ab_partials(lam, x)
    d_rho_a = da_r - om_r * da_l
    d_z_a = da_z - om_z * da_l
    d_rho_b = db_r - om_r * db_l
    d_z_b = db_z - om_z * db_l
    return abs(d_rho_a + x.rho * d_z_b) + abs(d_z_a - x.rho * d_rho_b)
