"""Finite-difference certification of dressed fields.

Works on rectangular Weyl-coordinate grids with uniform spacing per axis.
The two field equations are checked in first-order form for the connection
W = -(dq) q^{-1}: a curvature residual ||d_rho W_z - d_z W_rho + [W_rho, W_z]||
and a divergence residual ||d_rho(rho W_rho) + d_z(rho W_z)||. Central
second-order stencils are used in the interior and second-order one-sided
stencils on the boundary; boundary values and a margin around the singular
locus are excluded from pass/fail statistics. Stencils touching a singular
hole yield no data (NaN), never zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import algebra, spectral
from .dressing import DressedPoint
from .errors import ConfigError
from .spectral import DomainPoint


@dataclass
class FieldGrid:
    """Per-point q values on a rectangular (rho, z) lattice.

    values[i, j] is the matrix at (rhos[i], zs[j]); mask[i, j] is False at
    singular holes.
    """

    rhos: np.ndarray
    zs: np.ndarray
    values: np.ndarray
    mask: np.ndarray

    def __post_init__(self) -> None:
        self.rhos = np.asarray(self.rhos, dtype=float)
        self.zs = np.asarray(self.zs, dtype=float)
        if self.rhos.ndim != 1 or self.zs.ndim != 1:
            raise ConfigError("grid axes must be one-dimensional")
        if self.rhos.min() <= 0:
            raise ConfigError("grid must satisfy rho > 0")
        for axis in (self.rhos, self.zs):
            if axis.size >= 2:
                d = np.diff(axis)
                if d.min() <= 0 or (d.max() - d.min()) > 1e-9 * d.max():
                    raise ConfigError("grid spacing must be uniform and increasing per axis")
        if self.values.shape[:2] != (self.rhos.size, self.zs.size):
            raise ConfigError("values shape does not match the grid axes")
        if self.mask.shape != self.values.shape[:2]:
            raise ConfigError("mask shape does not match the grid axes")

    @property
    def h_rho(self) -> float:
        return float(self.rhos[1] - self.rhos[0])

    @property
    def h_z(self) -> float:
        return float(self.zs[1] - self.zs[0])

    @classmethod
    def from_results(cls, rhos, zs, results: list[list[DressedPoint]]) -> "FieldGrid":
        rhos = np.asarray(rhos, dtype=float)
        zs = np.asarray(zs, dtype=float)
        n = next((r.q.shape[0] for row in results for r in row if r.q is not None), 1)
        values = np.full((rhos.size, zs.size, n, n), np.nan, dtype=complex)
        mask = np.zeros((rhos.size, zs.size), dtype=bool)
        for i, row in enumerate(results):
            for j, res in enumerate(row):
                if res.q is not None and not res.singular:
                    values[i, j] = res.q
                    mask[i, j] = True
        return cls(rhos=rhos, zs=zs, values=values, mask=mask)


def _batched_inv_with_holes(field: FieldGrid) -> np.ndarray:
    n = field.values.shape[-1]
    filled = np.where(field.mask[..., None, None], field.values, np.eye(n, dtype=complex))
    inv = np.linalg.inv(filled)
    inv[~field.mask] = np.nan
    return inv


def _grad(arr: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Second-order gradient: central in the interior, one-sided on the
    boundary, assembled from value differences so that constant input
    yields exactly zero. NaN propagates to any stencil touching it."""
    a = np.moveaxis(arr, axis, 0)
    out = np.empty_like(a)
    out[1:-1] = (a[2:] - a[:-2]) / (2.0 * h)
    out[0] = (4.0 * (a[1] - a[0]) - (a[2] - a[0])) / (2.0 * h)
    out[-1] = (4.0 * (a[-1] - a[-2]) - (a[-1] - a[-3])) / (2.0 * h)
    return np.moveaxis(out, 0, axis)


def hodge_residual(field: FieldGrid) -> tuple[np.ndarray, np.ndarray]:
    """Per-point residuals of the two first-order field equations.

    Returns (curvature, divergence) arrays of shape (n_rho, n_z); NaN marks
    points whose stencil touched a hole. Needs at least 3 points per axis.
    """
    if field.rhos.size < 3 or field.zs.size < 3:
        raise ConfigError("hodge residual needs at least 3 grid points per axis")
    q = np.where(field.mask[..., None, None], field.values, np.nan)
    qinv = _batched_inv_with_holes(field)
    h_rho, h_z = field.h_rho, field.h_z
    w_rho = -np.matmul(_grad(q, h_rho, 0), qinv)
    w_z = -np.matmul(_grad(q, h_z, 1), qinv)
    curl = (_grad(w_z, h_rho, 0) - _grad(w_rho, h_z, 1)
            + np.matmul(w_rho, w_z) - np.matmul(w_z, w_rho))
    rho_col = field.rhos[:, None, None, None]
    div = _grad(rho_col * w_rho, h_rho, 0) + rho_col * _grad(w_z, h_z, 1)
    res1 = np.linalg.norm(curl, axis=(-2, -1))
    res2 = np.linalg.norm(div, axis=(-2, -1))
    return res1, res2


def interior_mask(shape: tuple[int, int], margin: int = 2) -> np.ndarray:
    """True on points at least ``margin`` cells away from the grid boundary."""
    m = np.zeros(shape, dtype=bool)
    if shape[0] > 2 * margin and shape[1] > 2 * margin:
        m[margin:shape[0] - margin, margin:shape[1] - margin] = True
    return m


def exclusion_mask(locus: np.ndarray, margin: int = 3) -> np.ndarray:
    """Dilate a boolean locus mask by a Chebyshev radius (the 3h margin rule)."""
    out = locus.copy()
    for di in range(-margin, margin + 1):
        for dj in range(-margin, margin + 1):
            if di == 0 and dj == 0:
                continue
            shifted = np.zeros_like(locus)
            src_i = slice(max(0, -di), locus.shape[0] - max(0, di))
            dst_i = slice(max(0, di), locus.shape[0] - max(0, -di))
            src_j = slice(max(0, -dj), locus.shape[1] - max(0, dj))
            dst_j = slice(max(0, dj), locus.shape[1] - max(0, -dj))
            shifted[dst_i, dst_j] = locus[src_i, src_j]
            out |= shifted
    return out


def refinement_ratios(coarse: FieldGrid, fine: FieldGrid,
                      margin: int = 2) -> tuple[float, float]:
    """Median residual ratios (curvature, divergence) under h -> h/2.

    The fine grid must be the 2x refinement of the coarse grid over the
    same region; ratios are taken at coarse interior points where both
    residuals are finite. Exactly-zero residual pairs (constant fields)
    yield math.inf.
    """
    if fine.rhos.size != 2 * coarse.rhos.size - 1 or fine.zs.size != 2 * coarse.zs.size - 1:
        raise ConfigError("fine grid is not the 2x refinement of the coarse grid")
    if (abs(fine.rhos[::2] - coarse.rhos).max() > 1e-9 * coarse.h_rho
            or abs(fine.zs[::2] - coarse.zs).max() > 1e-9 * coarse.h_z):
        raise ConfigError("grids are not nested over the same region")
    res_c = hodge_residual(coarse)
    res_f = hodge_residual(fine)
    out = []
    inner = interior_mask((coarse.rhos.size, coarse.zs.size), margin)
    for rc, rf in zip(res_c, res_f):
        rf_at_coarse = rf[::2, ::2]
        valid = inner & np.isfinite(rc) & np.isfinite(rf_at_coarse)
        num = rc[valid]
        den = rf_at_coarse[valid]
        if num.size == 0:
            raise ConfigError("no interior points with data to compare")
        if np.all(num == 0) and np.all(den == 0):
            out.append(math.inf)
            continue
        pos = den > 0
        if not np.any(pos):
            raise ConfigError("fine-grid residuals vanish where coarse ones do not")
        out.append(float(np.median(num[pos] / den[pos])))
    return out[0], out[1]


def convergence_order(coarse: FieldGrid, fine: FieldGrid, margin: int = 2) -> float:
    """log2 of the pooled median residual ratio; inf means exactly zero
    residuals on both grids (constant fields)."""
    r1, r2 = refinement_ratios(coarse, fine, margin)
    if math.isinf(r1) and math.isinf(r2):
        return math.inf
    finite = [r for r in (r1, r2) if math.isfinite(r)]
    return math.log2(float(np.median(finite)))


def constraint_scan(field: FieldGrid, gamma_mat: np.ndarray) -> dict[str, float]:
    """Maxima of the membership-residual components over non-singular points."""
    out = {"quadratic": 0.0, "hermiticity": 0.0, "unit_det": 0.0, "symspace": 0.0}
    for i in range(field.rhos.size):
        for j in range(field.zs.size):
            if not field.mask[i, j]:
                continue
            quad, herm, det_dev = algebra.symspace_components(field.values[i, j], gamma_mat)
            out["quadratic"] = max(out["quadratic"], quad)
            out["hermiticity"] = max(out["hermiticity"], herm)
            out["unit_det"] = max(out["unit_det"], det_dev)
            out["symspace"] = max(out["symspace"], quad + herm + det_dev)
    return out


def locus_mask(det_a: np.ndarray, tol: float) -> np.ndarray:
    """Grid points on (or adjacent to a sign change of) the det A zero set."""
    det_a = np.asarray(det_a, dtype=complex)
    mask = np.abs(det_a) < tol
    mask |= ~np.isfinite(det_a.real)
    re = det_a.real
    with np.errstate(invalid="ignore"):
        cross_r = (re[:-1, :] * re[1:, :]) < 0
        cross_z = (re[:, :-1] * re[:, 1:]) < 0
    mask[:-1, :] |= cross_r
    mask[1:, :] |= cross_r
    mask[:, :-1] |= cross_z
    mask[:, 1:] |= cross_z
    return mask


def singular_locus(det_a: np.ndarray, rhos, zs, tol: float = 1e-12) -> list[DomainPoint]:
    """Points where |det A| < tol, plus midpoints of sign-change cells."""
    rhos = np.asarray(rhos, dtype=float)
    zs = np.asarray(zs, dtype=float)
    det_a = np.asarray(det_a, dtype=complex)
    pts: list[DomainPoint] = []
    small = np.abs(det_a) < tol
    for i, j in zip(*np.nonzero(small)):
        pts.append(DomainPoint(rho=float(rhos[i]), z=float(zs[j])))
    re = det_a.real
    finite = np.isfinite(re)
    for i in range(det_a.shape[0] - 1):
        for j in range(det_a.shape[1]):
            if finite[i, j] and finite[i + 1, j] and re[i, j] * re[i + 1, j] < 0:
                pts.append(DomainPoint(rho=float(0.5 * (rhos[i] + rhos[i + 1])), z=float(zs[j])))
    for i in range(det_a.shape[0]):
        for j in range(det_a.shape[1] - 1):
            if finite[i, j] and finite[i, j + 1] and re[i, j] * re[i, j + 1] < 0:
                pts.append(DomainPoint(rho=float(rhos[i]), z=float(0.5 * (zs[j] + zs[j + 1]))))
    return pts


def lambda_flow_residual(varpi0: complex, x: DomainPoint, h: float,
                         outer_root: bool = False) -> float:
    """Residual of the pole-flow identity d(lam_k) + omega(lam_k(x), x) = 0.

    The gradient of the tracked root is taken by central differences with
    step h; the identity holds for either member of the pole pair
    (``outer_root`` selects the deck partner). O(h^2) for smooth branches.
    """
    def root(p: DomainPoint) -> complex:
        pair = spectral.pole_pair(varpi0, p)
        return pair.lambda_out if outer_root else pair.lambda_in

    lam = root(x)
    d_rho = (root(DomainPoint(x.rho + h, x.z)) - root(DomainPoint(x.rho - h, x.z))) / (2 * h)
    d_z = (root(DomainPoint(x.rho, x.z + h)) - root(DomainPoint(x.rho, x.z - h))) / (2 * h)
    om_rho, om_z = spectral.omega_forms(lam, x)
    return abs(d_rho + om_rho) + abs(d_z + om_z)
