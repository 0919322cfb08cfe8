"""Finitely supported measures and their squared Huber-energy distance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from condquant.kernel import KernelParams, huber_energy, pairwise, pairwise_grad

WEIGHT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Weighted sum of Dirac masses.

    ``points`` has shape (L, n_y); ``weights`` has shape (L,) and sums to 1.
    Both arrays are copied and made read-only.
    """

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        w = np.array(self.weights, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ValueError(f"points must have shape (L, n_y) with L >= 1, got {pts.shape}")
        if w.shape != (pts.shape[0],):
            raise ValueError(f"weights shape {w.shape} does not match {pts.shape[0]} points")
        if abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
        pts.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def empirical(points) -> DiscreteMeasure:
    """Uniform-weight measure on ``points``; every weight is exactly 1/L."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError("empirical measure needs at least one point")
    n = pts.shape[0]
    return DiscreteMeasure(pts, np.full(n, 1.0 / n))


def _check_dims(m1: DiscreteMeasure, m2: DiscreteMeasure):
    if m1.dim != m2.dim:
        raise ValueError(f"point dimension mismatch: {m1.dim} vs {m2.dim}")


def _quad(p, ys, wy, zs, wz):
    return float(wy @ pairwise(p, ys, zs) @ wz)


def distance_squared(p: KernelParams, m1: DiscreteMeasure, m2: DiscreteMeasure) -> float:
    """Squared distance between two discrete measures induced by the kernel."""
    _check_dims(m1, m2)
    cross = _quad(p, m1.points, m1.weights, m2.points, m2.weights)
    self1 = _quad(p, m1.points, m1.weights, m1.points, m1.weights)
    self2 = _quad(p, m2.points, m2.weights, m2.points, m2.weights)
    return cross - 0.5 * self1 - 0.5 * self2


def distance_squared_reference(p: KernelParams, m1: DiscreteMeasure, m2: DiscreteMeasure) -> float:
    """Naive double loops, row-major accumulation. Slow; kept as a reference."""
    _check_dims(m1, m2)

    def double_sum(ma, mb):
        total = 0.0
        for i in range(len(ma)):
            for j in range(len(mb)):
                total += ma.weights[i] * mb.weights[j] * huber_energy(p, ma.points[i], mb.points[j])
        return total

    return double_sum(m1, m2) - 0.5 * double_sum(m1, m1) - 0.5 * double_sum(m2, m2)


def distance_squared_grad(p: KernelParams, m_var: DiscreteMeasure, m_fixed: DiscreteMeasure) -> np.ndarray:
    """Gradient of ``distance_squared(p, m_var, m_fixed)`` w.r.t. the points of ``m_var``.

    Returns shape (L, n_y). Weights are held fixed.
    """
    _check_dims(m_var, m_fixed)
    return points_grad(p, m_var.points, m_var.weights, m_fixed.points, m_fixed.weights)


def points_grad(p, ys, wy, zs, wz):
    # the self-term appears twice in the double sum, cancelling its 1/2
    cross = np.einsum("...ljn,...j->...ln", pairwise_grad(p, ys, zs), wz)
    self_ = np.einsum("...lkn,...k->...ln", pairwise_grad(p, ys, ys), wy)
    return wy[..., :, None] * (cross - self_)


def batch_distance_squared(p: KernelParams, ys: np.ndarray, zs: np.ndarray,
                           include_target_self: bool = True) -> np.ndarray:
    """Distances between uniform measures, batched.

    ``ys`` has shape (B, L, n), ``zs`` has shape (B, M, n); returns (B,).
    ``include_target_self=False`` drops the constant self-term of ``zs``.
    """
    cross = pairwise(p, ys, zs).mean(axis=(-2, -1))
    self1 = pairwise(p, ys, ys).mean(axis=(-2, -1))
    if not include_target_self:
        return cross - 0.5 * self1
    self2 = pairwise(p, zs, zs).mean(axis=(-2, -1))
    return cross - 0.5 * self1 - 0.5 * self2


def batch_points_grad(p: KernelParams, ys: np.ndarray, zs: np.ndarray) -> np.ndarray:
    """Gradient of ``batch_distance_squared`` per element w.r.t. ``ys``, shape (B, L, n)."""
    L, M = ys.shape[-2], zs.shape[-2]
    cross = pairwise_grad(p, ys, zs).sum(axis=-2) / (L * M)
    self_ = pairwise_grad(p, ys, ys).sum(axis=-2) / (L * L)
    return cross - self_
