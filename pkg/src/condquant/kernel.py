"""Huber-energy kernel h(y, y2) = (a^2 + |y - y2|^2)^(r/2) - a^r."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class KernelParams:
    """Parameters (a, r) of the Huber-energy kernel.

    ``a = 0, r = 1`` is the classical energy kernel ``|y - y2|``. Validation
    happens here once so the pairwise loops never re-check.
    """

    a: float = 1e-6
    r: float = 1.0

    def __post_init__(self):
        a, r = float(self.a), float(self.r)
        if not np.isfinite(a) or a < 0:
            raise ValueError(f"kernel parameter 'a' must be >= 0, got {self.a!r}")
        if not np.isfinite(r) or not 0 < r < 2:
            raise ValueError(f"kernel parameter 'r' must lie in (0, 2), got {self.r!r}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "r", r)


def _pair(y, y2):
    y = np.asarray(y, dtype=np.float64)
    y2 = np.asarray(y2, dtype=np.float64)
    if y.shape != y2.shape or y.ndim != 1:
        raise ValueError(f"points must be 1-D with equal dimension, got {y.shape} and {y2.shape}")
    return y, y2


def _from_sq(p: KernelParams, sq):
    """Kernel value from squared distance, without cancellation near zero."""
    sq = np.asarray(sq, dtype=np.float64)
    a2 = p.a * p.a
    if a2 == 0.0:
        return np.sqrt(sq) if p.r == 1.0 else sq ** (p.r / 2)
    if p.r == 1.0:
        return sq / (np.sqrt(a2 + sq) + p.a)
    with np.errstate(over="ignore"):
        ratio = sq / a2
        near = p.a**p.r * np.expm1(0.5 * p.r * np.log1p(np.minimum(ratio, 1.0)))
    far = (a2 + sq) ** (p.r / 2) - p.a**p.r
    return np.where(ratio <= 1.0, near, far)


def huber_energy(p: KernelParams, y, y2) -> float:
    y, y2 = _pair(y, y2)
    diff = y - y2
    return float(_from_sq(p, diff @ diff))


def huber_energy_grad(p: KernelParams, y, y2) -> np.ndarray:
    """Gradient of ``huber_energy`` with respect to ``y``.

    At coincident points with ``a = 0`` the kernel has a kink; the zero
    subgradient is returned there.
    """
    y, y2 = _pair(y, y2)
    diff = y - y2
    base = p.a * p.a + float(diff @ diff)
    if base == 0.0:
        return np.zeros_like(diff)
    return p.r * base ** (p.r / 2 - 1) * diff


def _sq_dist(ys, zs):
    diff = ys[..., :, None, :] - zs[..., None, :, :]
    if diff.shape[-1] == 1:
        return diff, np.square(diff[..., 0])
    return diff, np.einsum("...k,...k->...", diff, diff)


def pairwise(p: KernelParams, ys: np.ndarray, zs: np.ndarray) -> np.ndarray:
    """Kernel matrix between point sets of shape (..., L, n) and (..., M, n).

    Leading batch axes broadcast. Returns shape (..., L, M).
    """
    _, sq = _sq_dist(ys, zs)
    return _from_sq(p, sq)


def pairwise_grad(p: KernelParams, ys: np.ndarray, zs: np.ndarray) -> np.ndarray:
    """Gradients d h(ys_i, zs_j) / d ys_i, shape (..., L, M, n); zero at kinks."""
    diff, sq = _sq_dist(ys, zs)
    base = p.a * p.a + sq
    with np.errstate(divide="ignore", invalid="ignore"):
        if p.r == 1.0:
            scale = np.where(base > 0, 1.0 / np.sqrt(base), 0.0)
        else:
            scale = np.where(base > 0, p.r * base ** (p.r / 2 - 1), 0.0)
    return scale[..., None] * diff
