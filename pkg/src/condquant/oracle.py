"""Reference quantizers used to check the trained network.

In 1D with the energy kernel (a = 0, r = 1) the optimal Q-point quantizer of
a law with positive density is unique: its points are the quantiles at
levels (q + 1/2) / Q.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from condquant.kernel import KernelParams
from condquant.measures import batch_distance_squared, batch_points_grad
from condquant.optim import AdamState, adam_step
from condquant.rng import STATIC_INIT, STATIC_Y, Rng

# Acklam's rational approximation to the standard normal inverse CDF
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def norm_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def _acklam(p: float) -> float:
    if p < _P_LOW:
        q = math.sqrt(-2 * math.log(p))
        return (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / (
            (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1)
    if p > 1 - _P_LOW:
        return -_acklam(1 - p)
    q = p - 0.5
    r = q * q
    return (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / (
        ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1)


def norm_ppf(p: float) -> float:
    """Standard normal inverse CDF, absolute error well below 1e-9 on (0, 1).

    One Newton step on the erfc-based CDF polishes the rational approximation.
    """
    if not 0 < p < 1:
        raise ValueError(f"probability must lie in (0, 1), got {p!r}")
    z = _acklam(p)
    density = math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
    return z - (norm_cdf(z) - p) / density


@dataclass(frozen=True)
class QuantileFunction:
    """Inverse CDF of a 1D law."""

    fn: Callable[[float], float]
    name: str = "custom"

    def __call__(self, alpha: float) -> float:
        return self.fn(alpha)

    @classmethod
    def normal(cls, mean: float = 0.0, std: float = 1.0) -> "QuantileFunction":
        if not std > 0:
            raise ValueError("std must be positive")
        return cls(lambda a: mean + std * norm_ppf(a), f"normal({mean}, {std})")

    @classmethod
    def uniform(cls, low: float = 0.0, high: float = 1.0) -> "QuantileFunction":
        if not high > low:
            raise ValueError("uniform law needs high > low")
        return cls(lambda a: low + (high - low) * a, f"uniform({low}, {high})")

    @classmethod
    def empirical(cls, sample) -> "QuantileFunction":
        """Left-continuous inverse of the empirical CDF."""
        xs = np.sort(np.asarray(sample, dtype=np.float64).ravel())
        if xs.size == 0:
            raise ValueError("empty sample")

        def fn(a):
            k = min(max(math.ceil(a * xs.size) - 1, 0), xs.size - 1)
            return float(xs[k])

        return cls(fn, "empirical")


def quantile_levels(Q: int) -> np.ndarray:
    return (np.arange(Q) + 0.5) / Q


def quantile_quantizer(qf: QuantileFunction, Q: int) -> np.ndarray:
    """Quantiles of ``qf`` at levels (q + 1/2)/Q, ascending."""
    if Q < 1:
        raise ValueError("Q must be >= 1")
    return np.sort(np.array([qf(a) for a in quantile_levels(Q)]))


@dataclass
class StaticQuantization:
    points: np.ndarray
    losses: list[tuple[int, float]]


def static_quantizer(p: KernelParams, sample_source, Q: int, steps: int, seed: int,
                     J: int = 512, lr: float = 1e-2, log_every: int = 10) -> StaticQuantization:
    """Quantize one fixed law by Adam descent directly on the Q point coordinates.

    ``sample_source(stream, J)`` returns J fresh draws, shape (J,) or (J, n).
    Each step uses new draws. Points start at Q draws from the law. The loss
    against the step's draws is recorded every ``log_every`` steps.
    """
    if Q < 1:
        raise ValueError("Q must be >= 1")
    rng = Rng(seed)

    def draw(stream, count):
        s = np.asarray(sample_source(stream, count), dtype=np.float64)
        return s[:, None] if s.ndim == 1 else s

    first = np.asarray(sample_source(rng.stream(STATIC_INIT), Q), dtype=np.float64)
    one_d = first.ndim == 1
    points = first[:, None] if one_d else first
    state = AdamState(points.size, lr=lr)
    losses = []
    for step in range(steps):
        target = draw(rng.stream(STATIC_Y, step), J)
        if step % log_every == 0:
            losses.append((step, float(batch_distance_squared(p, points[None], target[None])[0])))
        grad = batch_points_grad(p, points[None], target[None])[0]
        points = adam_step(state, points.ravel(), grad.ravel()).reshape(points.shape)
    if one_d:
        points = np.sort(points[:, 0])
    return StaticQuantization(points, losses)


class InterpolatedQuantizer:
    """Piecewise-linear interpolation of quantizers precomputed on a 1D grid.

    Outside the grid the nearest endpoint quantizer is returned.
    """

    def __init__(self, grid, values):
        grid = np.asarray(grid, dtype=np.float64)
        values = np.asarray(values, dtype=np.float64)
        if grid.ndim != 1 or grid.size < 1:
            raise ValueError("grid must be a non-empty 1-D array")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if values.ndim != 2 or values.shape[0] != grid.size:
            raise ValueError(f"values must have shape ({grid.size}, Q), got {values.shape}")
        if np.any(np.diff(values, axis=1) < 0):
            raise ValueError("each quantizer must be sorted ascending")
        self.grid, self.values = grid, values

    def __call__(self, x: float) -> np.ndarray:
        return np.array([np.interp(x, self.grid, col) for col in self.values.T])


def interpolated_quantizer(grid, values, x: float) -> np.ndarray:
    return InterpolatedQuantizer(grid, values)(x)
