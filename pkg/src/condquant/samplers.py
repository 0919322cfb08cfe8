"""Joint laws on (X, Y): marginal draws of X and conditional draws of Y | X = x."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from condquant.rng import Stream


class ConditionalSampler:
    """Base class; subclasses set ``n_x``, ``n_y`` and implement the two draws."""

    n_x: int
    n_y: int

    def sample_x(self, rng: Stream, count: int) -> np.ndarray:
        """``count`` i.i.d. draws of X, shape (count, n_x)."""
        raise NotImplementedError

    def sample_y_given_x(self, rng: Stream, x, count: int) -> np.ndarray:
        """``count`` i.i.d. draws from the conditional law at ``x``, shape (count, n_y)."""
        raise NotImplementedError

    def _check_x(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n_x,):
            raise ValueError(f"condition must have shape ({self.n_x},), got {x.shape}")
        return x


class AdditiveGaussian(ConditionalSampler):
    """X ~ N(0, I_n), Y | X = x ~ N(x, I_n): the law of X + Y for independent X, Y."""

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("dimension must be >= 1")
        self.n_x = self.n_y = n

    def sample_x(self, rng, count):
        return rng.normal((count, self.n_x))

    def sample_y_given_x(self, rng, x, count):
        x = self._check_x(x)
        return x + rng.normal((count, self.n_y))


class MultiplicativeGaussian(ConditionalSampler):
    """X ~ N(0, I_n), Y | X = x ~ x * Z componentwise with Z ~ N(0, I_n)."""

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("dimension must be >= 1")
        self.n_x = self.n_y = n

    def sample_x(self, rng, count):
        return rng.normal((count, self.n_x))

    def sample_y_given_x(self, rng, x, count):
        x = self._check_x(x)
        return x * rng.normal((count, self.n_y))


class EmpiricalJoint(ConditionalSampler):
    """Resampling from a recorded dataset of (x, y) pairs.

    X is drawn uniformly among the stored x's. Y | X = x is drawn uniformly
    among the y's of the ``knn_k`` stored x's closest to ``x`` (Euclidean,
    ties to the lowest row index).
    """

    def __init__(self, xs, ys, knn_k: int):
        xs = np.asarray(xs, dtype=np.float64)
        ys = np.asarray(ys, dtype=np.float64)
        if xs.ndim == 1:
            xs = xs[:, None]
        if ys.ndim == 1:
            ys = ys[:, None]
        if xs.shape[0] == 0:
            raise ValueError("dataset is empty")
        if xs.shape[0] != ys.shape[0]:
            raise ValueError(f"dataset has {xs.shape[0]} x rows but {ys.shape[0]} y rows")
        if not 1 <= knn_k <= xs.shape[0]:
            raise ValueError(f"knn_k must lie in [1, {xs.shape[0]}], got {knn_k}")
        self.xs, self.ys, self.knn_k = xs, ys, int(knn_k)
        self.n_x, self.n_y = xs.shape[1], ys.shape[1]

    def sample_x(self, rng, count):
        return self.xs[rng.integers(self.xs.shape[0], size=count)]

    def neighbors(self, x) -> np.ndarray:
        x = self._check_x(x)
        dist = np.sum((self.xs - x) ** 2, axis=1)
        return np.argsort(dist, kind="stable")[: self.knn_k]

    def sample_y_given_x(self, rng, x, count):
        idx = self.neighbors(x)
        return self.ys[idx[rng.integers(idx.size, size=count)]]


def additive_gaussian(n: int) -> AdditiveGaussian:
    return AdditiveGaussian(n)


def multiplicative_gaussian(n: int) -> MultiplicativeGaussian:
    return MultiplicativeGaussian(n)


def empirical_joint(dataset, knn_k: int) -> EmpiricalJoint:
    """Sampler over a list of (x, y) pairs."""
    pairs = list(dataset)
    if not pairs:
        raise ValueError("dataset is empty")
    xs = np.array([np.atleast_1d(x) for x, _ in pairs], dtype=np.float64)
    ys = np.array([np.atleast_1d(y) for _, y in pairs], dtype=np.float64)
    return EmpiricalJoint(xs, ys, knn_k)


def read_dataset(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a CSV with header ``x_1..x_{n_x}, y_1..y_{n_y}``."""
    with open(Path(path), newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValueError(f"{path}: missing header row") from None
        rows = [[float(v) for v in row] for row in reader if row]
    x_cols = [i for i, h in enumerate(header) if h.startswith("x_")]
    y_cols = [i for i, h in enumerate(header) if h.startswith("y_")]
    if not x_cols or not y_cols or len(x_cols) + len(y_cols) != len(header):
        raise ValueError(f"{path}: header must be x_1..x_n, y_1..y_m, got {header}")
    if any(len(r) != len(header) for r in rows):
        raise ValueError(f"{path}: every row needs {len(header)} values")
    data = np.array(rows, dtype=np.float64).reshape(-1, len(header))
    return data[:, x_cols], data[:, y_cols]
