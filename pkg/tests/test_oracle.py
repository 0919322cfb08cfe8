import math

import numpy as np
import pytest

from condquant.kernel import KernelParams
from condquant.oracle import (
    InterpolatedQuantizer,
    QuantileFunction,
    interpolated_quantizer,
    norm_ppf,
    quantile_quantizer,
    static_quantizer,
)


def bisect_ppf(p, lo=-40.0, hi=40.0):
    """Independent inverse of the erfc-based normal CDF by bisection."""
    cdf = lambda z: 0.5 * math.erfc(-z / math.sqrt(2))
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# frozen from bisect_ppf at levels 0.1, 0.3, 0.5, 0.7, 0.9
NORMAL_Q5 = [-1.2815515655446004, -0.52440051270804067, 0.0, 0.52440051270804067, 1.2815515655446004]


def test_frozen_values_match_bisection():
    levels = [0.1, 0.3, 0.5, 0.7, 0.9]
    np.testing.assert_allclose([bisect_ppf(a) for a in levels], NORMAL_Q5, atol=1e-12)


@pytest.mark.parametrize("p", [1e-10, 1e-4, 0.02, 0.02425, 0.1, 0.3, 0.5, 0.77, 0.97576, 0.999, 1 - 1e-6])
def test_norm_ppf_accuracy(p):
    assert abs(norm_ppf(p) - bisect_ppf(p)) <= 1e-9


def test_norm_ppf_domain():
    for bad in (0.0, 1.0, -0.1, 1.5):
        with pytest.raises(ValueError):
            norm_ppf(bad)


def test_uniform_two_points():
    np.testing.assert_allclose(quantile_quantizer(QuantileFunction.uniform(0, 1), 2), [0.25, 0.75], atol=1e-15)


def test_normal_median():
    assert quantile_quantizer(QuantileFunction.normal(), 1).tolist() == [0.0]


def test_normal_five():
    np.testing.assert_allclose(quantile_quantizer(QuantileFunction.normal(), 5),
                               [-1.2816, -0.5244, 0, 0.5244, 1.2816], atol=1e-3)
    np.testing.assert_allclose(quantile_quantizer(QuantileFunction.normal(), 5), NORMAL_Q5, atol=1e-12)


@pytest.mark.parametrize("Q", [1, 2, 7, 30])
def test_sorted_strictly_increasing(Q):
    pts = quantile_quantizer(QuantileFunction.normal(0.3, 2.0), Q)
    assert np.all(np.diff(pts) > 0)


@pytest.mark.parametrize("m", [-2.5, 0.0, 0.75, 3.0])
def test_shift_consistency(m):
    base = quantile_quantizer(QuantileFunction.normal(), 6)
    np.testing.assert_array_equal(quantile_quantizer(QuantileFunction.normal(m, 1.0), 6), m + base)


def test_quantile_function_monotone():
    for qf in (QuantileFunction.normal(1, 3), QuantileFunction.uniform(-2, 5),
               QuantileFunction.empirical(np.random.default_rng(0).normal(size=50))):
        vals = [qf(a) for a in np.linspace(0.001, 0.999, 500)]
        assert np.all(np.diff(vals) >= 0)


def test_empirical_quantile_function():
    qf = QuantileFunction.empirical([3.0, 1.0, 2.0, 4.0])
    assert quantile_quantizer(qf, 4).tolist() == [1.0, 2.0, 3.0, 4.0]


def normal_source(stream, J):
    return stream.normal(J)


def test_static_dirac_target():
    res = static_quantizer(KernelParams(1e-6, 1.0), lambda s, J: np.zeros(J), 1, 300, seed=0, J=16)
    assert abs(res.points[0]) < 1e-3


def test_static_uniform_two_points():
    res = static_quantizer(KernelParams(1e-6, 1.0), lambda s, J: s.uniform(J), 2, 3000, seed=1)
    np.testing.assert_allclose(res.points, [0.25, 0.75], atol=0.03)


def test_static_normal_symmetric_and_deterministic():
    p = KernelParams(1e-6, 1.0)
    res = static_quantizer(p, normal_source, 4, 2000, seed=3)
    again = static_quantizer(p, normal_source, 4, 2000, seed=3)
    assert res.points.tobytes() == again.points.tobytes()
    assert len(res.losses) == 200
    assert res.losses[-1][1] < res.losses[0][1]
    np.testing.assert_allclose(res.points, -res.points[::-1], atol=0.05)


def test_static_multidimensional_shape():
    res = static_quantizer(KernelParams(0.1, 1.0), lambda s, J: s.normal((J, 2)), 3, 50, seed=0, J=32)
    assert res.points.shape == (3, 2)


class TestInterpolation:
    grid = np.array([-1.0, 0.0, 2.0])
    values = np.array([[0.0, 1.0], [2.0, 3.0], [4.0, 9.0]])

    def test_nodes_exact(self):
        for x, y in zip(self.grid, self.values):
            np.testing.assert_array_equal(interpolated_quantizer(self.grid, self.values, x), y)

    def test_midpoint_average(self):
        np.testing.assert_allclose(interpolated_quantizer(self.grid, self.values, 1.0), [3.0, 6.0])

    def test_clamps(self):
        np.testing.assert_array_equal(interpolated_quantizer(self.grid, self.values, -5.0), self.values[0])
        np.testing.assert_array_equal(interpolated_quantizer(self.grid, self.values, 50.0), self.values[-1])

    def test_unsorted_grid_rejected(self):
        with pytest.raises(ValueError):
            InterpolatedQuantizer([0.0, -1.0], [[0.0], [1.0]])
        with pytest.raises(ValueError):
            InterpolatedQuantizer([0.0, 1.0], [[1.0, 0.0], [1.0, 2.0]])

    def test_continuous_and_monotone(self):
        interp = InterpolatedQuantizer(self.grid, self.values)
        xs = np.linspace(-2, 3, 2001)
        ys = np.array([interp(x) for x in xs])
        assert np.max(np.abs(np.diff(ys, axis=0))) < 0.02
        assert np.all(np.diff(ys, axis=0) >= 0)
