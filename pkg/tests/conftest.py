import numpy as np
import pytest


def central_diff(f, x, h=1e-5):
    """Central finite-difference gradient of scalar ``f`` at flat array ``x``."""
    x = np.array(x, dtype=np.float64)
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e.flat[i] = h
        g.flat[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def rel_err(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), 1e-300)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# Trained models shared by the acceptance criteria and the trained-model property tests.
# Seeds are fixed; see README for how the 1D seed behaves relative to others.
ADDITIVE_1D_SEED = 1
SEED_2D = 0


@pytest.fixture(scope="session")
def additive_1d_run(tmp_path_factory):
    from condquant import KernelParams, NetArchitecture, TrainConfig, additive_gaussian, train

    out = tmp_path_factory.mktemp("additive1d")
    config = TrainConfig(B=128, J=64, kernel=KernelParams(1e-6, 1.0), max_iterations=3000, seed=ADDITIVE_1D_SEED)
    net, report = train(config, NetArchitecture(1, 1, 5), additive_gaussian(1), out_dir=out)
    return config, net, report, out


@pytest.fixture(scope="session")
def additive_2d_run(tmp_path_factory):
    from condquant import NetArchitecture, TrainConfig, additive_gaussian, train

    out = tmp_path_factory.mktemp("additive2d")
    config = TrainConfig(max_iterations=2000, seed=SEED_2D)
    net, report = train(config, NetArchitecture(2, 2, 10), additive_gaussian(2), out_dir=out)
    return config, net, report, out


@pytest.fixture(scope="session")
def multiplicative_2d_run(tmp_path_factory):
    from condquant import NetArchitecture, TrainConfig, multiplicative_gaussian, train

    out = tmp_path_factory.mktemp("multiplicative2d")
    config = TrainConfig(max_iterations=2000, seed=SEED_2D)
    net, report = train(config, NetArchitecture(2, 2, 10), multiplicative_gaussian(2), out_dir=out)
    return config, net, report, out
