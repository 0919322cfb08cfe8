"""Counter-based random substreams.

Each draw site gets its own Philox stream: the key holds (seed, purpose) and
the counter holds the (iteration, index) labels, so a stream's output does
not depend on which other streams were consumed or in what order.
"""

from __future__ import annotations

import numpy as np

MASK64 = 0xFFFF_FFFF_FFFF_FFFF

# purpose tags
SAMPLE_X = 1
SAMPLE_Y = 2
EVAL_Y = 3
STATIC_INIT = 4
STATIC_Y = 5


class Rng:
    """Seeded factory of independent substreams."""

    def __init__(self, seed: int):
        self.seed = int(seed) & MASK64

    def stream(self, purpose: int, iteration: int = 0, index: int = 0) -> "Stream":
        bitgen = np.random.Philox(
            key=[self.seed, purpose & MASK64],
            counter=[0, iteration & MASK64, index & MASK64, 0],
        )
        return Stream(np.random.Generator(bitgen))


class Stream:
    """Uniform and Gaussian draws from one substream.

    Gaussians use Box-Muller on the stream's uniforms so the transform is
    fixed independently of numpy's own normal sampler.
    """

    def __init__(self, gen: np.random.Generator):
        self._gen = gen

    def uniform(self, size=None) -> np.ndarray:
        return self._gen.random(size)

    def integers(self, high: int, size=None) -> np.ndarray:
        return self._gen.integers(0, high, size=size)

    def normal(self, size) -> np.ndarray:
        shape = (size,) if np.isscalar(size) else tuple(size)
        n = int(np.prod(shape))
        pairs = (n + 1) // 2
        u1 = 1.0 - self._gen.random(pairs)  # (0, 1], keeps log finite
        u2 = self._gen.random(pairs)
        radius = np.sqrt(-2.0 * np.log(u1))
        angle = 2.0 * np.pi * u2
        z = np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])
        return z[:n].reshape(shape)
