"""Seeded random number source built on a counter-based bit generator.

Philox is counter-based, so the same seed and call sequence produces the
same stream on every platform. All stochastic pieces of the model
(parameter init, Gumbel noise) draw from one Rng instance, which makes a
whole training run a pure function of the seed.
"""

import numpy as np

# Guards log(0) in the inverse-CDF Gumbel transform.
_EPS = 1e-12


class Rng:
    """Deterministic random stream keyed by an integer seed."""

    def __init__(self, seed, stream=0):
        self.seed = int(seed)
        self.stream = int(stream)
        self._gen = np.random.Generator(np.random.Philox(key=[self.seed, self.stream]))

    def spawn(self, stream):
        """Independent child stream; same (seed, stream) -> same stream."""
        return Rng(self.seed, stream)

    def uniform(self, low, high, shape):
        return low + (high - low) * self._gen.random(shape)

    def gumbel(self, shape):
        """I.i.d. standard Gumbel(0, 1) samples via the inverse CDF."""
        u = self._gen.random(shape)
        return -np.log(-np.log(u + _EPS) + _EPS)

    def integers(self, low, high):
        return int(self._gen.integers(low, high))
