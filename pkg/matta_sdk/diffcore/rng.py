"""Deterministic, splittable random streams."""

from typing import Tuple

import numpy as np

from ..utils.errors import ContractError

# Stream ids derived from one run seed. Train and eval never share a stream.
STREAM_INIT = 0
STREAM_TASK = 1
STREAM_TRAIN = 2
STREAM_EVAL = 3


class Rng:
    """
    PCG64 generator keyed by (seed, stream path).

    The same seed and stream path give the same draws on every run and
    platform. ``split`` derives an independent child stream without touching
    this generator's state.
    """

    def __init__(self, seed: int, stream: Tuple[int, ...] = ()):
        if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool) or not 0 <= int(seed) < 2 ** 64:
            raise ContractError(f"Rng seed must be an integer in [0, 2^64), got {seed!r}")
        self.seed = int(seed)
        self.stream = tuple(int(s) for s in stream)
        sequence = np.random.SeedSequence(entropy=self.seed, spawn_key=self.stream)
        self.generator = np.random.Generator(np.random.PCG64(sequence))

    def split(self, stream_id: int) -> "Rng":
        return Rng(self.seed, self.stream + (int(stream_id),))

    def normal(self, rows: int, cols: int, std: float = 1.0) -> np.ndarray:
        return self.generator.normal(0.0, std, size=(rows, cols))

    def uniform(self, low: float, high: float, size) -> np.ndarray:
        return self.generator.uniform(low, high, size=size)

    def categorical(self, probabilities: np.ndarray) -> np.ndarray:
        """Draw one class index per row of a (n, C) probability matrix."""
        cumulative = np.cumsum(probabilities, axis=1)
        draws = self.generator.random(size=(probabilities.shape[0], 1))
        picks = (draws < cumulative).argmax(axis=1)
        # A row whose cumulative sum rounds below the draw falls back to the last class.
        picks[draws[:, 0] >= cumulative[:, -1]] = probabilities.shape[1] - 1
        return picks

    def choice(self, n: int, size: int, p: np.ndarray) -> np.ndarray:
        return self.generator.choice(n, size=size, p=p)

    def __repr__(self) -> str:
        return f"Rng(seed={self.seed}, stream={self.stream})"
