"""Seeded randomness primitives: Laplace noise and exponential-mechanism
selection over a splittable deterministic stream."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np


class RandomStream:
    """A deterministic random stream addressed by (seed, path).

    Two streams with the same seed and path replay the same draws, and
    child(i) derives the stream addressed by path + (i,). Derivation uses
    numpy's SeedSequence(entropy=seed, spawn_key=path) feeding a PCG64
    generator, so a view built from a seed can be reproduced bit for bit
    regardless of traversal order or thread count.
    """

    __slots__ = ("seed", "path", "_gen")

    def __init__(self, seed: int, path: tuple[int, ...] = ()):
        if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
            raise ValueError("seed must be a non-negative integer")
        self.seed = seed
        self.path = tuple(int(p) for p in path)
        self._gen = None

    @property
    def generator(self) -> np.random.Generator:
        if self._gen is None:
            ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.path)
            self._gen = np.random.Generator(np.random.PCG64(ss))
        return self._gen

    def random(self) -> float:
        """One uniform draw from [0, 1)."""
        return float(self.generator.random())

    def random_array(self, n: int) -> np.ndarray:
        return self.generator.random(n)

    def child(self, index: int) -> "RandomStream":
        return RandomStream(self.seed, self.path + (int(index),))

    def __repr__(self) -> str:
        return f"RandomStream(seed={self.seed}, path={self.path})"


class NoiseFreeStream:
    """Stream stand-in whose uniforms are all 0.5, making every Laplace
    draw exactly zero. A test hook, not a privacy mechanism."""

    __slots__ = ()

    def random(self) -> float:
        return 0.5

    def random_array(self, n: int) -> np.ndarray:
        return np.full(n, 0.5)

    def child(self, index: int) -> "NoiseFreeStream":
        return self


def sample_laplace(scale: float, rng) -> float:
    """One Laplace(0, scale) draw via the inverse CDF.

    Maps a uniform u in [-1/2, 1/2) to -scale * sign(u) * ln(1 - 2|u|).
    """
    if not scale > 0:
        raise ValueError("scale must be positive")
    u = rng.random() - 0.5
    if u <= -0.5:
        # random() may return exactly 0; step inside the open interval
        # rather than emit an infinite sample.
        u = math.nextafter(-0.5, 0.0)
    return -scale * math.copysign(1.0, u) * math.log1p(-2.0 * abs(u))


def sample_laplace_array(scale: float, rng, n: int) -> np.ndarray:
    """n independent Laplace(0, scale) draws from one stream."""
    if not scale > 0:
        raise ValueError("scale must be positive")
    u = rng.random_array(n) - 0.5
    u = np.where(u <= -0.5, np.nextafter(-0.5, 0.0), u)
    return -scale * np.sign(u) * np.log1p(-2.0 * np.abs(u))


def exponential_weights(qualities: Sequence[float], epsilon: float, sensitivity: float) -> np.ndarray:
    """Unnormalized exponential-mechanism weights exp(eps * q / (2 * sens)).

    The maximum quality is subtracted before exponentiation so the weights
    stay finite for any quality magnitudes.
    """
    q = np.asarray(qualities, dtype=np.float64)
    if q.size == 0:
        raise ValueError("need at least one candidate")
    if not np.all(np.isfinite(q)):
        raise ValueError("qualities must be finite")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if not sensitivity > 0:
        raise ValueError("sensitivity must be positive")
    return np.exp(epsilon * (q - q.max()) / (2.0 * sensitivity))


def exponential_choice(qualities: Sequence[float], epsilon: float, sensitivity: float, rng) -> int:
    """Pick an index with probability proportional to exp(eps*q/(2*sens)).

    Consumes exactly one uniform draw from rng.
    """
    w = exponential_weights(qualities, epsilon, sensitivity)
    cum = np.cumsum(w)
    r = rng.random() * cum[-1]
    i = int(np.searchsorted(cum, r, side="right"))
    return min(i, len(cum) - 1)
