"""Task-size laws (all normalized to mean 1) and per-thread random streams.

Every draw goes through the inverse CDF of one uniform from a PCG64 stream,
so a thread's k-th task size depends only on (seed, thread id, k).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

EXPONENTIAL = "exp"
BOUNDED_PARETO = "bpareto"
UNIFORM = "uniform"
KINDS = (EXPONENTIAL, BOUNDED_PARETO, UNIFORM)

# an exact zero draw is lifted to this, so inverse CDFs see (0, 1) only
_HALF_ULP = 2.0**-54


def bounded_pareto_mean(alpha: float, lower: float, upper: float) -> float:
    r = lower / upper
    if alpha == 1.0:
        return lower * math.log(upper / lower) / (1.0 - r)
    return (
        alpha / (alpha - 1.0) * lower * (1.0 - r ** (alpha - 1.0)) / (1.0 - r**alpha)
    )


def bounded_pareto_lower(alpha: float, ratio: float, mean: float = 1.0) -> float:
    """Lower bound L such that BoundedPareto(alpha, L, ratio * L) has the given mean."""
    # the mean is linear in L at a fixed upper/lower ratio
    return mean / bounded_pareto_mean(alpha, 1.0, ratio)


@dataclass(frozen=True)
class SizeDistribution:
    kind: str = EXPONENTIAL
    alpha: float = 1.5
    lower: float = 0.0
    upper: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown distribution {self.kind!r}")
        if self.kind == BOUNDED_PARETO:
            if not (self.alpha > 0 and 0 < self.lower < self.upper):
                raise ValueError("bounded Pareto needs alpha > 0 and 0 < L < H")
        if self.kind == UNIFORM and not 0 <= self.lower < self.upper:
            raise ValueError("uniform needs 0 <= a < b")
        if abs(self.mean() - 1.0) > 1e-9:
            raise ValueError(f"{self.kind} parameters give mean {self.mean()}, not 1")

    @classmethod
    def exponential(cls) -> "SizeDistribution":
        return cls(EXPONENTIAL)

    @classmethod
    def uniform(cls, a: float = 0.5, b: float = 1.5) -> "SizeDistribution":
        return cls(UNIFORM, lower=a, upper=b)

    @classmethod
    def bounded_pareto(cls, alpha: float = 1.5, ratio: float = 1000.0) -> "SizeDistribution":
        lo = bounded_pareto_lower(alpha, ratio)
        return cls(BOUNDED_PARETO, alpha=alpha, lower=lo, upper=lo * ratio)

    @classmethod
    def named(cls, name: str) -> "SizeDistribution":
        return {
            EXPONENTIAL: cls.exponential,
            BOUNDED_PARETO: cls.bounded_pareto,
            UNIFORM: cls.uniform,
        }[name]()

    def mean(self) -> float:
        if self.kind == EXPONENTIAL:
            return 1.0
        if self.kind == UNIFORM:
            return 0.5 * (self.lower + self.upper)
        return bounded_pareto_mean(self.alpha, self.lower, self.upper)

    def from_uniform(self, u: np.ndarray) -> np.ndarray:
        """Inverse CDF applied to uniforms in [0, 1)."""
        u = np.maximum(np.asarray(u, dtype=float), _HALF_ULP)
        if self.kind == EXPONENTIAL:
            return -np.log1p(-u)
        if self.kind == UNIFORM:
            return self.lower + (self.upper - self.lower) * u
        a, lo, hi = self.alpha, self.lower, self.upper
        tail = 1.0 - (lo / hi) ** a
        x = lo * (1.0 - u * tail) ** (-1.0 / a)
        return np.clip(x, lo, hi)


def draw_size(dist: SizeDistribution, rng: np.random.Generator, n=None):
    """One task size (or ``n`` of them) from ``rng``."""
    if n is None:
        return float(dist.from_uniform(rng.random()))
    return dist.from_uniform(rng.random(n))


def thread_streams(seed: int, num_threads: int) -> list[tuple[np.random.Generator, np.random.Generator]]:
    """(size stream, dispatch stream) per thread.

    ``SeedSequence(seed)`` is spawned once per thread in thread-id order; each
    child is spawned again into its size and dispatch streams, all PCG64.
    """
    streams = []
    for child in np.random.SeedSequence(seed).spawn(num_threads):
        size_ss, disp_ss = child.spawn(2)
        streams.append((np.random.Generator(np.random.PCG64(size_ss)),
                        np.random.Generator(np.random.PCG64(disp_ss))))
    return streams

