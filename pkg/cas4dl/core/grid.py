"""
Finite Monte Carlo grid and seeded discrete sampling.

The continuous domain [-1, 1]^d is replaced by K i.i.d. uniform points carrying
the discrete uniform measure. All randomness in the package flows through
``derive_rng``: a base seed plus an integer key path selects an independent
PCG64 substream, so every trial and stage is reproducible on its own.
"""

import logging
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Optional

import numpy as np

from .errors import InvalidDistributionError

logger = logging.getLogger(__name__)

RENORMALIZE_TOLERANCE = 1e-8

# K per dimension; larger d falls through to the last entry
DEFAULT_GRID_SIZES = ((2, 10_000), (4, 20_000), (8, 50_000), (16, 100_000))


class StreamKey(IntEnum):
    """First component of every substream key."""
    GRID = 0
    INIT = 1
    TEST = 2
    SAMPLING = 3
    NOISE = 4


def derive_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``seed`` and the substream path ``key``."""
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(sequence))


def default_grid_size(d: int) -> int:
    for max_dim, size in DEFAULT_GRID_SIZES:
        if d <= max_dim:
            return size
    return DEFAULT_GRID_SIZES[-1][1]


@dataclass(frozen=True)
class Grid:
    """Immutable point cloud Z = {z_1, ..., z_K} in [-1, 1]^d."""
    points: np.ndarray
    seed: Optional[int] = None

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        if points.ndim == 1:
            points = points[:, None]
        if points.ndim != 2 or points.shape[0] < 1 or points.shape[1] < 1:
            raise ValueError(f"grid points must be a non-empty K x d array, got shape {points.shape}")
        if np.any(np.abs(points) > 1.0):
            raise ValueError("grid points must lie in [-1, 1]^d")
        points.setflags(write=False)
        object.__setattr__(self, "points", points)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dimension(self) -> int:
        return self.points.shape[1]


def build_grid(d: int, K: int, seed: int) -> Grid:
    """K uniform points in [-1, 1]^d from the grid substream of ``seed``."""
    if d < 1:
        raise ValueError(f"grid dimension must be positive, got {d}")
    if K < 1:
        raise ValueError(f"grid size must be positive, got {K}")
    rng = derive_rng(seed, StreamKey.GRID)
    points = rng.uniform(-1.0, 1.0, size=(K, d))
    logger.debug(f"Built grid d={d} K={K} seed={seed}")
    return Grid(points=points, seed=seed)


@dataclass(frozen=True)
class DiscreteDistribution:
    """Probability vector over grid indices, sampled by inverse CDF."""
    probabilities: np.ndarray
    cumulative: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        p = np.array(self.probabilities, dtype=float).ravel()
        if p.size == 0:
            raise InvalidDistributionError("distribution must have at least one entry")
        if not np.all(np.isfinite(p)) or np.any(p < 0.0):
            raise InvalidDistributionError("distribution entries must be finite and non-negative")
        total = p.sum()
        if total <= 0.0:
            raise InvalidDistributionError("distribution has zero total mass")
        if abs(total - 1.0) > RENORMALIZE_TOLERANCE:
            raise InvalidDistributionError(
                f"distribution sums to {total!r}, outside the renormalization tolerance"
            )
        p = p / total
        cumulative = np.cumsum(p)
        cumulative[np.flatnonzero(p)[-1]:] = 1.0
        p.setflags(write=False)
        cumulative.setflags(write=False)
        object.__setattr__(self, "probabilities", p)
        object.__setattr__(self, "cumulative", cumulative)

    @classmethod
    def uniform(cls, K: int) -> "DiscreteDistribution":
        return cls(np.full(K, 1.0 / K))

    @property
    def size(self) -> int:
        return self.probabilities.size


def draw_indices(dist: DiscreteDistribution, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` i.i.d. 0-based indices distributed according to ``dist``."""
    if count < 0:
        raise ValueError(f"count must be non-negative, got {count}")
    u = rng.random(count)
    # side="right" never lands on a zero-probability index
    indices = np.searchsorted(dist.cumulative, u, side="right")
    return np.minimum(indices, dist.size - 1).astype(np.intp)
