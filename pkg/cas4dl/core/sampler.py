"""
Christoffel adaptive sampling (CAS) and the uniform Monte Carlo baseline.

CAS factorizes a dictionary on the grid, builds the n induced measures and
draws k = m // n points from each, plus one extra point from each of the first
s = m - k n measures. Every drawn point carries the weight w = 1/K(z) of the
factorization it was drawn from.
"""

import logging
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import DimensionMismatchError
from .grid import DiscreteDistribution, draw_indices
from .subspace import (
    DictionaryEvaluation,
    SubspaceFactorization,
    factorize_dictionary,
    induced_measures,
    weight_values,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SampleSet:
    """Drawn grid indices with their weights and the stage that drew each one."""
    indices: np.ndarray
    weights: np.ndarray
    stages: np.ndarray

    def __post_init__(self):
        indices = np.asarray(self.indices, dtype=np.intp).ravel()
        weights = np.asarray(self.weights, dtype=np.float64).ravel()
        stages = np.asarray(self.stages, dtype=np.int64).ravel()
        if not (indices.size == weights.size == stages.size):
            raise DimensionMismatchError("indices, weights and stages must have equal length")
        if np.any(indices < 0):
            raise ValueError("grid indices must be non-negative")
        if not np.all(np.isfinite(weights)) or np.any(weights <= 0.0):
            raise ValueError("sample weights must be finite and positive")
        for array in (indices, weights, stages):
            array.setflags(write=False)
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "stages", stages)

    @classmethod
    def from_stage(cls, indices: np.ndarray, weights: np.ndarray, stage: int) -> "SampleSet":
        indices = np.asarray(indices, dtype=np.intp)
        return cls(indices, weights, np.full(indices.size, stage, dtype=np.int64))

    @classmethod
    def empty(cls) -> "SampleSet":
        return cls(np.empty(0, np.intp), np.empty(0), np.empty(0, np.int64))

    @classmethod
    def concatenate(cls, parts: Iterable["SampleSet"]) -> "SampleSet":
        parts = list(parts)
        if not parts:
            return cls.empty()
        return cls(
            np.concatenate([p.indices for p in parts]),
            np.concatenate([p.weights for p in parts]),
            np.concatenate([p.stages for p in parts]),
        )

    def extend(self, other: "SampleSet") -> "SampleSet":
        return SampleSet.concatenate([self, other])

    def __len__(self) -> int:
        return self.indices.size


def allocate_draws(m: int, n: int) -> np.ndarray:
    """Per-measure draw counts: k = m // n each, plus one for the first m - k n measures."""
    if m < 0:
        raise ValueError(f"m must be non-negative, got {m}")
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    k, s = divmod(m, n)
    counts = np.full(n, k, dtype=np.int64)
    counts[:s] += 1
    return counts


def log_linear_budget(n: int, c: float = 2.0) -> int:
    """Sample budget ceil(c * n * ceil(log n)), never below n."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    return max(n, math.ceil(c * n * math.ceil(math.log(n))))


def draw_from_factorization(
    fact: SubspaceFactorization,
    m: int,
    rng: np.random.Generator,
    stage: int = 0,
) -> SampleSet:
    """Draw m CAS samples from an existing factorization."""
    if m < 1:
        raise ValueError(f"sample budget must be positive, got {m}")
    counts = allocate_draws(m, fact.n)
    measures = induced_measures(fact)
    # measures are visited in decreasing singular-value order
    indices = np.concatenate(
        [draw_indices(measure, int(count), rng) for measure, count in zip(measures, counts)]
    )
    weights = weight_values(fact)[indices]
    return SampleSet.from_stage(indices, weights, stage)


def cas_draw(
    dictionary: DictionaryEvaluation,
    m: int,
    eps_tol: float,
    rng: np.random.Generator,
    stage: int = 0,
) -> SampleSet:
    """Factorize ``dictionary`` and draw m Christoffel-adapted samples."""
    fact = factorize_dictionary(dictionary, eps_tol)
    samples = draw_from_factorization(fact, m, rng, stage)
    logger.debug(f"CAS stage {stage}: drew {m} samples from n={fact.n} induced measures")
    return samples


def uniform_draw(K: int, m: int, rng: np.random.Generator, stage: int = 0) -> SampleSet:
    """Monte Carlo baseline: m uniform grid indices with unit weights."""
    if m < 1:
        raise ValueError(f"sample budget must be positive, got {m}")
    indices = draw_indices(DiscreteDistribution.uniform(K), m, rng)
    return SampleSet.from_stage(indices, np.ones(m), stage)
