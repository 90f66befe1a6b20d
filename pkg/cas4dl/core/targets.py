"""
Benchmark target functions on the hypercube [-1, 1]^d.

Four smooth test functions commonly used to compare sampling strategies for
multivariate approximation. Every function accepts a single point of shape
``(d,)`` or a batch of shape ``(M, d)`` and returns values of shape ``(J,)`` or
``(M, J)`` with ``J = 1``.
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DimensionMismatchError


class TargetKind(Enum):
    """Available target functions."""
    F1 = "f1"
    F2 = "f2"
    F3 = "f3"
    F4 = "f4"
    TABULATED = "tabulated"


def _split(d: int) -> int:
    return math.ceil(d / 2)


def _f1(y: np.ndarray) -> np.ndarray:
    d = y.shape[1]
    return np.exp(-y.sum(axis=1) / d)


def _f2(y: np.ndarray) -> np.ndarray:
    d = y.shape[1]
    h = _split(d)
    k = np.arange(1, d + 1, dtype=float)
    # empty products are 1
    numerator = np.prod(np.cos(16.0 * y[:, h:] / 2.0 ** k[h:]), axis=1)
    denominator = np.prod(1.0 - y[:, :h] / 4.0 ** k[:h], axis=1)
    return numerator / denominator


def f3_coefficients(d: int) -> np.ndarray:
    """Anisotropy coefficients q_i = 10^(-3(i-1)/(d-1)); q_1 = 1 when d = 1."""
    if d == 1:
        return np.ones(1)
    i = np.arange(d, dtype=float)
    return 10.0 ** (-3.0 * i / (d - 1))


def _f3(y: np.ndarray) -> np.ndarray:
    d = y.shape[1]
    return 1.0 / (1.0 + (y @ f3_coefficients(d)) / (2.0 * d))


def _f4(y: np.ndarray) -> np.ndarray:
    d = y.shape[1]
    h = _split(d)
    k = np.arange(1, d + 1, dtype=float)
    numerator = np.prod(1.0 + 4.0 ** k[:h] * y[:, :h] ** 2, axis=1)
    denominator = np.prod(100.0 + 5.0 * y[:, h:], axis=1)
    return (numerator / denominator) ** (1.0 / d)


_FORMULAS = {
    TargetKind.F1: _f1,
    TargetKind.F2: _f2,
    TargetKind.F3: _f3,
    TargetKind.F4: _f4,
}


@dataclass(frozen=True)
class TargetFunction:
    """An analytic target function f: [-1, 1]^d -> R^J."""
    kind: TargetKind
    dimension: int
    output_dim: int = 1

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError(f"dimension must be positive, got {self.dimension}")
        if self.output_dim < 1:
            raise ValueError(f"output_dim must be positive, got {self.output_dim}")
        if self.kind is not TargetKind.TABULATED and self.output_dim != 1:
            raise ValueError(f"{self.kind.value} is scalar-valued; output_dim must be 1")

    def __call__(self, y: np.ndarray) -> np.ndarray:
        return evaluate(self, y)

    def values_at(self, points: np.ndarray, indices: np.ndarray) -> np.ndarray:
        """Target values at grid rows ``indices`` of ``points``."""
        return evaluate(self, points[np.asarray(indices, dtype=np.intp)])


def evaluate(target: TargetFunction, y: np.ndarray) -> np.ndarray:
    """Evaluate ``target`` at a point ``(d,)`` or a batch ``(M, d)``."""
    if target.kind is TargetKind.TABULATED:
        raise ValueError("tabulated targets are evaluated through their oracle table")

    y = np.asarray(y, dtype=float)
    single = y.ndim == 1
    batch = y.reshape(1, -1) if single else y
    if batch.ndim != 2 or batch.shape[1] != target.dimension:
        raise DimensionMismatchError(
            f"{target.kind.value} expects points of dimension {target.dimension}, got shape {y.shape}"
        )

    values = _FORMULAS[target.kind](batch)[:, None]
    return values[0] if single else values


def make_target(name: str, dimension: int) -> TargetFunction:
    """Build an analytic target from its config name (``f1`` .. ``f4``)."""
    try:
        kind = TargetKind(name.lower())
    except ValueError:
        raise ValueError(f"unknown target '{name}'") from None
    if kind is TargetKind.TABULATED:
        raise ValueError("tabulated targets are loaded with tabulated.load_tabulated")
    return TargetFunction(kind=kind, dimension=dimension)
