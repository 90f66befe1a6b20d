"""
Accuracy and stability measures for a trained approximation.

The relative L2 error is estimated on a fixed-seed uniform test set (equal
weights). The discrete stability constant alpha is the smallest singular value
of the m x n matrix sqrt(w_i / m) phi_j(y_i) built from an orthonormal basis of
the learned subspace; 1/alpha bounds how much noise and off-sample error the
least-squares fit can amplify.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import linalg

from .errors import DimensionMismatchError
from .grid import StreamKey, derive_rng
from .sampler import SampleSet
from .subspace import SubspaceFactorization

DEFAULT_TEST_SIZE = 20_000
DEFAULT_TEST_SEED = 20220901

Predictor = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class TestSet:
    """Test points (M x d) with target values (M x J)."""
    __test__ = False  # not a pytest class

    points: np.ndarray
    values: np.ndarray
    seed: Optional[int] = None

    def __post_init__(self):
        points = np.atleast_2d(np.asarray(self.points, dtype=np.float64))
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        if points.shape[0] < 1:
            raise ValueError("test set must contain at least one point")
        if values.shape[0] != points.shape[0]:
            raise DimensionMismatchError(
                f"test set has {points.shape[0]} points but {values.shape[0]} value rows"
            )
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "values", values)

    @property
    def size(self) -> int:
        return self.points.shape[0]


def build_test_set(target: Predictor, d: int, size: int = DEFAULT_TEST_SIZE, seed: int = DEFAULT_TEST_SEED) -> TestSet:
    """Uniform test points from a stream disjoint from every grid stream."""
    if size < 1:
        raise ValueError(f"test set size must be positive, got {size}")
    rng = derive_rng(seed, StreamKey.TEST)
    points = rng.uniform(-1.0, 1.0, size=(size, d))
    return TestSet(points, target(points), seed)


def _residual_norms(predict: Predictor, test: TestSet):
    predicted = np.asarray(predict(test.points), dtype=np.float64).reshape(test.values.shape)
    return np.sum((test.values - predicted) ** 2, axis=0), np.sum(test.values ** 2, axis=0)


def relative_l2_error(predict: Predictor, test: TestSet) -> float:
    """sqrt(sum |f - Psi|^2) / sqrt(sum |f|^2) over the test points."""
    residual, reference = _residual_norms(predict, test)
    if reference.sum() == 0.0:
        raise ValueError("target is identically zero on the test set")
    return float(np.sqrt(residual.sum() / reference.sum()))


def componentwise_relative_l2_error(predict: Predictor, test: TestSet) -> np.ndarray:
    """Relative L2 error of each of the J output components; nan where a component is identically zero."""
    residual, reference = _residual_norms(predict, test)
    errors = np.full(reference.shape, np.nan)
    nonzero = reference > 0.0
    errors[nonzero] = np.sqrt(residual[nonzero] / reference[nonzero])
    return errors


def stability_constant(fact: SubspaceFactorization, samples: SampleSet) -> float:
    """Smallest singular value of (sqrt(w_i / m) phi_j(y_i)), i <= m, j <= n."""
    m = len(samples)
    if m < 1:
        raise ValueError("stability constant needs at least one sample")
    if m < fact.n:
        return 0.0
    matrix = np.sqrt(samples.weights / m)[:, None] * fact.basis_at(samples.indices)
    sigma = linalg.svdvals(matrix, check_finite=False)
    return float(sigma[fact.n - 1])


def inverse_stability(alpha: float) -> float:
    return float("inf") if alpha == 0.0 else 1.0 / alpha
