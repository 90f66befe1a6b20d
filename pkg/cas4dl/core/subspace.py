"""
Orthonormalization of a (possibly redundant) dictionary on a finite grid.

Given dictionary values psi_j(z_l) on a grid of K points, the scaled matrix
B = psi / sqrt(K) is factorized by a thin SVD and truncated at the numerical
dimension n. The orthonormal basis of the spanned subspace, taken in L2 of the
discrete uniform measure, is phi_j(z_l) = sqrt(K) * u_lj. From it follow the
reciprocal Christoffel function, the weight function and the n induced
sampling measures u_lj^2.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy import linalg

from .errors import DimensionMismatchError, TrivialSubspaceError
from .grid import DiscreteDistribution, Grid

logger = logging.getLogger(__name__)

DEFAULT_EPS_TOL = 1e-6

# weight assigned where the Christoffel function vanishes; such points carry
# zero probability under every induced measure and are never drawn
WEIGHT_SENTINEL = 0.0


@dataclass(frozen=True)
class DictionaryEvaluation:
    """Values ``values[l, j] = psi_j(z_l)`` of N dictionary functions on K grid points."""
    values: np.ndarray
    grid: Optional[Grid] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise DimensionMismatchError(f"dictionary values must be K x N, got shape {values.shape}")
        if values.shape[1] > values.shape[0]:
            raise DimensionMismatchError(
                f"dictionary size N={values.shape[1]} exceeds grid size K={values.shape[0]}"
            )
        if self.grid is not None and self.grid.size != values.shape[0]:
            raise DimensionMismatchError(
                f"dictionary has {values.shape[0]} rows but the grid has {self.grid.size} points"
            )
        object.__setattr__(self, "values", values)

    @property
    def grid_size(self) -> int:
        return self.values.shape[0]

    @property
    def size(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class SubspaceFactorization:
    """Thresholded thin SVD of the scaled dictionary matrix."""
    n: int
    singular_values: np.ndarray
    left_vectors: np.ndarray
    right_vectors: np.ndarray
    eps_tol: float

    @property
    def grid_size(self) -> int:
        return self.left_vectors.shape[0]

    @property
    def basis_values(self) -> np.ndarray:
        """Orthonormal basis phi_j(z_l) = sqrt(K) u_lj, shape K x n."""
        return np.sqrt(self.grid_size) * self.left_vectors

    def basis_at(self, indices: np.ndarray) -> np.ndarray:
        return np.sqrt(self.grid_size) * self.left_vectors[np.asarray(indices, dtype=np.intp)]


def assemble_matrix(dictionary: DictionaryEvaluation) -> np.ndarray:
    """Scaled matrix B with entries psi_j(z_l) / sqrt(K)."""
    values = dictionary.values
    if not np.all(np.isfinite(values)):
        raise ValueError("dictionary evaluation contains non-finite values")
    return values / np.sqrt(dictionary.grid_size)


def numerical_dimension(singular_values: np.ndarray, eps_tol: float) -> int:
    """Largest i with sigma_i / sigma_1 > eps_tol."""
    return int(np.count_nonzero(singular_values / singular_values[0] > eps_tol))


def factorize(B: np.ndarray, eps_tol: float = DEFAULT_EPS_TOL) -> SubspaceFactorization:
    """Thin SVD of ``B`` truncated at its numerical dimension."""
    if not 0.0 < eps_tol < 1.0:
        raise ValueError(f"eps_tol must lie in (0, 1), got {eps_tol}")
    B = np.asarray(B, dtype=np.float64)
    if B.ndim != 2:
        raise DimensionMismatchError(f"B must be a matrix, got shape {B.shape}")
    if not np.all(np.isfinite(B)):
        raise ValueError("B contains non-finite entries")

    U, sigma, Vt = linalg.svd(B, full_matrices=False, check_finite=False)
    if sigma.size == 0 or sigma[0] == 0.0:
        raise TrivialSubspaceError("dictionary spans the zero subspace on the grid")

    n = numerical_dimension(sigma, eps_tol)
    U = U[:, :n]
    V = Vt[:n].T

    # pin the sign of each singular pair so repeated runs agree
    pivots = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[pivots, np.arange(n)])
    signs[signs == 0] = 1.0
    U = U * signs
    V = V * signs

    logger.debug(f"Factorized {B.shape[0]}x{B.shape[1]} dictionary: n={n}, sigma_1={sigma[0]:.3e}")
    return SubspaceFactorization(
        n=n,
        singular_values=sigma,
        left_vectors=U,
        right_vectors=V,
        eps_tol=eps_tol,
    )


def factorize_dictionary(dictionary: DictionaryEvaluation, eps_tol: float = DEFAULT_EPS_TOL) -> SubspaceFactorization:
    return factorize(assemble_matrix(dictionary), eps_tol)


def christoffel_values(fact: SubspaceFactorization) -> np.ndarray:
    """Normalized reciprocal Christoffel function (K/n) sum_j u_lj^2 on the grid."""
    return (fact.grid_size / fact.n) * np.sum(fact.left_vectors ** 2, axis=1)


def weight_values(fact: SubspaceFactorization) -> np.ndarray:
    """Weight function w = 1 / K(z_l), with ``WEIGHT_SENTINEL`` where K vanishes."""
    k = christoffel_values(fact)
    weights = np.full_like(k, WEIGHT_SENTINEL)
    positive = k > 0.0
    weights[positive] = 1.0 / k[positive]
    return weights


def induced_measures(fact: SubspaceFactorization) -> List[DiscreteDistribution]:
    """The n discrete measures {u_lj^2}_l, one per basis function."""
    return [DiscreteDistribution(fact.left_vectors[:, j] ** 2) for j in range(fact.n)]


def solve_weighted_least_squares(
    fact: SubspaceFactorization,
    indices: np.ndarray,
    weights: np.ndarray,
    values: np.ndarray,
) -> np.ndarray:
    """
    Coefficients c (n x J) of the weighted least-squares fit
    min sum_i w_i |sum_j c_j phi_j(y_i) - f(y_i)|^2 over the sampled grid points.
    """
    indices = np.asarray(indices, dtype=np.intp)
    weights = np.asarray(weights, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    if not (indices.size == weights.size == values.shape[0]):
        raise DimensionMismatchError("indices, weights and values must have the same length")

    scale = np.sqrt(weights / indices.size)[:, None]
    A = scale * fact.basis_at(indices)
    coefficients, *_ = linalg.lstsq(A, scale * values, check_finite=False)
    return coefficients
