import numpy as np
import pytest

from cas4dl.config import ExperimentConfig, Method
from cas4dl.core.grid import Grid
from cas4dl.core.network import Architecture, NetworkParams, TrainingData, weighted_loss


@pytest.fixture
def rng():
    """Fixed generator so statistical checks are reproducible."""
    return np.random.default_rng(12345)


@pytest.fixture
def symmetric_grid():
    """1-d grid symmetric about 0 (so every odd moment vanishes)."""
    half = np.linspace(0.0, 1.0, 1001)[1:]
    return Grid(np.concatenate([-half[::-1], [0.0], half])[:, None])


@pytest.fixture
def small_config():
    """Factory for fast configurations; keyword arguments override the defaults."""

    def make(**overrides) -> ExperimentConfig:
        settings = dict(
            target="f1",
            dimension=2,
            grid_size=300,
            seed=7,
            trials=2,
            methods=(Method.CAS, Method.MC),
            schedule=(20, 40),
            epochs_per_stage=5,
            depth=1,
            width=6,
            learning_rate=1e-3,
            test_size=200,
            dictionary_points=11,
        )
        settings.update(overrides)
        return ExperimentConfig(**settings)

    return make


def random_params(arch: Architecture, rng: np.random.Generator, scale: float = 0.5) -> NetworkParams:
    """Parameters with larger entries than the default init, for gradient checks."""
    sizes = arch.layer_sizes
    weights = [rng.normal(0.0, scale, size=(sizes[l + 1], sizes[l])) for l in range(len(sizes) - 1)]
    biases = [rng.normal(0.0, scale, size=sizes[l + 1]) for l in range(len(sizes) - 2)]
    return NetworkParams(arch, weights, biases)


def finite_difference_gradient(params: NetworkParams, data: TrainingData, h: float = 1e-6):
    """Central differences of the weighted loss in every parameter coordinate."""
    arrays = params.arrays()
    grads = []
    for i, a in enumerate(arrays):
        g = np.zeros_like(a)
        for idx in np.ndindex(a.shape):
            plus = [x.copy() for x in arrays]
            minus = [x.copy() for x in arrays]
            plus[i][idx] += h
            minus[i][idx] -= h
            g[idx] = (
                weighted_loss(params.with_arrays(plus), data) - weighted_loss(params.with_arrays(minus), data)
            ) / (2 * h)
        grads.append(g)
    return grads
