"""
End-to-end checks of the sampling guarantees, gradients, determinism and the
desk-scale CAS versus MC trends. Trend runs are marked slow.
"""
from pathlib import Path

import numpy as np
import pytest
from numpy.polynomial import legendre
from scipy import stats

from cas4dl.config import ExperimentConfig, Method, parse_config
from cas4dl.core.grid import StreamKey, build_grid, derive_rng
from cas4dl.core.metrics import stability_constant
from cas4dl.core.network import (
    Activation,
    Architecture,
    NetworkParams,
    TrainingData,
    gradient,
    weighted_loss,
)
from cas4dl.core.sampler import allocate_draws, draw_from_factorization, log_linear_budget
from cas4dl.core.subspace import (
    DictionaryEvaluation,
    christoffel_values,
    factorize_dictionary,
    induced_measures,
    solve_weighted_least_squares,
)
from cas4dl.driver import run_suite
from cas4dl.results import emit_suite
from cas4dl.tabulated import write_grid, write_values
from tests.conftest import finite_difference_gradient, random_params

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def relu_margin(params: NetworkParams, points: np.ndarray) -> float:
    """Smallest |pre-activation| over every hidden unit and point."""
    A, margin = points, np.inf
    for W, b in zip(params.weights[:-1], params.biases):
        Z = A @ W.T + b
        margin = min(margin, float(np.abs(Z).min()))
        A = np.maximum(Z, 0.0)
    return margin


class TestSubspaceGuarantees:
    def test_christoffel_trace_identity(self):
        rng = np.random.default_rng(2022)
        for _ in range(100):
            K = int(rng.integers(100, 5001))
            N = int(rng.integers(1, 51))
            d = int(rng.integers(1, 5))
            features = np.tanh(rng.uniform(-1, 1, size=(K, d)) @ rng.normal(size=(d, N)) + rng.normal(size=N))
            fact = factorize_dictionary(DictionaryEvaluation(features))
            assert abs(christoffel_values(fact).mean() - 1.0) <= 1e-12
            for mu in induced_measures(fact):
                assert abs(mu.probabilities.sum() - 1.0) <= 1e-12

    def test_planted_rank_is_recovered(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            K = int(rng.integers(200, 5001))
            N = int(rng.integers(2, 51))
            r = int(rng.integers(1, N + 1))
            independent = rng.normal(size=(K, r))
            duplicates = independent[:, rng.integers(0, r, size=N - r)]
            values = np.hstack([independent, duplicates])[:, rng.permutation(N)]
            fact = factorize_dictionary(DictionaryEvaluation(values), 1e-6)
            assert fact.n == r
            phi = fact.basis_values
            assert np.abs(phi.T @ phi / K - np.eye(r)).max() <= 1e-10

    def test_allocation_accounting(self):
        for n in range(1, 13):
            for m in range(1, 61):
                counts = allocate_draws(m, n)
                assert counts.sum() == m
                assert set(counts.tolist()) <= {m // n, m // n + 1}
                assert int(np.count_nonzero(counts == m // n + 1)) == m % n

    def test_least_squares_oracle_recovery(self):
        """Legendre degree < 10 on 10000 points, m = 2 n ceil(log n) CAS samples."""
        z = build_grid(1, 10_000, 31).points[:, 0]
        fact = factorize_dictionary(DictionaryEvaluation(legendre.legvander(z, 9)))
        assert fact.n == 10
        m = log_linear_budget(fact.n)
        assert m == 60

        rng = np.random.default_rng(5)
        stable = 0
        for repetition in range(100):
            c = rng.normal(size=(fact.n, 1))
            values = fact.basis_values @ c
            samples = draw_from_factorization(fact, m, derive_rng(31, StreamKey.SAMPLING, repetition))
            c_hat = solve_weighted_least_squares(fact, samples.indices, samples.weights, values[samples.indices])
            assert np.linalg.norm(c_hat - c) <= 1e-8 * np.linalg.norm(c)
            stable += stability_constant(fact, samples) >= 0.5
        assert stable >= 95


class TestGradientAcceptance:
    def test_random_smooth_networks(self):
        rng = np.random.default_rng(404)
        for case in range(50):
            activation = Activation.TANH if case % 2 == 0 else Activation.ELU
            arch = Architecture(
                int(rng.integers(1, 4)), int(rng.integers(0, 3)), int(rng.integers(1, 21)), activation=activation
            )
            params = random_params(arch, rng)
            data = TrainingData(
                rng.uniform(-1, 1, size=(6, arch.input_dim)), rng.normal(size=6), rng.uniform(0.5, 2.0, size=6)
            )
            for exact, approx in zip(gradient(params, data).arrays(), finite_difference_gradient(params, data)):
                np.testing.assert_allclose(exact, approx, rtol=1e-5, atol=1e-8)

    def test_relu_away_from_kinks(self):
        rng = np.random.default_rng(405)
        arch = Architecture(3, 2, 10, activation=Activation.RELU)
        checked = 0
        while checked < 10:
            params = random_params(arch, rng)
            data = TrainingData(rng.uniform(-1, 1, size=(8, 3)), rng.normal(size=8), np.ones(8))
            if relu_margin(params, data.points) < 1e-3:
                continue
            assert weighted_loss(params, data) > 0
            for exact, approx in zip(gradient(params, data).arrays(), finite_difference_gradient(params, data)):
                np.testing.assert_allclose(exact, approx, rtol=1e-5, atol=1e-8)
            checked += 1


class TestDeterminism:
    def test_stage_table_is_byte_identical(self, small_config, tmp_path):
        config = small_config(trials=3, noise_std=0.01)
        emit_suite(run_suite(config), tmp_path / "first")
        emit_suite(run_suite(config), tmp_path / "second")
        assert (tmp_path / "first" / "stages.csv").read_bytes() == (tmp_path / "second" / "stages.csv").read_bytes()


@pytest.fixture(scope="module")
def desk_suite():
    """f1, d = 2, tanh 3 x 30, K = 5000, samples 200..800, 1000 epochs per stage, 5 trials."""
    return run_suite(parse_config(CONFIGS / "example.ini"), threads=2)


def final_stage(suite, method, field):
    stage = len(suite.config.schedule)
    return np.array([getattr(r, field) for r in suite.records if r.method == method and r.stage == stage])


@pytest.mark.slow
class TestDeskScaleTrends:
    def test_cas_is_more_stable(self, desk_suite):
        assert np.median(final_stage(desk_suite, "cas", "alpha_inv")) < np.median(
            final_stage(desk_suite, "mc", "alpha_inv")
        )

    def test_cas_error_is_no_worse(self, desk_suite):
        assert stats.gmean(final_stage(desk_suite, "cas", "rel_error")) <= stats.gmean(
            final_stage(desk_suite, "mc", "rel_error")
        )


@pytest.mark.slow
class TestVectorValuedOracle:
    def test_every_component_beats_the_zero_predictor(self, tmp_path):
        def components(points):
            y1, y2 = points[:, 0], points[:, 1]
            return np.column_stack([np.sin(2 * y1), 1.0 + y1 * y2, np.exp(-(y1 ** 2 + y2 ** 2))])

        grid = build_grid(2, 2000, 17)
        test_points = derive_rng(17, StreamKey.TEST).uniform(-1, 1, size=(500, 2))
        config = ExperimentConfig(
            dimension=2,
            target="tabulated",
            output_dim=3,
            seed=17,
            trials=1,
            methods=(Method.CAS,),
            schedule=(100, 200, 300),
            epochs_per_stage=400,
            depth=2,
            width=20,
            learning_rate=5e-3,
            tabulated_grid=str(write_grid(grid, tmp_path / "grid.csv")),
            tabulated_values=str(write_values(components(grid.points), tmp_path / "values.csv")),
            tabulated_test_grid=str(write_grid(test_points, tmp_path / "test_grid.csv")),
            tabulated_test_values=str(write_values(components(test_points), tmp_path / "test_values.csv")),
        )
        (trial,) = run_suite(config).trials
        assert trial.completed
        assert trial.component_errors.shape == (3,)
        assert np.all(np.isfinite(trial.component_errors))
        assert np.all(trial.component_errors < 1.0)
