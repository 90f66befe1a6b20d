"""
Staged CAS4DL and Monte Carlo experiments over multiple trials.

Each (method, trial) pair starts from the same initialized network, then for
every stage draws the new samples (CAS from the current network's dictionary,
MC uniformly from the grid), appends them to the cumulative set with their
draw-time weights, warm-starts training and records test error, numerical
dimension and 1/alpha.

Random substreams (see ``grid.derive_rng``):
    grid             (seed, GRID)
    network init     (seed, INIT, trial)               shared by both methods
    sampling         (seed, SAMPLING, trial, method, stage)
    training noise   (seed, NOISE, trial, method, stage)
    test set         (test_seed, TEST)
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Protocol

import numpy as np
import pandas as pd

from cas4dl.config import ExperimentConfig, Method
from cas4dl.core.errors import ConfigError, TrainingDivergenceError, TrivialSubspaceError
from cas4dl.core.grid import Grid, StreamKey, build_grid, derive_rng
from cas4dl.core.metrics import (
    TestSet,
    build_test_set,
    componentwise_relative_l2_error,
    inverse_stability,
    relative_l2_error,
    stability_constant,
)
from cas4dl.core.network import (
    AdamState,
    NetworkParams,
    TrainingData,
    dictionary_ranking,
    fit_readout,
    forward,
    init_params,
    penultimate_features,
    train,
    weighted_loss,
)
from cas4dl.core.sampler import SampleSet, draw_from_factorization, uniform_draw
from cas4dl.core.subspace import (
    DictionaryEvaluation,
    SubspaceFactorization,
    christoffel_values,
    factorize_dictionary,
)
from cas4dl.core.targets import make_target
from cas4dl.observability import get_metrics, get_tracer
from cas4dl.tabulated import load_tabulated
from cas4dl.tracking import StageTracker

logger = logging.getLogger(__name__)

METHOD_CODES = {Method.CAS: 0, Method.MC: 1}
DICTIONARY_TRACES = 6
AGGREGATED_FIELDS = ("rel_error", "n", "alpha_inv")


class Target(Protocol):
    def __call__(self, y: np.ndarray) -> np.ndarray: ...

    def values_at(self, points: np.ndarray, indices: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class StageRecord:
    method: str
    trial: int
    stage: int
    m: int
    n: int
    rel_error: float
    alpha_inv: float
    final_loss: float
    wall_time_s: float


@dataclass(frozen=True)
class TrialFailure:
    method: str
    trial: int
    stage: int
    epoch: Optional[int]
    message: str


@dataclass(frozen=True)
class DictionaryTraces:
    """Leading learned dictionary elements along y = (t, 0, ..., 0)."""
    line: np.ndarray
    values: np.ndarray
    elements: np.ndarray
    scores: np.ndarray


@dataclass
class TrialResult:
    method: Method
    trial: int
    records: List[StageRecord] = field(default_factory=list)
    samples: SampleSet = field(default_factory=SampleSet.empty)
    params: Optional[NetworkParams] = None
    state: Optional[AdamState] = None
    rng_state: Optional[Dict[str, Any]] = None
    christoffel: Optional[np.ndarray] = None
    dictionary: Optional[DictionaryTraces] = None
    component_errors: Optional[np.ndarray] = None
    timings: List[float] = field(default_factory=list)
    failure: Optional[TrialFailure] = None

    @property
    def completed(self) -> bool:
        return self.failure is None


@dataclass
class ExperimentContext:
    """Grid, target and test set shared read-only by every trial."""
    grid: Grid
    target: Target
    test: TestSet

    @classmethod
    def build(cls, config: ExperimentConfig) -> "ExperimentContext":
        if config.is_tabulated:
            oracle = load_tabulated(
                config.tabulated_grid,
                config.tabulated_values,
                config.tabulated_test_grid,
                config.tabulated_test_values,
                dimension=config.dimension,
            )
            if oracle.output_dim != config.output_dim:
                raise ConfigError(
                    f"tabulated values have {oracle.output_dim} components, output_dim is {config.output_dim}",
                    section="network",
                    key="output_dim",
                )
            if oracle.grid.size < config.width:
                raise ConfigError(
                    f"tabulated grid has K={oracle.grid.size} points, fewer than the width N={config.width}",
                    section="tabulated",
                    key="grid_file",
                )
            return cls(oracle.grid, oracle, oracle.test)

        grid = build_grid(config.dimension, config.grid_size, config.seed)
        target = make_target(config.target, config.dimension)
        test = build_test_set(target, config.dimension, config.test_size, config.test_seed)
        return cls(grid, target, test)


@dataclass
class SuiteResult:
    config: ExperimentConfig
    context: ExperimentContext
    trials: List[TrialResult]
    records: List[StageRecord]
    aggregates: pd.DataFrame

    @property
    def failures(self) -> List[TrialFailure]:
        return [t.failure for t in self.trials if t.failure is not None]


def initial_network(config: ExperimentConfig, trial: int) -> NetworkParams:
    """Initialization shared by CAS and MC for the same trial."""
    return init_params(config.architecture, derive_rng(config.seed, StreamKey.INIT, trial), dtype=config.dtype)


def _factorize(params: NetworkParams, grid: Grid, eps_tol: float) -> Optional[SubspaceFactorization]:
    features = penultimate_features(params, grid.points)
    try:
        return factorize_dictionary(DictionaryEvaluation(features, grid), eps_tol)
    except TrivialSubspaceError:
        return None


def _dictionary_traces(params: NetworkParams, grid: Grid, points: int) -> DictionaryTraces:
    t = np.linspace(-1.0, 1.0, points)
    line = np.zeros((points, grid.dimension))
    line[:, 0] = t
    order, scores = dictionary_ranking(params, grid.points)
    leading = order[:DICTIONARY_TRACES]
    values = penultimate_features(params, line).astype(np.float64)[:, leading]
    return DictionaryTraces(t, values, leading, scores[leading])


def _run_trial(
    config: ExperimentConfig,
    trial: int,
    method: Method,
    context: Optional[ExperimentContext],
) -> TrialResult:
    context = context if context is not None else ExperimentContext.build(config)
    grid, code = context.grid, METHOD_CODES[method]
    business_metrics = get_metrics()
    tracer = get_tracer()

    params = initial_network(config, trial)
    state = AdamState.fresh(params, config.beta1, config.beta2, config.adam_epsilon)
    schedule = config.lr_schedule
    result = TrialResult(method, trial)

    fact = _factorize(params, grid, config.eps_tol) if method is Method.CAS else None
    samples = SampleSet.empty()
    targets = np.empty((0, config.output_dim))
    previous_m = 0
    rng = None

    for stage, m in enumerate(config.schedule, start=1):
        try:
            with StageTracker(method.value, trial, stage, m, business_metrics, tracer) as tracker:
                rng = derive_rng(config.seed, StreamKey.SAMPLING, trial, code, stage)
                new = m - previous_m
                if method is Method.CAS and fact is not None:
                    drawn = draw_from_factorization(fact, new, rng, stage)
                else:
                    if method is Method.CAS:
                        logger.warning(f"Trivial dictionary before stage {stage} of cas trial {trial}; drawing uniformly")
                    drawn = uniform_draw(grid.size, new, rng, stage)
                business_metrics.record_samples(method.value, new)

                values = np.asarray(context.target.values_at(grid.points, drawn.indices), dtype=np.float64)
                if config.noise_std > 0:
                    noise_rng = derive_rng(config.seed, StreamKey.NOISE, trial, code, stage)
                    values = values + noise_rng.normal(0.0, config.noise_std, size=values.shape)
                samples = samples.extend(drawn)
                targets = np.vstack([targets, values])
                data = TrainingData(grid.points[samples.indices], targets, samples.weights)

                try:
                    trained = train(params, state, data, config.epochs_per_stage, schedule)
                except TrainingDivergenceError as e:
                    raise TrainingDivergenceError(str(e.args[0]), epoch=e.epoch, stage=stage) from e
                params, state = trained.params, trained.state
                final_loss = trained.final_loss
                if config.solver == "least_squares":
                    params = fit_readout(params, data)
                    final_loss = weighted_loss(params, data)

                rel_error = relative_l2_error(lambda y: forward(params, y), context.test)
                fact = _factorize(params, grid, config.eps_tol)
                if fact is None:
                    n, alpha_inv = 0, float("inf")
                else:
                    n = fact.n
                    alpha_inv = inverse_stability(stability_constant(fact, samples))
                tracker.complete(n, rel_error, alpha_inv)

            result.timings.append(tracker.duration)
            result.records.append(
                StageRecord(
                    method=method.value,
                    trial=trial,
                    stage=stage,
                    m=m,
                    n=n,
                    rel_error=rel_error,
                    alpha_inv=alpha_inv,
                    final_loss=final_loss,
                    wall_time_s=tracker.duration if config.record_wall_time else 0.0,
                )
            )
            previous_m = m
        except TrainingDivergenceError as e:
            result.failure = TrialFailure(method.value, trial, stage, e.epoch, str(e.args[0]))
            logger.error(f"Trial {trial} ({method.value}) aborted: {e}")
            break

    result.samples = samples
    result.params, result.state = params, state
    result.rng_state = rng.bit_generator.state if rng is not None else None
    if result.completed:
        result.christoffel = christoffel_values(fact) if fact is not None else None
        result.dictionary = _dictionary_traces(params, grid, config.dictionary_points)
        if config.output_dim > 1:
            result.component_errors = componentwise_relative_l2_error(lambda y: forward(params, y), context.test)
    return result


def run_cas4dl(config: ExperimentConfig, trial: int, context: Optional[ExperimentContext] = None) -> TrialResult:
    """One CAS4DL trial over the full sample schedule."""
    if Method.CAS not in config.methods:
        raise ValueError("cas is not among the configured methods")
    return _run_trial(config, trial, Method.CAS, context)


def run_mc(config: ExperimentConfig, trial: int, context: Optional[ExperimentContext] = None) -> TrialResult:
    """One Monte Carlo trial: uniform draws, unit weights, same staging."""
    if Method.MC not in config.methods:
        raise ValueError("mc is not among the configured methods")
    return _run_trial(config, trial, Method.MC, context)


RUNNERS = {Method.CAS: run_cas4dl, Method.MC: run_mc}


def records_frame(records: List[StageRecord]) -> pd.DataFrame:
    columns = list(StageRecord.__dataclass_fields__)
    return pd.DataFrame([r.__dict__ for r in records], columns=columns)


def aggregate_records(trials: List[TrialResult]) -> pd.DataFrame:
    """Per-(method, stage) mean, median and population std over completed trials."""
    completed = [r for t in trials if t.completed for r in t.records]
    frame = records_frame(completed)
    columns = ["method", "stage", "m", "trials"] + [
        f"{name}_{stat}" for name in AGGREGATED_FIELDS for stat in ("mean", "median", "std")
    ]
    if frame.empty:
        return pd.DataFrame(columns=columns)

    grouped = frame.groupby(["method", "stage", "m"], sort=True)
    aggregates = grouped.agg(
        trials=("trial", "count"),
        **{
            f"{name}_{stat}": (name, (lambda s: s.std(ddof=0)) if stat == "std" else stat)
            for name in AGGREGATED_FIELDS
            for stat in ("mean", "median", "std")
        },
    ).reset_index()
    return aggregates[columns]


def run_suite(
    config: ExperimentConfig,
    threads: int = 1,
    context: Optional[ExperimentContext] = None,
) -> SuiteResult:
    """Run every (method, trial) pair and aggregate the completed ones."""
    context = context if context is not None else ExperimentContext.build(config)
    jobs = [(method, trial) for method in config.methods for trial in range(config.trials)]
    logger.info(
        f"Running {len(jobs)} trials: methods={[m.value for m in config.methods]} "
        f"trials={config.trials} stages={len(config.schedule)} threads={threads}"
    )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(RUNNERS[method], config, trial, context) for method, trial in jobs]
            trials = [f.result() for f in futures]
    else:
        trials = [RUNNERS[method](config, trial, context) for method, trial in jobs]

    trials.sort(key=lambda t: (t.method.value, t.trial))
    records = sorted(
        (r for t in trials for r in t.records),
        key=lambda r: (r.method, r.trial, r.stage),
    )
    failed = sum(1 for t in trials if not t.completed)
    if failed:
        logger.warning(f"{failed} of {len(trials)} trials diverged; aggregating the rest")
    return SuiteResult(config, context, trials, records, aggregate_records(trials))


def trial_seeds(config: ExperimentConfig) -> Dict[str, Any]:
    """Seed layout recorded in the run manifest."""
    return {
        "base_seed": config.seed,
        "test_seed": config.test_seed,
        "method_codes": {m.value: code for m, code in METHOD_CODES.items()},
        "grid_stream": [int(StreamKey.GRID)],
        "init_stream": [int(StreamKey.INIT), "trial"],
        "sampling_stream": [int(StreamKey.SAMPLING), "trial", "method", "stage"],
        "noise_stream": [int(StreamKey.NOISE), "trial", "method", "stage"],
        "test_stream": [int(StreamKey.TEST)],
    }
