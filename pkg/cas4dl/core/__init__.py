"""Core numerical components: targets, grid, subspace, sampler, network and metrics."""

from .errors import (
    Cas4dlError,
    ConfigError,
    DimensionMismatchError,
    InvalidDistributionError,
    TabulatedDataError,
    TrainingDivergenceError,
    TrivialSubspaceError,
)
from .grid import DiscreteDistribution, Grid, StreamKey, build_grid, derive_rng, draw_indices
from .metrics import TestSet, build_test_set, relative_l2_error, stability_constant
from .network import (
    Activation,
    AdamState,
    Architecture,
    LearningRateSchedule,
    NetworkParams,
    TrainingData,
    adam_step,
    forward,
    gradient,
    init_params,
    penultimate_features,
    train,
    weighted_loss,
)
from .sampler import SampleSet, cas_draw, uniform_draw
from .subspace import (
    DictionaryEvaluation,
    SubspaceFactorization,
    assemble_matrix,
    christoffel_values,
    factorize,
    induced_measures,
    weight_values,
)
from .targets import TargetFunction, TargetKind, evaluate

__all__ = [
    "Activation",
    "AdamState",
    "Architecture",
    "Cas4dlError",
    "ConfigError",
    "DictionaryEvaluation",
    "DimensionMismatchError",
    "DiscreteDistribution",
    "Grid",
    "InvalidDistributionError",
    "LearningRateSchedule",
    "NetworkParams",
    "SampleSet",
    "StreamKey",
    "SubspaceFactorization",
    "TabulatedDataError",
    "TargetFunction",
    "TargetKind",
    "TestSet",
    "TrainingData",
    "TrainingDivergenceError",
    "TrivialSubspaceError",
    "adam_step",
    "assemble_matrix",
    "build_grid",
    "build_test_set",
    "cas_draw",
    "christoffel_values",
    "derive_rng",
    "draw_indices",
    "evaluate",
    "factorize",
    "forward",
    "gradient",
    "induced_measures",
    "init_params",
    "penultimate_features",
    "relative_l2_error",
    "stability_constant",
    "train",
    "uniform_draw",
    "weight_values",
    "weighted_loss",
]
