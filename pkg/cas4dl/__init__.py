"""cas4dl: Christoffel adaptive sampling for deep-network function approximation."""

__version__ = "0.1.0"

from cas4dl.config import ExperimentConfig, Method, config_to_ini, parse_config, parse_config_text
from cas4dl.driver import (
    ExperimentContext,
    StageRecord,
    SuiteResult,
    TrialResult,
    run_cas4dl,
    run_mc,
    run_suite,
)
from cas4dl.results import emit_results, emit_suite
from cas4dl.tabulated import TabulatedOracle, load_tabulated, write_grid, write_values

__all__ = [
    "ExperimentConfig",
    "ExperimentContext",
    "Method",
    "StageRecord",
    "SuiteResult",
    "TabulatedOracle",
    "TrialResult",
    "__version__",
    "config_to_ini",
    "emit_results",
    "emit_suite",
    "load_tabulated",
    "parse_config",
    "parse_config_text",
    "run_cas4dl",
    "run_mc",
    "run_suite",
    "write_grid",
    "write_values",
]
