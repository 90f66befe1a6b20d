"""
Experiment configuration: INI schema, defaults, validation and normalized dumps.

Sections and keys (defaults in parentheses):

    [experiment] target (f1), dimension (required), grid_size (per-dimension
                 table), seed (0), trials (20), methods (cas, mc),
                 precision (double), noise_std (0.0)
    [schedule]   samples (1000, 1400, ..., 5000), epochs_per_stage (5000)
    [network]    depth (5), width (50), activation (tanh), output_dim (1)
    [training]   solver (adam), learning_rate (1e-3), lr_drop (10.0),
                 beta1 (0.9), beta2 (0.999), epsilon (1e-8)
    [subspace]   eps_tol (1e-6)
    [test]       size (20000), seed (20220901)
    [tabulated]  grid_file, value_file, test_grid_file, test_value_file
    [output]     out_dir (results), record_wall_time (false),
                 checkpoints (false), dictionary_points (201)

Relative tabulated paths resolve against the directory of the config file.
"""

import configparser
import dataclasses
import logging
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Tuple, Union

import numpy as np

from cas4dl.core.errors import ConfigError
from cas4dl.core.grid import default_grid_size
from cas4dl.core.metrics import DEFAULT_TEST_SEED, DEFAULT_TEST_SIZE
from cas4dl.core.network import Activation, Architecture, LearningRateSchedule
from cas4dl.core.subspace import DEFAULT_EPS_TOL

logger = logging.getLogger(__name__)

DEFAULT_SCHEDULE = (1000, 1400, 1900, 2300, 2800, 3200, 4100, 4600, 5000)
TARGETS = ("f1", "f2", "f3", "f4", "tabulated")
PRECISIONS = ("single", "double")
SOLVERS = ("adam", "least_squares")


class Method(Enum):
    CAS = "cas"
    MC = "mc"


def _parse_int_list(text: str) -> Tuple[int, ...]:
    return tuple(int(part) for part in re.split(r"[,\s]+", text.strip()) if part)


def _parse_methods(text: str) -> Tuple[Method, ...]:
    return tuple(Method(part.lower()) for part in re.split(r"[,\s]+", text.strip()) if part)


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_optional_str(text: str) -> Optional[str]:
    return text.strip() or None


# section -> key -> (field, parser)
SCHEMA: Dict[str, Dict[str, Tuple[str, Callable[[str], Any]]]] = {
    "experiment": {
        "target": ("target", lambda s: s.strip().lower()),
        "dimension": ("dimension", int),
        "grid_size": ("grid_size", int),
        "seed": ("seed", int),
        "trials": ("trials", int),
        "methods": ("methods", _parse_methods),
        "precision": ("precision", lambda s: s.strip().lower()),
        "noise_std": ("noise_std", float),
    },
    "schedule": {
        "samples": ("schedule", _parse_int_list),
        "epochs_per_stage": ("epochs_per_stage", int),
    },
    "network": {
        "depth": ("depth", int),
        "width": ("width", int),
        "activation": ("activation", lambda s: Activation(s.strip().lower())),
        "output_dim": ("output_dim", int),
    },
    "training": {
        "solver": ("solver", lambda s: s.strip().lower()),
        "learning_rate": ("learning_rate", float),
        "lr_drop": ("lr_drop", float),
        "beta1": ("beta1", float),
        "beta2": ("beta2", float),
        "epsilon": ("adam_epsilon", float),
    },
    "subspace": {
        "eps_tol": ("eps_tol", float),
    },
    "test": {
        "size": ("test_size", int),
        "seed": ("test_seed", int),
    },
    "tabulated": {
        "grid_file": ("tabulated_grid", _parse_optional_str),
        "value_file": ("tabulated_values", _parse_optional_str),
        "test_grid_file": ("tabulated_test_grid", _parse_optional_str),
        "test_value_file": ("tabulated_test_values", _parse_optional_str),
    },
    "output": {
        "out_dir": ("out_dir", str),
        "record_wall_time": ("record_wall_time", _parse_bool),
        "checkpoints": ("checkpoints", _parse_bool),
        "dictionary_points": ("dictionary_points", int),
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description with every default filled in."""
    dimension: int
    target: str = "f1"
    grid_size: Optional[int] = None
    seed: int = 0
    trials: int = 20
    methods: Tuple[Method, ...] = (Method.CAS, Method.MC)
    precision: str = "double"
    noise_std: float = 0.0
    schedule: Tuple[int, ...] = DEFAULT_SCHEDULE
    epochs_per_stage: int = 5000
    depth: int = 5
    width: int = 50
    activation: Activation = Activation.TANH
    output_dim: int = 1
    solver: str = "adam"
    learning_rate: float = 1e-3
    lr_drop: float = 10.0
    beta1: float = 0.9
    beta2: float = 0.999
    adam_epsilon: float = 1e-8
    eps_tol: float = DEFAULT_EPS_TOL
    test_size: int = DEFAULT_TEST_SIZE
    test_seed: int = DEFAULT_TEST_SEED
    tabulated_grid: Optional[str] = None
    tabulated_values: Optional[str] = None
    tabulated_test_grid: Optional[str] = None
    tabulated_test_values: Optional[str] = None
    out_dir: str = "results"
    record_wall_time: bool = False
    checkpoints: bool = False
    dictionary_points: int = 201

    def __post_init__(self):
        if self.grid_size is None and self.dimension >= 1:
            object.__setattr__(self, "grid_size", default_grid_size(self.dimension))
        object.__setattr__(self, "schedule", tuple(int(m) for m in self.schedule))
        object.__setattr__(self, "methods", tuple(Method(m) for m in self.methods))
        object.__setattr__(self, "activation", Activation(self.activation))
        _validate(self)

    @property
    def is_tabulated(self) -> bool:
        return self.target == "tabulated"

    @property
    def dtype(self):
        return np.float32 if self.precision == "single" else np.float64

    @property
    def total_epochs(self) -> int:
        return self.epochs_per_stage * len(self.schedule)

    @property
    def architecture(self) -> Architecture:
        return Architecture(
            input_dim=self.dimension,
            depth=self.depth,
            width=self.width,
            output_dim=self.output_dim,
            activation=self.activation,
        )

    @property
    def lr_schedule(self) -> LearningRateSchedule:
        return LearningRateSchedule.over_budget(self.learning_rate, self.total_epochs, self.lr_drop)

    def with_overrides(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **{k: v for k, v in changes.items() if v is not None})


def _fail(message: str, section: str, key: str) -> None:
    raise ConfigError(message, section=section, key=key)


def _validate(config: ExperimentConfig) -> None:
    if config.target not in TARGETS:
        _fail(f"unknown target '{config.target}'", "experiment", "target")
    if config.dimension < 1:
        _fail("dimension must be positive", "experiment", "dimension")
    if config.grid_size < 1:
        _fail("grid_size must be positive", "experiment", "grid_size")
    if config.trials < 1:
        _fail("trials must be at least 1", "experiment", "trials")
    if not config.methods:
        _fail("at least one method is required", "experiment", "methods")
    if len(set(config.methods)) != len(config.methods):
        _fail("methods must not repeat", "experiment", "methods")
    if config.precision not in PRECISIONS:
        _fail(f"precision must be one of {PRECISIONS}", "experiment", "precision")
    if config.noise_std < 0:
        _fail("noise_std must be non-negative", "experiment", "noise_std")

    if not config.schedule:
        _fail("schedule must not be empty", "schedule", "samples")
    if any(m <= 0 for m in config.schedule):
        _fail("schedule must be positive", "schedule", "samples")
    if any(b <= a for a, b in zip(config.schedule, config.schedule[1:])):
        _fail("schedule not strictly increasing", "schedule", "samples")
    if config.epochs_per_stage < 0:
        _fail("epochs_per_stage must be non-negative", "schedule", "epochs_per_stage")

    if config.depth < 0:
        _fail("depth must be non-negative", "network", "depth")
    if config.width < 1:
        _fail("width must be positive", "network", "width")
    if config.output_dim < 1:
        _fail("output_dim must be positive", "network", "output_dim")
    if not config.is_tabulated and config.output_dim != 1:
        _fail("analytic targets are scalar; output_dim must be 1", "network", "output_dim")
    if not config.is_tabulated and config.grid_size < config.width:
        _fail(f"grid_size K={config.grid_size} is smaller than the width N={config.width}", "experiment", "grid_size")

    if config.solver not in SOLVERS:
        _fail(f"solver must be one of {SOLVERS}", "training", "solver")
    if config.learning_rate <= 0:
        _fail("learning_rate must be positive", "training", "learning_rate")
    if config.lr_drop < 1:
        _fail("lr_drop must be at least 1", "training", "lr_drop")
    if not 0 <= config.beta1 < 1:
        _fail("beta1 must lie in [0, 1)", "training", "beta1")
    if not 0 <= config.beta2 < 1:
        _fail("beta2 must lie in [0, 1)", "training", "beta2")
    if config.adam_epsilon <= 0:
        _fail("epsilon must be positive", "training", "epsilon")

    if not 0 < config.eps_tol < 1:
        _fail("eps_tol must lie in (0, 1)", "subspace", "eps_tol")
    if config.test_size < 1:
        _fail("test size must be positive", "test", "size")

    if config.is_tabulated:
        for key, value in (
            ("grid_file", config.tabulated_grid),
            ("value_file", config.tabulated_values),
            ("test_grid_file", config.tabulated_test_grid),
            ("test_value_file", config.tabulated_test_values),
        ):
            if not value:
                _fail("required for tabulated targets", "tabulated", key)

    if config.dictionary_points < 2:
        _fail("dictionary_points must be at least 2", "output", "dictionary_points")


def _locate(text: str, section: str, key: Optional[str] = None) -> Optional[int]:
    """1-based line of ``key`` inside ``[section]`` (or of the header itself)."""
    current = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        header = re.fullmatch(r"\[([^\]]+)\]", line)
        if header:
            current = header.group(1).strip()
            if key is None and current == section:
                return number
            continue
        if key is not None and current == section:
            name = re.split(r"[=:]", line, maxsplit=1)[0].strip().lower()
            if name == key:
                return number
    return None


def parse_config_text(text: str, base_dir: Union[str, Path, None] = None) -> ExperimentConfig:
    """Parse and validate INI text; unknown sections and keys are rejected."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.DuplicateOptionError as e:
        raise ConfigError("duplicate key", section=e.section, key=e.option, line=e.lineno) from e
    except configparser.DuplicateSectionError as e:
        raise ConfigError("duplicate section", section=e.section, line=e.lineno) from e
    except configparser.Error as e:
        raise ConfigError(f"malformed configuration: {e}") from e

    values: Dict[str, Any] = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError("unknown section", section=section, line=_locate(text, section))
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError("unknown key", section=section, key=key, line=_locate(text, section, key))
            field_name, convert = SCHEMA[section][key]
            try:
                values[field_name] = convert(raw)
            except ValueError as e:
                raise ConfigError(
                    f"invalid value {raw!r}: {e}", section=section, key=key, line=_locate(text, section, key)
                ) from e

    if "dimension" not in values:
        raise ConfigError("missing required key", section="experiment", key="dimension")

    if base_dir is not None:
        for field_name in ("tabulated_grid", "tabulated_values", "tabulated_test_grid", "tabulated_test_values"):
            path = values.get(field_name)
            if path and not Path(path).is_absolute():
                values[field_name] = str(Path(base_dir).resolve() / path)

    try:
        config = ExperimentConfig(**values)
    except ConfigError as e:
        if e.section is not None and e.line is None:
            e.line = _locate(text, e.section, e.key)
        raise
    logger.debug(f"Parsed configuration: target={config.target} d={config.dimension} trials={config.trials}")
    return config


def parse_config(path: Union[str, Path]) -> ExperimentConfig:
    """Read and validate an experiment configuration file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"configuration file not found: {path}")
    return parse_config_text(path.read_text(), base_dir=path.parent)


def _format(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


def config_to_ini(config: ExperimentConfig) -> str:
    """Normalized INI text listing every key; parses back to an equal config."""
    lines = []
    for section, keys in SCHEMA.items():
        lines.append(f"[{section}]")
        for key, (field_name, _) in keys.items():
            lines.append(f"{key} = {_format(getattr(config, field_name))}".rstrip())
        lines.append("")
    return "\n".join(lines)
