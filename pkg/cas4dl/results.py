"""
Result files for external plotting.

Everything except ``manifest.json`` (which carries timestamps and measured
timings) is byte-identical across runs of the same configuration. Floats are
written with 17 significant digits so they parse back exactly.
"""

import json
import logging
import platform
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

import numpy as np
import pandas as pd
import scipy

from cas4dl.config import ExperimentConfig, Method, config_to_ini
from cas4dl.core.checkpoint import save_checkpoint
from cas4dl.core.errors import Cas4dlError
from cas4dl.core.grid import Grid
from cas4dl.driver import StageRecord, SuiteResult, TrialResult, aggregate_records, records_frame, trial_seeds

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
MANIFEST = "manifest.json"
TEST_SET_NOTE = "uniform random test points with a dedicated seed (no sparse-grid quadrature)"


def _write_csv(frame: pd.DataFrame, path: Path) -> None:
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def _coords(points: np.ndarray) -> Dict[str, np.ndarray]:
    return {f"coord_{i + 1}": points[:, i] for i in range(points.shape[1])}


def _samples_frame(trial: TrialResult, grid: Grid) -> pd.DataFrame:
    samples = trial.samples
    return pd.DataFrame({
        "sample": np.arange(len(samples)),
        "grid_index": samples.indices,
        "stage": samples.stages,
        "weight": samples.weights,
        **_coords(grid.points[samples.indices]),
    })


def _christoffel_frame(christoffel: np.ndarray, grid: Grid) -> pd.DataFrame:
    return pd.DataFrame({
        "grid_index": np.arange(grid.size),
        **_coords(grid.points),
        "christoffel": christoffel,
    })


def _dictionary_frame(trial: TrialResult) -> pd.DataFrame:
    traces = trial.dictionary
    columns = {"t": traces.line}
    for column, element in enumerate(traces.elements):
        columns[f"psi_{int(element)}"] = traces.values[:, column]
    return pd.DataFrame(columns)


def _diagnostic_trials(trials: Iterable[TrialResult]) -> Dict[int, TrialResult]:
    """Per trial index, the CAS run when present, else MC."""
    chosen: Dict[int, TrialResult] = {}
    for trial in sorted(trials, key=lambda t: (t.trial, t.method is not Method.CAS)):
        if trial.completed and trial.trial not in chosen:
            chosen[trial.trial] = trial
    return chosen


def _jsonable(value: float) -> Union[float, str]:
    return value if np.isfinite(value) else str(value)


def build_manifest(
    config: Optional[ExperimentConfig],
    trials: List[TrialResult],
    files: List[str],
) -> Dict[str, Any]:
    from cas4dl import __version__

    manifest: Dict[str, Any] = {
        "created": datetime.now(timezone.utc).isoformat(),
        "code_version": __version__,
        "python": platform.python_version(),
        "libraries": {"numpy": np.__version__, "scipy": scipy.__version__, "pandas": pd.__version__},
        "files": sorted(files),
        "test_set": TEST_SET_NOTE,
        "failures": [t.failure.__dict__ for t in trials if t.failure is not None],
        "timings": [
            {"method": t.method.value, "trial": t.trial, "stage": stage, "seconds": seconds}
            for t in trials
            for stage, seconds in enumerate(t.timings, start=1)
        ],
    }
    if config is not None:
        manifest["config"] = config_to_ini(config)
        manifest["precision"] = config.precision
        manifest["seeds"] = trial_seeds(config)
    component_errors = {
        f"{t.method.value}_{t.trial}": [_jsonable(float(e)) for e in t.component_errors]
        for t in trials
        if t.component_errors is not None
    }
    if component_errors:
        manifest["component_errors"] = component_errors
    return manifest


def emit_results(
    out_dir: Union[str, Path],
    records: List[StageRecord],
    aggregates: Optional[pd.DataFrame] = None,
    trials: Iterable[TrialResult] = (),
    grid: Optional[Grid] = None,
    config: Optional[ExperimentConfig] = None,
) -> Path:
    """Write every result file into ``out_dir`` and return the manifest path."""
    out_dir = Path(out_dir)
    trials = sorted(trials, key=lambda t: (t.method.value, t.trial))
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise Cas4dlError(f"cannot create output directory {out_dir}: {e}") from e

    files: List[str] = []

    def emit(frame: pd.DataFrame, name: str) -> None:
        try:
            _write_csv(frame, out_dir / name)
        except OSError as e:
            raise Cas4dlError(f"cannot write {out_dir / name}: {e}") from e
        files.append(name)

    records = sorted(records, key=lambda r: (r.method, r.trial, r.stage))
    emit(records_frame(records), "stages.csv")
    emit(aggregates if aggregates is not None else aggregate_records(trials), "aggregate.csv")

    if grid is not None:
        for trial in trials:
            emit(_samples_frame(trial, grid), f"samples_{trial.method.value}_{trial.trial}.csv")
        for index, trial in sorted(_diagnostic_trials(trials).items()):
            if trial.christoffel is not None:
                emit(_christoffel_frame(trial.christoffel, grid), f"christoffel_{index}.csv")
            if trial.dictionary is not None:
                emit(_dictionary_frame(trial), f"dictionary_{index}.csv")

    if config is not None and config.checkpoints:
        for trial in trials:
            if trial.params is None:
                continue
            name = f"checkpoints/{trial.method.value}_{trial.trial}.npz"
            save_checkpoint(
                out_dir / name,
                trial.params,
                trial.state,
                rng_state=trial.rng_state,
                metadata={"method": trial.method.value, "trial": trial.trial, "completed": trial.completed},
            )
            files.append(name)

    manifest_path = out_dir / MANIFEST
    manifest = build_manifest(config, trials, files)
    try:
        manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    except OSError as e:
        raise Cas4dlError(f"cannot write {manifest_path}: {e}") from e
    logger.info(f"Wrote {len(files)} result files and manifest to {out_dir}")
    return manifest_path


def emit_suite(suite: SuiteResult, out_dir: Union[str, Path]) -> Path:
    return emit_results(
        out_dir,
        suite.records,
        suite.aggregates,
        suite.trials,
        suite.context.grid,
        suite.config,
    )


def load_manifest(path: Union[str, Path]) -> Dict[str, Any]:
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST
    try:
        return json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise Cas4dlError(f"cannot read manifest {path}: {e}") from e
