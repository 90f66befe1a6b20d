"""
Tabulated oracles: target values precomputed on the grid by an external solver.

File layout (CSV with header):
    grid file   index,coord_1,...,coord_d
    value file  index,val_1,...,val_J
Rows are matched by ``index`` (0-based, every grid index exactly once).
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd

from cas4dl.core.errors import TabulatedDataError
from cas4dl.core.grid import Grid
from cas4dl.core.metrics import TestSet

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"

PathLike = Union[str, Path]


@dataclass(frozen=True)
class TabulatedOracle:
    """Grid with stored values f(z_l), K x J, plus an optional test table."""
    grid: Grid
    values: np.ndarray
    test: Optional[TestSet] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        if values.shape[0] != self.grid.size:
            raise TabulatedDataError(f"value table has {values.shape[0]} rows, grid has {self.grid.size}")
        if values.shape[1] < 1:
            raise TabulatedDataError("value table needs at least one component")
        if not np.all(np.isfinite(values)):
            raise TabulatedDataError("value table contains non-finite entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.test is not None:
            if self.test.points.shape[1] != self.dimension:
                raise TabulatedDataError(
                    f"test points have dimension {self.test.points.shape[1]}, grid has {self.dimension}"
                )
            if self.test.values.shape[1] != self.output_dim:
                raise TabulatedDataError(
                    f"test values have {self.test.values.shape[1]} components, table has {self.output_dim}"
                )

    @property
    def dimension(self) -> int:
        return self.grid.dimension

    @property
    def output_dim(self) -> int:
        return self.values.shape[1]

    def values_at(self, points: np.ndarray, indices: np.ndarray) -> np.ndarray:
        """Stored values at grid rows ``indices``; ``points`` must be this grid."""
        if points.shape != self.grid.points.shape:
            raise TabulatedDataError("tabulated oracle queried on a different grid")
        return self.values[np.asarray(indices, dtype=np.intp)]


def _read_table(path: PathLike, prefix: str) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise TabulatedDataError(f"table not found: {path}")
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise TabulatedDataError(f"cannot parse {path}: {e}") from e

    columns = [str(c).strip() for c in frame.columns]
    expected = ["index"] + [f"{prefix}_{i}" for i in range(1, len(columns))]
    if len(columns) < 2 or columns != expected:
        raise TabulatedDataError(f"{path.name}: header must be index,{prefix}_1..{prefix}_n, got {','.join(columns)}")
    frame.columns = columns

    try:
        index = frame["index"].to_numpy(dtype=np.int64)
        data = frame[columns[1:]].to_numpy(dtype=np.float64)
    except (ValueError, TypeError) as e:
        raise TabulatedDataError(f"{path.name}: non-numeric entries: {e}") from e

    order = np.argsort(index, kind="stable")
    if not np.array_equal(index[order], np.arange(len(index))):
        raise TabulatedDataError(f"{path.name}: index column must list 0..{len(index) - 1} exactly once")
    if not np.all(np.isfinite(data)):
        raise TabulatedDataError(f"{path.name}: non-finite entries")
    return data[order]


def _grid_from(points: np.ndarray, path: PathLike, dimension: Optional[int]) -> np.ndarray:
    if dimension is not None and points.shape[1] != dimension:
        raise TabulatedDataError(
            f"{Path(path).name}: points have dimension {points.shape[1]}, configuration says {dimension}"
        )
    if np.any(np.abs(points) > 1.0):
        raise TabulatedDataError(f"{Path(path).name}: points must lie in [-1, 1]^d")
    return points


def load_tabulated(
    grid_file: PathLike,
    value_file: PathLike,
    test_grid_file: Optional[PathLike] = None,
    test_value_file: Optional[PathLike] = None,
    dimension: Optional[int] = None,
) -> TabulatedOracle:
    """Load a tabulated oracle, validating row counts, finiteness and dimension."""
    points = _grid_from(_read_table(grid_file, "coord"), grid_file, dimension)
    values = _read_table(value_file, "val")
    if values.shape[0] != points.shape[0]:
        raise TabulatedDataError(
            f"value file has {values.shape[0]} rows but grid file has {points.shape[0]}"
        )

    test = None
    if (test_grid_file is None) != (test_value_file is None):
        raise TabulatedDataError("test grid and test value files must be given together")
    if test_grid_file is not None:
        test_points = _grid_from(_read_table(test_grid_file, "coord"), test_grid_file, points.shape[1])
        test_values = _read_table(test_value_file, "val")
        if test_values.shape[0] != test_points.shape[0]:
            raise TabulatedDataError(
                f"test value file has {test_values.shape[0]} rows but test grid has {test_points.shape[0]}"
            )
        test = TestSet(test_points, test_values)

    oracle = TabulatedOracle(Grid(points), values, test)
    logger.info(
        f"Loaded tabulated oracle: K={oracle.grid.size} d={oracle.dimension} J={oracle.output_dim}"
        + (f" test M={test.size}" if test is not None else "")
    )
    return oracle


def _write(path: PathLike, data: np.ndarray, prefix: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = np.asarray(data, dtype=np.float64)
    if data.ndim == 1:
        data = data[:, None]
    frame = pd.DataFrame(data, columns=[f"{prefix}_{i}" for i in range(1, data.shape[1] + 1)])
    frame.insert(0, "index", np.arange(data.shape[0]))
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def write_grid(grid: Union[Grid, np.ndarray], path: PathLike) -> Path:
    """Export grid points so an external solver can tabulate values on them."""
    points = grid.points if isinstance(grid, Grid) else grid
    return _write(path, points, "coord")


def write_values(values: np.ndarray, path: PathLike) -> Path:
    return _write(path, values, "val")
