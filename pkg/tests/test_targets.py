"""
Tests for the analytic benchmark targets.
"""
import math

import numpy as np
import pytest

from cas4dl.core.errors import DimensionMismatchError
from cas4dl.core.targets import TargetFunction, TargetKind, evaluate, f3_coefficients, make_target


class TestTargetValues:
    """Hand-evaluated values of f1..f4."""

    def test_f1_at_origin(self):
        assert evaluate(make_target("f1", 2), np.zeros(2))[0] == 1.0

    def test_f3_at_origin(self):
        assert evaluate(make_target("f3", 2), np.zeros(2))[0] == 1.0

    def test_f1_at_all_ones(self):
        assert evaluate(make_target("f1", 4), np.ones(4))[0] == pytest.approx(math.exp(-1.0), rel=1e-15)

    def test_f2_in_one_dimension(self):
        """Empty numerator product: f2(y) = 1 / (1 - y/4)."""
        assert evaluate(make_target("f2", 1), np.array([0.5]))[0] == pytest.approx(8.0 / 7.0, rel=1e-15)

    def test_f2_and_f4_one_dimensional_closed_forms(self):
        y = np.linspace(-1.0, 1.0, 21)[:, None]
        np.testing.assert_allclose(make_target("f2", 1)(y)[:, 0], 1.0 / (1.0 - y[:, 0] / 4.0), rtol=1e-14)
        np.testing.assert_allclose(make_target("f4", 1)(y)[:, 0], 1.0 + 4.0 * y[:, 0] ** 2, rtol=1e-14)

    def test_f1_exponent_antisymmetry(self, rng):
        f1 = make_target("f1", 5)
        y = rng.uniform(-1.0, 1.0, size=(100, 5))
        np.testing.assert_allclose(f1(y) * f1(-y), 1.0, rtol=1e-14)

    @pytest.mark.parametrize("d", [1, 2, 3, 8, 16])
    def test_f3_is_one_at_origin_in_any_dimension(self, d):
        assert make_target("f3", d)(np.zeros(d))[0] == 1.0

    @pytest.mark.parametrize("name", ["f1", "f2", "f3", "f4"])
    def test_finite_on_the_cube(self, name, rng):
        y = rng.uniform(-1.0, 1.0, size=(500, 6))
        assert np.all(np.isfinite(make_target(name, 6)(y)))


class TestTargetInterface:
    """Shapes, coefficients and argument validation."""

    def test_single_point_and_batch_shapes(self):
        f = make_target("f4", 3)
        assert f(np.zeros(3)).shape == (1,)
        assert f(np.zeros((7, 3))).shape == (7, 1)

    def test_values_at_selects_grid_rows(self, rng):
        f = make_target("f2", 2)
        points = rng.uniform(-1.0, 1.0, size=(10, 2))
        np.testing.assert_array_equal(f.values_at(points, np.array([3, 3, 9])), f(points[[3, 3, 9]]))

    def test_f3_coefficients(self):
        np.testing.assert_array_equal(f3_coefficients(1), [1.0])
        q = f3_coefficients(4)
        assert q[0] == 1.0
        assert q[-1] == pytest.approx(1e-3, rel=1e-14)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            make_target("f1", 3)(np.zeros(2))

    def test_unknown_target_name(self):
        with pytest.raises(ValueError, match="unknown target"):
            make_target("f5", 2)

    def test_tabulated_kind_is_not_evaluated_here(self):
        with pytest.raises(ValueError):
            evaluate(TargetFunction(TargetKind.TABULATED, 2, output_dim=3), np.zeros(2))

    def test_analytic_targets_are_scalar(self):
        with pytest.raises(ValueError):
            TargetFunction(TargetKind.F1, 2, output_dim=2)
