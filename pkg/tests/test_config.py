"""
Tests for the INI schema, validation and normalized dumps.
"""
from pathlib import Path

import numpy as np
import pytest

from cas4dl.config import (
    DEFAULT_SCHEDULE,
    ExperimentConfig,
    Method,
    config_to_ini,
    parse_config,
    parse_config_text,
)
from cas4dl.core.errors import ConfigError
from cas4dl.core.network import Activation

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


class TestDefaults:
    def test_minimal_file(self):
        config = parse_config_text("[experiment]\ndimension = 8\n")
        assert config.target == "f1"
        assert config.grid_size == 50_000
        assert config.schedule == DEFAULT_SCHEDULE
        assert config.methods == (Method.CAS, Method.MC)
        assert (config.depth, config.width) == (5, 50)
        assert config.activation is Activation.TANH
        assert config.eps_tol == 1e-6
        assert config.test_size == 20_000
        assert config.record_wall_time is False

    def test_derived_properties(self):
        config = ExperimentConfig(dimension=2, schedule=(10, 20, 30), epochs_per_stage=100, precision="single")
        assert config.total_epochs == 300
        assert config.dtype is np.float32
        assert config.architecture.layer_sizes == (2,) + (50,) * 6 + (1,)
        assert config.lr_schedule(300) == pytest.approx(config.learning_rate / 10.0, rel=1e-9)

    def test_missing_dimension(self):
        with pytest.raises(ConfigError, match="dimension"):
            parse_config_text("[experiment]\ntarget = f2\n")


class TestParsing:
    def test_lists_and_enums(self):
        config = parse_config_text(
            "[experiment]\ndimension = 2\nmethods = mc\n"
            "[schedule]\nsamples = 100, 200 300\n"
            "[network]\nactivation = ELU\ndepth = 0\nwidth = 4\n"
        )
        assert config.methods == (Method.MC,)
        assert config.schedule == (100, 200, 300)
        assert config.activation is Activation.ELU

    def test_normalized_dump_parses_back_to_an_equal_config(self):
        config = ExperimentConfig(
            dimension=3,
            target="f3",
            seed=42,
            schedule=(50, 70),
            noise_std=0.01,
            learning_rate=3e-4,
            activation=Activation.RELU,
            checkpoints=True,
        )
        assert parse_config_text(config_to_ini(config)) == config

    def test_shipped_configurations_are_valid(self):
        example = parse_config(CONFIGS / "example.ini")
        assert example.dimension == 2
        full = parse_config(CONFIGS / "full_scale.ini")
        assert full.grid_size == 50_000
        assert full.schedule == DEFAULT_SCHEDULE

    def test_relative_tabulated_paths_resolve_against_the_file(self, tmp_path):
        path = tmp_path / "tab.ini"
        path.write_text(
            "[experiment]\ntarget = tabulated\ndimension = 2\n"
            "[network]\noutput_dim = 3\n"
            "[tabulated]\ngrid_file = grid.csv\nvalue_file = values.csv\n"
            "test_grid_file = /data/test_grid.csv\ntest_value_file = test_values.csv\n"
        )
        config = parse_config(path)
        assert config.tabulated_grid == str(tmp_path.resolve() / "grid.csv")
        assert config.tabulated_test_grid == "/data/test_grid.csv"
        assert config.output_dim == 3

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            parse_config(tmp_path / "absent.ini")


class TestValidation:
    def test_schedule_not_increasing_reports_the_line(self):
        with pytest.raises(ConfigError, match="schedule not strictly increasing") as excinfo:
            parse_config_text("[experiment]\ndimension = 2\n\n[schedule]\nsamples = 100, 300, 200\n")
        assert excinfo.value.section == "schedule"
        assert excinfo.value.key == "samples"
        assert excinfo.value.line == 5

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="unknown key") as excinfo:
            parse_config_text("[experiment]\ndimension = 2\nlearning_rate = 0.1\n")
        assert excinfo.value.line == 3

    def test_unknown_section(self):
        with pytest.raises(ConfigError, match="unknown section") as excinfo:
            parse_config_text("[experiment]\ndimension = 2\n[optimizer]\nlr = 1\n")
        assert excinfo.value.line == 3

    def test_unparseable_value(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_config_text("[experiment]\ndimension = two\n")
        assert excinfo.value.key == "dimension"
        assert excinfo.value.line == 2

    def test_duplicate_key(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config_text("[experiment]\ndimension = 2\ndimension = 3\n")

    def test_grid_smaller_than_width(self):
        with pytest.raises(ConfigError, match="smaller than the width"):
            ExperimentConfig(dimension=2, grid_size=40, width=50)

    @pytest.mark.parametrize(
        "changes",
        [
            dict(schedule=(0, 10)),
            dict(schedule=()),
            dict(trials=0),
            dict(eps_tol=1.0),
            dict(eps_tol=0.0),
            dict(target="f9"),
            dict(output_dim=2),
            dict(lr_drop=0.5),
            dict(precision="half"),
            dict(solver="sgd"),
            dict(methods=(Method.CAS, Method.CAS)),
            dict(noise_std=-1.0),
        ],
    )
    def test_rejected_settings(self, changes):
        with pytest.raises(ConfigError):
            ExperimentConfig(dimension=2, **changes)

    def test_tabulated_requires_every_file(self):
        with pytest.raises(ConfigError, match="required") as excinfo:
            ExperimentConfig(dimension=2, target="tabulated", tabulated_grid="g.csv", tabulated_values="v.csv")
        assert excinfo.value.key == "test_grid_file"

    def test_with_overrides_revalidates(self):
        config = ExperimentConfig(dimension=2, grid_size=100, width=10)
        assert config.with_overrides(trials=3, seed=None).trials == 3
        with pytest.raises(ConfigError):
            config.with_overrides(trials=0)
