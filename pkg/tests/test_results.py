"""
Tests for result files and the run manifest.
"""
import numpy as np
import pandas as pd
import pytest

from cas4dl.config import Method, parse_config_text
from cas4dl.core.checkpoint import load_checkpoint
from cas4dl.core.errors import Cas4dlError
from cas4dl.driver import StageRecord, run_suite
from cas4dl.results import emit_results, emit_suite, load_manifest

STAGE_COLUMNS = "method,trial,stage,m,n,rel_error,alpha_inv,final_loss,wall_time_s"


@pytest.fixture
def suite(small_config):
    return run_suite(small_config(checkpoints=True))


class TestEmitResults:
    def test_empty_run_writes_headers(self, tmp_path):
        emit_results(tmp_path, [])
        assert (tmp_path / "stages.csv").read_text() == STAGE_COLUMNS + "\n"
        assert (tmp_path / "aggregate.csv").read_text().startswith("method,stage,m,trials,rel_error_mean")
        assert load_manifest(tmp_path)["files"] == ["aggregate.csv", "stages.csv"]

    def test_one_row_per_stage_record(self, suite, tmp_path):
        emit_suite(suite, tmp_path)
        frame = pd.read_csv(tmp_path / "stages.csv")
        assert len(frame) == 8
        assert list(frame.columns) == STAGE_COLUMNS.split(",")
        assert len(pd.read_csv(tmp_path / "aggregate.csv")) == 4

    def test_floats_parse_back_exactly(self, suite, tmp_path):
        emit_suite(suite, tmp_path)
        frame = pd.read_csv(tmp_path / "stages.csv", float_precision="round_trip")
        np.testing.assert_array_equal(frame["rel_error"].to_numpy(), [r.rel_error for r in suite.records])
        np.testing.assert_array_equal(frame["alpha_inv"].to_numpy(), [r.alpha_inv for r in suite.records])

    def test_infinite_values_survive(self, tmp_path):
        record = StageRecord("cas", 0, 1, 10, 0, 1.0, float("inf"), 0.5, 0.0)
        emit_results(tmp_path, [record])
        assert pd.read_csv(tmp_path / "stages.csv")["alpha_inv"].iloc[0] == float("inf")

    def test_repeated_runs_are_byte_identical(self, small_config, tmp_path):
        config = small_config()
        emit_suite(run_suite(config), tmp_path / "a")
        emit_suite(run_suite(config), tmp_path / "b")
        names = sorted(p.name for p in (tmp_path / "a").glob("*.csv"))
        assert "stages.csv" in names
        for name in names:
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_diagnostic_files(self, suite, tmp_path):
        emit_suite(suite, tmp_path)
        samples = pd.read_csv(tmp_path / "samples_cas_0.csv")
        assert list(samples.columns) == ["sample", "grid_index", "stage", "weight", "coord_1", "coord_2"]
        assert len(samples) == 40
        christoffel = pd.read_csv(tmp_path / "christoffel_0.csv")
        assert len(christoffel) == 300
        assert christoffel["christoffel"].mean() == pytest.approx(1.0, abs=1e-10)
        dictionary = pd.read_csv(tmp_path / "dictionary_1.csv")
        assert dictionary.columns[0] == "t"
        assert len(dictionary) == 11

    def test_checkpoints(self, suite, tmp_path):
        emit_suite(suite, tmp_path)
        checkpoint = load_checkpoint(tmp_path / "checkpoints" / "mc_1.npz")
        assert checkpoint.metadata == {"method": "mc", "trial": 1, "completed": True}
        assert checkpoint.state.step == 10
        assert checkpoint.rng_state["bit_generator"] == "PCG64"
        assert "checkpoints/cas_0.npz" in load_manifest(tmp_path)["files"]

    def test_unwritable_directory(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        with pytest.raises(Cas4dlError, match="cannot create"):
            emit_results(blocker / "out", [])


class TestManifest:
    def test_config_reparses_to_the_same_experiment(self, suite, tmp_path):
        manifest = load_manifest(emit_suite(suite, tmp_path))
        assert parse_config_text(manifest["config"]) == suite.config
        assert manifest["seeds"]["base_seed"] == suite.config.seed
        assert manifest["precision"] == "double"
        assert manifest["failures"] == []
        assert len(manifest["timings"]) == 8
        assert manifest["libraries"]["numpy"] == np.__version__

    def test_mc_only_run_has_christoffel_from_mc(self, small_config, tmp_path):
        emit_suite(run_suite(small_config(methods=(Method.MC,), trials=1)), tmp_path)
        assert (tmp_path / "christoffel_0.csv").exists()
        assert not (tmp_path / "samples_cas_0.csv").exists()

    def test_unreadable_manifest(self, tmp_path):
        (tmp_path / "manifest.json").write_text("{not json")
        with pytest.raises(Cas4dlError):
            load_manifest(tmp_path)
