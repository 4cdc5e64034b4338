"""
Tests for the nuv-binning command line
"""

import json

import numpy as np
import pytest

from nuv_binning.cli import main, build_parser, experiment_config
from nuv_binning.models import OUTPUT_DIR_ENV
from nuv_binning.vector_io import read_matrix

SIM_ARGS = ["simulate", "--trials", "4", "--seed", "3", "--d-min", "20", "--d-max", "40",
            "--bin-specs", "2,sturges"]


@pytest.fixture
def vectors(tmp_path):
    template = tmp_path / "template.txt"
    template.write_text("2\n0\n5\n", encoding="utf-8")
    window = tmp_path / "window.txt"
    window.write_text("8\n2\n2\n", encoding="utf-8")
    return template, window


def write_vector(path, values):
    path.write_text("\n".join(repr(float(v)) for v in values) + "\n", encoding="utf-8")
    return path


class TestNuvCommand:
    def test_worked_example(self, vectors, capsys):
        template, window = vectors
        assert main(["nuv", str(template), str(window), "--cuts", "0,2,3", "--json"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["nuv"] == pytest.approx(0.75)
        assert out["b"] == 2 and out["d"] == 3

    def test_kmeans_finds_same_split(self, vectors, capsys):
        template, window = vectors
        assert main(["nuv", str(template), str(window), "-b", "2"]) == 0
        assert "D(t, w): 0.75" in capsys.readouterr().out

    def test_constant_window(self, vectors, tmp_path):
        template, _ = vectors
        window = write_vector(tmp_path / "flat.txt", [3, 3, 3])
        assert main(["nuv", str(template), str(window), "-b", "2"]) == 4

    def test_length_mismatch(self, vectors, tmp_path):
        template, _ = vectors
        window = write_vector(tmp_path / "short.txt", [1, 2])
        assert main(["nuv", str(template), str(window)]) == 2

    def test_unreadable_file(self, vectors, tmp_path):
        template, _ = vectors
        assert main(["nuv", str(template), str(tmp_path / "missing.txt")]) == 2


class TestBinCommand:
    def test_json_partition(self, tmp_path, rng, capsys):
        template = write_vector(tmp_path / "t.txt", np.round(rng.random(100), 2))
        assert main(["bin", str(template), "--strategy", "eqf", "-b", "4", "--json"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["b_effective"] == 4
        assert sum(out["bin_counts"]) == 100
        assert out["cuts"][0] == 0 and out["cuts"][-1] == out["d_tau"]

    def test_zero_bins(self, vectors):
        template, _ = vectors
        assert main(["bin", str(template), "-b", "0"]) == 3

    @pytest.mark.parametrize("strategy", ["eqw", "eqf", "kmeans"])
    def test_more_bins_than_unique_values(self, vectors, strategy):
        template, _ = vectors
        assert main(["bin", str(template), "--strategy", strategy, "-b", "5"]) == 3

    def test_rule_token_clamped(self, vectors, capsys):
        template, _ = vectors
        assert main(["bin", str(template), "-b", "rice", "--json"]) == 0
        assert json.loads(capsys.readouterr().out)["b_requested"] == 3

    def test_greedy_needs_cross(self, vectors):
        template, _ = vectors
        assert main(["bin", str(template), "--strategy", "greedy", "-b", "2"]) == 2

    def test_greedy_with_cross(self, vectors, tmp_path, capsys):
        template, _ = vectors
        matrix = tmp_path / "cross.csv"
        matrix.write_text("5,5,0\n5,5,0\n0,0,1\n", encoding="utf-8")
        args = ["bin", str(template), "--strategy", "greedy", "-b", "2", "--cross", str(matrix), "--json"]
        assert main(args) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["cuts"] == [0, 2, 3]
        assert out["frobenius_objective"] == pytest.approx(11.0)

    def test_cross_dimension_checked(self, vectors, tmp_path):
        template, _ = vectors
        matrix = tmp_path / "cross.csv"
        matrix.write_text("1,0\n0,1\n", encoding="utf-8")
        assert main(["bin", str(template), "--strategy", "greedy", "--cross", str(matrix)]) == 2


class TestPredictCommand:
    def test_noise(self, capsys):
        assert main(["predict", "noise", "-d", "100", "-b", "5", "--json"]) == 0
        assert json.loads(capsys.readouterr().out)["value"] == pytest.approx(95 / 99)

    def test_corollary_matches_noise(self, capsys):
        assert main(["predict", "corollary", "-d", "100", "-b", "5", "--sigma2m", "2", "--sigma2", "0.5"]) == 0
        assert "0.959595959596" in capsys.readouterr().out

    def test_noise_needs_fewer_bins_than_dimension(self):
        assert main(["predict", "noise", "-d", "10", "-b", "10"]) == 3

    def test_spherical_on_full_rank_partition(self, vectors, capsys):
        template, _ = vectors
        args = ["predict", "spherical", str(template), "-b", "3", "--sigma2m", "1", "--sigma2", "1", "--json"]
        assert main(args) == 0
        assert json.loads(capsys.readouterr().out)["value"] == 0.0

    def test_spherical_needs_unique_template(self, tmp_path):
        template = write_vector(tmp_path / "t.txt", [1, 1, 2, 3])
        args = ["predict", "spherical", str(template), "-b", "2", "--sigma2m", "1", "--sigma2", "1"]
        assert main(args) == 2

    def test_distorted_with_estimated_cross(self, tmp_path, rng, capsys):
        template = write_vector(tmp_path / "t.txt", np.round(rng.random(60), 1))
        matrix = tmp_path / "cross.csv"
        assert main(["cross", str(template), "-o", str(matrix), "--samples", "200"]) == 0
        args = ["predict", "distorted", str(template), "--strategy", "greedy", "-b", "3",
                "--cross", str(matrix), "--sigma2", "0.1", "--json"]
        assert main(args) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["proposition"] == "distorted"
        assert 0.0 <= out["value"] <= 1.0


class TestCrossCommand:
    def test_writes_square_matrix(self, tmp_path):
        template = write_vector(tmp_path / "t.txt", [0.1, 0.5, 0.5, 0.9])
        output = tmp_path / "cross.csv"
        assert main(["cross", str(template), "-o", str(output), "--samples", "50", "--seed", "4"]) == 0
        matrix = read_matrix(output)
        assert matrix.shape == (3, 3)
        assert np.array_equal(matrix, matrix.T)

    def test_seeded(self, tmp_path):
        template = write_vector(tmp_path / "t.txt", [0.1, 0.5, 0.9])
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        main(["cross", str(template), "-o", str(first), "--seed", "9"])
        main(["cross", str(template), "-o", str(second), "--seed", "9"])
        assert first.read_bytes() == second.read_bytes()


class TestSimulateCommand:
    def test_writes_artifacts(self, tmp_path, capsys):
        out_dir = tmp_path / "run"
        assert main(SIM_ARGS + ["-o", str(out_dir)]) == 0
        for name in ("trials.csv", "aggregate.json", "manifest.json", "figure_series.csv"):
            assert (out_dir / name).exists()
        manifest = json.loads((out_dir / "manifest.json").read_text(encoding="utf-8"))
        assert manifest["master_seed"] == 3
        assert manifest["config"]["d_range"] == [20, 40]
        assert "AUC BY STRATEGY" in capsys.readouterr().out

    @pytest.mark.parametrize("threads", [2, 8])
    def test_threads_do_not_change_aggregate(self, tmp_path, threads):
        args = SIM_ARGS + ["--trials", "16"]
        assert main(args + ["-o", str(tmp_path / "one"), "--threads", "1"]) == 0
        assert main(args + ["-o", str(tmp_path / "many"), "--threads", str(threads)]) == 0
        for name in ("aggregate.json", "trials.csv", "figure_series.csv"):
            assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "many" / name).read_bytes()

    def test_output_dir_from_environment(self, tmp_path, monkeypatch):
        monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / "env"))
        assert main(SIM_ARGS) == 0
        assert (tmp_path / "env" / "aggregate.json").exists()

    def test_reproducible_timestamp(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
        assert main(SIM_ARGS + ["-o", str(tmp_path)]) == 0
        manifest = json.loads((tmp_path / "manifest.json").read_text(encoding="utf-8"))
        assert manifest["timestamp"].startswith("1970-01-01T00:00:00")

    def test_unknown_config_field(self, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"trials": 2, "colour": "red"}), encoding="utf-8")
        assert main(["simulate", "--config", str(config), "-o", str(tmp_path)]) == 2


class TestExperimentConfig:
    def test_regime_preset_and_flags(self):
        args = build_parser().parse_args(["simulate", "--regime", "spherical", "--trials", "9"])
        cfg = experiment_config(args)
        assert cfg.regime == "spherical"
        assert cfg.round_digits is None
        assert cfg.trials == 9

    def test_config_file_rounding_kept(self, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"regime": "spherical", "round_digits": 2}), encoding="utf-8")
        cfg = experiment_config(build_parser().parse_args(["simulate", "--config", str(config)]))
        assert cfg.round_digits == 2

    def test_no_rounding_flag(self):
        cfg = experiment_config(build_parser().parse_args(["simulate", "--no-rounding", "--d-max", "300"]))
        assert cfg.round_digits is None
        assert cfg.d_range == (100, 300)

    def test_eqf_convention_flag(self):
        default = experiment_config(build_parser().parse_args(["simulate"]))
        assert default.eqf_convention == "coordinates"
        cfg = experiment_config(build_parser().parse_args(["simulate", "--eqf-convention", "values"]))
        assert cfg.eqf_convention == "values"

    def test_general_regime_rounds_by_default(self):
        cfg = experiment_config(build_parser().parse_args(["simulate"]))
        assert cfg.round_digits == 3
