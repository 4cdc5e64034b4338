"""
Tests for vector/matrix files and run artifacts
"""

import csv
import json

import numpy as np
import pytest

from nuv_binning.models import TrialRecord, CellResult, STATUS_FAILED
from nuv_binning.errors import VectorFileError
from nuv_binning.vector_io import (
    CELL_FIELDS,
    read_vector,
    read_matrix,
    write_matrix,
    write_trials_csv,
    write_json,
)


def write_text(path, text):
    path.write_text(text, encoding="utf-8")
    return path


class TestReadVector:
    def test_one_value_per_line(self, tmp_path):
        path = write_text(tmp_path / "t.txt", "2\n0\n5\n")
        assert read_vector(path).tolist() == [2.0, 0.0, 5.0]

    def test_csv_header_skipped(self, tmp_path):
        path = write_text(tmp_path / "t.csv", "intensity\n0.25\n0.75\n")
        assert read_vector(path).tolist() == [0.25, 0.75]

    def test_blank_lines_ignored(self, tmp_path):
        path = write_text(tmp_path / "t.txt", "1\n\n2\n\n")
        assert read_vector(path).tolist() == [1.0, 2.0]

    @pytest.mark.parametrize("text", [
        "1\nabc\n3\n",
        "1\nnan\n",
        "1\ninf\n",
        "1,2\n3,4\n",
        "7\n",
        "",
    ])
    def test_invalid_files(self, tmp_path, text):
        with pytest.raises(VectorFileError):
            read_vector(write_text(tmp_path / "bad.txt", text))

    def test_missing_file(self, tmp_path):
        with pytest.raises(VectorFileError):
            read_vector(tmp_path / "missing.txt")


class TestMatrices:
    def test_round_trip_is_exact(self, tmp_path, rng):
        matrix = rng.standard_normal((4, 4))
        write_matrix(tmp_path / "m.csv", matrix)
        assert np.array_equal(read_matrix(tmp_path / "m.csv"), matrix)

    def test_non_square_rejected(self, tmp_path):
        with pytest.raises(VectorFileError):
            read_matrix(write_text(tmp_path / "m.csv", "1,2\n3,4\n5,6\n"))

    def test_lf_line_endings(self, tmp_path):
        write_matrix(tmp_path / "m.csv", np.eye(2))
        assert (tmp_path / "m.csv").read_bytes() == b"1.0,0.0\n0.0,1.0\n"


class TestTrialsCsv:
    def test_rows_per_cell_and_failure(self, tmp_path):
        cell = CellResult("kmeans", "2", 2, 2, 0.9, 0.4, 0.95, 0.5)
        records = [
            TrialRecord(trial_index=0, d=10, d_tau=8, distribution="normal", gamma=1.0, sigma2=0.5,
                        model_hash="abcd", cells=[cell, CellResult("eqw", "2", 2, 1, 1.0, 1.0, 1.0, 1.0)]),
            TrialRecord(trial_index=1, status=STATUS_FAILED, error="window is constant"),
        ]
        assert write_trials_csv(tmp_path / "trials.csv", records) == 3
        with open(tmp_path / "trials.csv", newline="", encoding="utf-8") as f:
            rows = list(csv.DictReader(f))
        assert len(rows) == 3
        assert set(CELL_FIELDS) <= set(rows[0])
        assert rows[0]["recognized"] == "true"
        assert rows[1]["recognized"] == "false"
        assert rows[0]["d_noise"] == "0.9"
        assert rows[2]["status"] == "failed"
        assert rows[2]["strategy"] == ""
        assert rows[2]["sigma2_m"] == ""


class TestWriteJson:
    def test_trailing_newline(self, tmp_path):
        write_json(tmp_path / "a.json", {"auc": 0.75})
        text = (tmp_path / "a.json").read_text(encoding="utf-8")
        assert text.endswith("}\n")
        assert json.loads(text) == {"auc": 0.75}

    def test_nan_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            write_json(tmp_path / "a.json", {"auc": float("nan")})
