"""
Vector and matrix file reading, and artifact writing for nuv-binning.

Input vectors are plain text with one number per line or single-column CSV
with an optional header. Matrices are header-less CSV. All CSV output uses
'.' decimals, LF line endings and shortest round-trip float text.
"""

import csv
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Union

import numpy as np

from .models import TrialRecord, AggregateResult, RunManifest
from .errors import VectorFileError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

CELL_FIELDS = [
    "strategy",
    "bin_spec",
    "b_requested",
    "b_effective",
    "d_noise",
    "d_distorted",
    "prediction_noise",
    "prediction_distorted",
    "recognized",
]

FIGURE_FIELDS = [
    "strategy",
    "bin_spec",
    "mean_b_effective",
    "auc",
    "mean_measured_noise",
    "std_measured_noise",
    "mean_predicted_noise",
    "std_predicted_noise",
    "mean_measured_distorted",
    "std_measured_distorted",
    "mean_predicted_distorted",
    "std_predicted_distorted",
]


def _format(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _read_rows(path: PathLike) -> List[List[str]]:
    try:
        with open(path, "r", encoding="utf-8", newline="") as f:
            return [row for row in csv.reader(f) if row and any(cell.strip() for cell in row)]
    except (OSError, UnicodeDecodeError) as e:
        raise VectorFileError(f"Cannot read {path}: {e}") from e


def _parse_float(text: str, path: PathLike, line: int) -> float:
    try:
        value = float(text.strip())
    except ValueError:
        raise VectorFileError(f"{path}:{line}: not a number: {text.strip()!r}") from None
    if not math.isfinite(value):
        raise VectorFileError(f"{path}:{line}: value must be finite")
    return value


def read_vector(path: PathLike) -> np.ndarray:
    """
    Load a vector file.

    A non-numeric first row is taken as a CSV header and skipped.

    Raises:
        VectorFileError: unreadable file, several columns, non-finite or
            non-numeric values, fewer than 2 entries
    """
    rows = _read_rows(path)
    if rows and len(rows[0]) == 1:
        try:
            float(rows[0][0].strip())
        except ValueError:
            rows = rows[1:]

    values = []
    for line, row in enumerate(rows, start=1):
        if len(row) != 1:
            raise VectorFileError(f"{path}:{line}: expected a single column, got {len(row)}")
        values.append(_parse_float(row[0], path, line))
    if len(values) < 2:
        raise VectorFileError(f"{path}: a vector needs at least 2 values, got {len(values)}")
    return np.array(values)


def read_matrix(path: PathLike) -> np.ndarray:
    """Load a square header-less CSV matrix"""
    rows = _read_rows(path)
    if not rows:
        raise VectorFileError(f"{path}: empty matrix file")
    size = len(rows)
    matrix = np.empty((size, size))
    for i, row in enumerate(rows):
        if len(row) != size:
            raise VectorFileError(f"{path}:{i + 1}: expected {size} columns, got {len(row)}")
        matrix[i] = [_parse_float(cell, path, i + 1) for cell in row]
    return matrix


def write_matrix(path: PathLike, matrix: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        for row in np.asarray(matrix, dtype=float):
            writer.writerow([_format(x) for x in row])


def write_trials_csv(path: PathLike, records: List[TrialRecord]) -> int:
    """
    One row per (trial, strategy, bin spec); failed trials get a single row
    with empty cell columns.

    Returns:
        Number of data rows written
    """
    header_fields = list(TrialRecord(trial_index=0).header())
    fieldnames = header_fields + CELL_FIELDS
    rows = 0
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for record in records:
            head = {k: _format(v) for k, v in record.header().items()}
            if not record.cells:
                writer.writerow({**head, **{k: "" for k in CELL_FIELDS}})
                rows += 1
                continue
            for cell in record.cells:
                data = cell.to_dict()
                writer.writerow({**head, **{k: _format(data[k]) for k in CELL_FIELDS}})
                rows += 1
    logger.debug("Wrote %d trial rows to %s", rows, path)
    return rows


def write_figure_series_csv(path: PathLike, result: AggregateResult) -> None:
    """Plot-ready per-cell AUC and mean/std of measured and predicted D"""
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=FIGURE_FIELDS, lineterminator="\n", extrasaction="ignore")
        writer.writeheader()
        for cell in result.cells:
            writer.writerow({k: _format(cell.get(k)) for k in FIGURE_FIELDS})


def write_json(path: PathLike, data: Union[Dict[str, Any], AggregateResult, RunManifest]) -> None:
    """Pretty JSON with a trailing newline; NaN and infinities are rejected"""
    if hasattr(data, "to_dict"):
        data = data.to_dict()
    text = json.dumps(data, indent=2, allow_nan=False)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text + "\n")
