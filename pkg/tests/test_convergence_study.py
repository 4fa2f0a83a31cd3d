import csv
from pathlib import Path

import pytest

from scripts import convergence_study as cs
from src.hankel_spectra.reference import pipeline_lower_truncation


def _read_csv(path: Path):
    with path.open(encoding="utf-8", newline="") as handle:
        header, *rows = list(csv.reader(handle))
    return header, [[float(value) for value in row] for row in rows]


def test_convergence_study_writes_one_row_per_size(tmp_path: Path):
    out_csv = tmp_path / "study" / "convergence.csv"
    rc = cs.main(["--sizes", "20", "10", "20", "--out-csv", str(out_csv)])
    assert rc == 0

    header, rows = _read_csv(out_csv)
    assert header == list(cs.COLUMNS)
    assert [row[0] for row in rows] == [10.0, 20.0]
    for row in rows:
        assert 0.0 < row[1] <= 1.0
        assert 0.0 < row[2] <= 2.0
        assert 0.0 < row[3] < 1.0
        assert row[4] == pytest.approx(2.0 - pipeline_lower_truncation(int(row[0]), 2.0), rel=1e-9)


def test_convergence_study_rejects_invalid_sizes():
    with pytest.raises(ValueError):
        cs.convergence_study([])
    with pytest.raises(ValueError):
        cs.convergence_study([0, 10])
