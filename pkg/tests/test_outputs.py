"""
Tests pour l'écriture des CSV et des rapports.
"""

import csv
import json

import pytest

from src.models import ContractionRow, IterationRecord, IterationReport, VerifyReport
from src.pipeline.outputs import (
    CONTRACTION_COLUMNS,
    ENERGY_COLUMNS,
    format_value,
    write_contraction_csv,
    write_energy_csv,
    write_iteration_csv,
    write_report,
)


def read_rows(path) -> list[list[str]]:
    with path.open(newline="", encoding="utf-8") as handle:
        return list(csv.reader(handle))


class TestFormatValue:
    """Formatage des cellules."""

    @pytest.mark.parametrize(
        "value, expected",
        [
            (None, ""),
            (True, "true"),
            (3, "3"),
            (0.1, "0.10000000000000001"),
            (float("nan"), "nan"),
            ("cn", "cn"),
        ],
    )
    def test_cases(self, value, expected):
        assert format_value(value) == expected

    def test_round_trip_is_exact(self):
        for value in (1 / 3, 2.0**-40, 123456.789e10):
            assert float(format_value(value)) == value


class TestCsvWriters:
    """Fichiers CSV des commandes."""

    def test_energy_header_and_rows(self, tmp_path):
        path = write_energy_csv(tmp_path / "energy.csv", [{"step": 0, "time": 0.0, "E_total": 1.5}])
        rows = read_rows(path)
        assert rows[0] == ENERGY_COLUMNS
        assert rows[1][:3] == ["0", "0", "1.5"]
        assert rows[1][3] == ""

    def test_iteration_ratio_blank_on_first_row(self, tmp_path):
        report = IterationReport(
            records=[IterationRecord(iteration=1, distance=0.5), IterationRecord(iteration=2, distance=0.25, ratio=0.5)]
        )
        rows = read_rows(write_iteration_csv(tmp_path / "it.csv", report))
        assert rows == [["iter", "vt_distance", "ratio"], ["1", "0.5", ""], ["2", "0.25", "0.5"]]

    def test_contraction_rows(self, tmp_path):
        rows = read_rows(
            write_contraction_csv(
                tmp_path / "c.csv", [ContractionRow(T=0.01, ratio=0.125), ContractionRow(T=0.1, ratio=None, skipped=True)]
            )
        )
        assert rows[0] == CONTRACTION_COLUMNS
        assert rows[1] == ["0.01", "0.125"]
        assert rows[2] == ["0.10000000000000001", ""]


class TestReport:
    def test_json_report(self, tmp_path):
        path = write_report(tmp_path / "out" / "report.json", VerifyReport())
        assert json.loads(path.read_text(encoding="utf-8")) == {"checks": []}
