"""
Tests pour les snapshots binaires.
"""

import json

import numpy as np
import pytest

from src.exceptions import FormatError
from src.numerics.grid import Field
from src.pipeline.snapshots import FORMAT_VERSION, read_snapshot, read_snapshot_header, write_snapshot


def raw_snapshot(path, header: dict, payload: bytes) -> None:
    path.write_bytes(json.dumps(header).encode("utf-8") + b"\n" + payload)


class TestSnapshotRoundTrip:
    """Écriture puis relecture."""

    @pytest.mark.parametrize("components", [1, 3, 9])
    def test_bit_exact(self, grid, rng, tmp_path, components):
        field = Field(grid, rng.standard_normal((components, *grid.shape)) * 1e3)
        path = write_snapshot(field, tmp_path / "snap.bin", name="v", time=0.25)
        restored = read_snapshot(path)
        assert restored.grid is grid
        assert restored.values.tobytes() == field.values.tobytes()

    def test_header(self, grid, tmp_path):
        path = write_snapshot(Field.zeros(grid, 3), tmp_path / "nested" / "v.bin", name="v", time=0.5)
        header = read_snapshot_header(path)
        assert (header.n1, header.n2, header.n3, header.components) == (8, 8, 9, 3)
        assert header.name == "v"
        assert header.time == 0.5
        assert header.format_version == FORMAT_VERSION
        assert header.payload_bytes == 8 * 3 * grid.size


class TestCorruptedSnapshots:
    """Fichiers corrompus : FormatError (code 4)."""

    def test_truncated_payload(self, grid, tmp_path):
        path = write_snapshot(Field.zeros(grid), tmp_path / "s.bin")
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(FormatError) as exc_info:
            read_snapshot(path)
        assert exc_info.value.exit_code == 4

    def test_missing_newline(self, tmp_path):
        path = tmp_path / "s.bin"
        path.write_bytes(b'{"n1": 8}')
        with pytest.raises(FormatError, match="fin de ligne"):
            read_snapshot_header(path)

    def test_unsupported_version(self, grid, tmp_path):
        path = tmp_path / "s.bin"
        header = {
            "format_version": FORMAT_VERSION + 1,
            "n1": 8, "n2": 8, "n3": 9, "components": 1,
            "time": 0.0, "name": "theta", "payload_bytes": 8 * grid.size,
        }
        raw_snapshot(path, header, bytes(8 * grid.size))
        with pytest.raises(FormatError, match="version"):
            read_snapshot(path)

    def test_inconsistent_payload_size(self, grid, tmp_path):
        path = tmp_path / "s.bin"
        header = {"n1": 8, "n2": 8, "n3": 9, "components": 3, "time": 0.0, "name": "v", "payload_bytes": 8}
        raw_snapshot(path, header, bytes(8))
        with pytest.raises(FormatError):
            read_snapshot(path)

    def test_invalid_grid(self, tmp_path):
        path = tmp_path / "s.bin"
        size = 8 * 8 * 8 * 4
        header = {"n1": 8, "n2": 8, "n3": 4, "components": 1, "time": 0.0, "name": "theta", "payload_bytes": size}
        raw_snapshot(path, header, bytes(size))
        with pytest.raises(FormatError, match="grille"):
            read_snapshot(path)

    def test_non_finite_payload(self, grid, tmp_path):
        path = tmp_path / "s.bin"
        values = np.zeros(grid.size)
        values[3] = np.inf
        header = {"n1": 8, "n2": 8, "n3": 9, "components": 1, "time": 0.0, "name": "theta", "payload_bytes": 8 * grid.size}
        raw_snapshot(path, header, values.astype("<f8").tobytes())
        with pytest.raises(FormatError):
            read_snapshot(path)
