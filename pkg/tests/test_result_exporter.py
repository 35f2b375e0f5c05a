"""
Tests for CSV/JSON result export.
"""

import numpy as np
import pytest

from fockloop_core import ExportError
from src.models.result_models import Peak
from src.utils.result_exporter import (
    config_label,
    export_results,
    read_csv,
    read_json,
    read_jsonl,
    render_csv,
    render_json,
    write_jsonl,
)


class TestRendering:
    """Tests for text rendering."""

    def test_config_label(self):
        """Test occupation tuples render without spaces."""
        assert config_label((2, 0, 1)) == "(2,0,1)"

    def test_csv_header_and_cells(self):
        """Test floats use repr and booleans are lowercase."""
        text = render_csv([{"a": 0.1, "b": True, "c": "(1,0)"}])
        assert text == 'a,b,c\n0.1,true,"(1,0)"\n'

    def test_csv_column_order(self):
        """Test explicit columns fix the order and fill gaps."""
        text = render_csv([{"b": 1, "a": 2}], columns=["a", "b", "z"])
        assert text.splitlines() == ["a,b,z", "2,1,"]

    def test_empty_table(self):
        """Test an empty table needs explicit columns."""
        assert render_csv([], columns=["x"]) == "x\n"
        with pytest.raises(ExportError):
            render_csv([])

    def test_json_of_models_and_arrays(self):
        """Test pydantic models and numpy arrays serialize."""
        text = render_json({"peak": Peak(position=0.0, height=1.0, variance=0.1), "xs": np.array([1.0, 2.0])})
        assert '"variance": 0.1' in text
        assert text.endswith("\n")

    def test_rendering_is_byte_stable(self):
        """Test identical input renders identical bytes."""
        rows = [{"x": 1 / 3, "y": 2}]
        assert render_csv(rows) == render_csv([dict(r) for r in rows])
        assert render_json({"k": 1 / 7}) == render_json({"k": 1 / 7})


class TestFiles:
    """Tests for writing and reading result files."""

    def test_csv_roundtrip_types(self, tmp_path):
        """Test CSV cells come back as int, float, bool or str."""
        path = export_results([{"n": 3, "p": 0.25, "ok": False, "config": "(1,1)"}], tmp_path / "t.csv")
        assert read_csv(path) == [{"n": 3, "p": 0.25, "ok": False, "config": "(1,1)"}]

    def test_float_precision_kept(self, tmp_path):
        """Test repr floats survive the CSV round trip exactly."""
        value = 0.1 + 0.2
        path = export_results([{"v": value}], tmp_path / "v.csv")
        assert read_csv(path)[0]["v"] == value

    def test_json_creates_parents(self, tmp_path):
        """Test missing parent directories are created."""
        path = export_results({"a": [1, 2]}, tmp_path / "deep" / "dir" / "m.json")
        assert read_json(path) == {"a": [1, 2]}

    def test_jsonl(self, tmp_path):
        """Test JSON-lines write one record per line."""
        path = write_jsonl([{"i": 0}, Peak(position=1.0, height=2.0, variance=0.5)], tmp_path / "r.jsonl")
        records = read_jsonl(path)
        assert records[0] == {"i": 0}
        assert records[1]["position"] == 1.0

    def test_format_errors(self, tmp_path):
        """Test unsupported formats and dict-to-CSV are refused."""
        with pytest.raises(ExportError):
            export_results({"a": 1}, tmp_path / "m.txt")
        with pytest.raises(ExportError):
            export_results({"a": 1}, tmp_path / "m.csv")

    def test_explicit_format(self, tmp_path):
        """Test fmt overrides the suffix."""
        path = export_results({"a": 1}, tmp_path / "out.dat", fmt="json")
        assert read_json(path) == {"a": 1}

    def test_read_missing_file(self, tmp_path):
        """Test reading a missing file raises ExportError."""
        with pytest.raises(ExportError):
            read_json(tmp_path / "missing.json")
        with pytest.raises(ExportError):
            read_csv(tmp_path / "missing.csv")

    def test_write_failure(self, tmp_path):
        """Test writing below a regular file raises ExportError."""
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(ExportError):
            export_results({"a": 1}, blocker / "m.json")
