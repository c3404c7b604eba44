"""Tests for cropgan/tables.py - CSV export and import."""

import numpy as np
import pytest

from cropgan.tables import format_value, read_column, read_csv, write_csv
from shared.errors import FormatError


class TestFormatValue:
    """Tests for format_value()."""

    def test_float_round_trips(self):
        value = 0.1 + 0.2
        assert float(format_value(value)) == value

    def test_numpy_types(self):
        assert format_value(np.float64(0.5)) == "0.5"
        assert format_value(np.int64(7)) == "7"

    def test_strings_untouched(self):
        assert format_value("baseline") == "baseline"


class TestCsv:
    """Tests for write_csv()/read_csv()."""

    def test_exact_bytes(self, tmp_path):
        path = write_csv(tmp_path / "m.csv", ["name", "oa"], [["cropgan", 0.75], ["baseline", 1]])
        assert path.read_bytes() == b"name,oa\ncropgan,0.75\nbaseline,1\n"

    def test_read_back(self, tmp_path):
        path = write_csv(tmp_path / "h.csv", ["epoch", "loss"], [[0, 1.5], [1, 0.25]])
        rows = read_csv(path, ["epoch", "loss"])
        assert rows == [{"epoch": "0", "loss": "1.5"}, {"epoch": "1", "loss": "0.25"}]

    def test_creates_parent_dirs(self, tmp_path):
        path = write_csv(tmp_path / "a" / "b.csv", ["x"], [])
        assert path.read_text() == "x\n"

    def test_header_mismatch(self, tmp_path):
        path = write_csv(tmp_path / "p.csv", ["row", "col"], [[1, 2]])
        with pytest.raises(FormatError, match="expected header"):
            read_csv(path, ["row", "col", "label"])

    def test_required_column_missing(self, tmp_path):
        path = write_csv(tmp_path / "p.csv", ["row", "col"], [[1, 2]])
        with pytest.raises(FormatError, match="missing column 'label'"):
            read_csv(path, required=("label",))

    def test_not_utf8(self, tmp_path):
        path = tmp_path / "bin.csv"
        path.write_bytes(b"label\n\xff\xfe\n")
        with pytest.raises(FormatError, match="UTF-8"):
            read_csv(path)


class TestReadColumn:
    """Tests for read_column()."""

    def test_converts(self, tmp_path):
        path = write_csv(tmp_path / "p.csv", ["row", "label"], [[0, 1], [1, 0]])
        assert read_column(path, "label") == [1, 0]
        assert read_column(path, "row", float) == [0.0, 1.0]

    def test_bad_cell_names_line(self, tmp_path):
        path = write_csv(tmp_path / "p.csv", ["label"], [[1], ["corn"]])
        with pytest.raises(FormatError, match="line 3"):
            read_column(path, "label")
