import io
import math
from enum import Enum

import pytest

from beam_modes.errors import DomainError
from beam_modes.export import format_value, parse_optional_float, rows_to_text, write_rows
from beam_modes.pool import chunked, ordered_map, resolve_jobs


class Colour(str, Enum):
    red = "red"


class TestPool:
    def test_explicit_jobs_win(self, monkeypatch):
        monkeypatch.setenv("BEAM_MODES_MAX_PARALLEL_JOBS", "3")
        assert resolve_jobs(5) == 5
        assert resolve_jobs() == 3

    def test_rejects_zero_jobs(self):
        with pytest.raises(DomainError):
            resolve_jobs(0)

    @pytest.mark.parametrize("jobs", [1, 2])
    def test_ordered_map_keeps_order(self, jobs):
        values = [float(i) for i in range(17)]
        assert ordered_map(math.sqrt, values, jobs) == [math.sqrt(v) for v in values]

    def test_ordered_map_of_nothing(self):
        assert ordered_map(math.sqrt, [], 4) == []

    def test_chunked(self):
        pieces = chunked(list(range(10)), 3)
        assert [list(piece) for piece in pieces] == [[0, 1, 2, 3], [4, 5, 6], [7, 8, 9]]
        assert chunked([1, 2], 8) == [[1], [2]]


class TestExport:
    def test_format_value(self):
        assert format_value(None) == ""
        assert format_value(0.1) == "0.1"
        assert format_value(1e-300) == "1e-300"
        assert format_value(True) == "true"
        assert format_value(Colour.red) == "red"
        assert format_value(7) == "7"

    def test_parse_optional_float(self):
        assert parse_optional_float("") is None
        assert parse_optional_float("2.5") == 2.5

    def test_rows_to_text(self):
        assert rows_to_text(("a", "b"), [(1, None), (0.5, Colour.red)]) == "a,b\n1,\n0.5,red\n"

    def test_write_rows_to_path(self, tmp_path):
        path = tmp_path / "rows.csv"
        write_rows(("x",), [(1.25,)], path)
        assert path.read_text(encoding="utf-8") == "x\n1.25\n"

    def test_write_rows_to_stream(self):
        buffer = io.StringIO()
        write_rows(("x", "y"), [], buffer)
        assert buffer.getvalue() == "x,y\n"
