import os

import pytest

from sgdplan import InputError
from sgdplan.fileio import (
    atomic_write_text,
    fmt,
    parse_bool,
    parse_float,
    parse_int,
    read_csv,
    read_json,
    write_csv,
    write_json,
)


def test_fmt_bool_int_float_str():
    assert fmt(True) == "true"
    assert fmt(False) == "false"
    assert fmt(42) == "42"
    assert fmt(0.1) == "0.1"
    assert fmt(1e-4) == "0.0001"
    assert fmt("weak-branch") == "weak-branch"


def test_fmt_float_round_trips():
    for value in (0.1, 1 / 3, 2.25, 1e-300, 123456.789):
        assert float(fmt(value)) == value


def test_fmt_rejects_embedded_delimiters():
    with pytest.raises(ValueError):
        fmt("a,b")


def test_atomic_write_leaves_no_temp_files(tmp_path):
    target = tmp_path / "out.txt"
    atomic_write_text(target, "hello\n")
    assert target.read_text() == "hello\n"
    assert os.listdir(tmp_path) == ["out.txt"]


def test_csv_round_trip_is_byte_identical(tmp_path):
    path = tmp_path / "t.csv"
    rows = [(1, 0.015, True), (2, 0.0132, False)]
    write_csv(path, ["a", "b", "c"], rows)
    first = path.read_bytes()
    write_csv(path, ["a", "b", "c"], rows)
    assert path.read_bytes() == first
    parsed = read_csv(path, ["a", "b", "c"])
    assert [cells for _, cells in parsed] == [
        ["1", "0.015", "true"],
        ["2", "0.0132", "false"],
    ]


def test_read_csv_reports_line_numbers(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1,2\n3\n")
    with pytest.raises(InputError, match=rf"{path}:3:"):
        read_csv(path, ["a", "b"])


def test_read_csv_rejects_wrong_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x,y\n1,2\n")
    with pytest.raises(InputError, match=rf"{path}:1:"):
        read_csv(path, ["a", "b"])


def test_read_csv_missing_file():
    with pytest.raises(InputError, match="nope.csv"):
        read_csv("nope.csv", ["a"])


def test_cell_parsers_report_position():
    assert parse_float("f", 3, "x", "1.5") == 1.5
    assert parse_int("f", 3, "x", "7") == 7
    assert parse_bool("f", 3, "x", "true") is True
    assert parse_bool("f", 3, "x", "0") is False
    for parser, text in ((parse_float, "abc"), (parse_int, "1.5"), (parse_bool, "yes")):
        with pytest.raises(InputError, match="f:3:"):
            parser("f", 3, "x", text)


def test_json_round_trip_sorted_and_stable(tmp_path):
    path = tmp_path / "p.json"
    write_json(path, {"b": 1, "a": [1.5, "x"]})
    first = path.read_bytes()
    write_json(path, {"a": [1.5, "x"], "b": 1})
    assert path.read_bytes() == first
    assert read_json(path) == {"a": [1.5, "x"], "b": 1}


def test_read_json_reports_parse_errors(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{broken")
    with pytest.raises(InputError, match=str(path)):
        read_json(path)
