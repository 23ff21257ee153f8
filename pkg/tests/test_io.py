import json

import numpy as np
import pytest

from slidekit.errors import ParseError, ValidationError
from slidekit.io import load_design, loads_json, parse_planning_csv, read_response, save_design


def test_round_trip_is_identical(welding, tmp_path):
    csv_path, json_path = save_design(welding, tmp_path / "weld.csv")
    assert csv_path.exists() and json_path.exists()
    again = load_design(csv_path)
    assert again == welding
    for name in welding.actual:
        assert again.actual_array(name).tobytes() == welding.actual_array(name).tobytes()


def test_save_is_byte_stable(welding, tmp_path):
    save_design(welding, tmp_path / "a")
    save_design(load_design(tmp_path / "a.csv"), tmp_path / "b")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    assert b"\r\n" not in (tmp_path / "a.csv").read_bytes()


def test_fixture_name_resolves(welding):
    assert load_design("welding") == welding


def test_truncated_planning_is_rejected(welding, tmp_path):
    csv_path, _ = save_design(welding, tmp_path / "weld")
    lines = csv_path.read_text().splitlines()
    csv_path.write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(ValidationError, match="18 runs.*17"):
        load_design(csv_path)


def test_duplicate_header_column():
    with pytest.raises(ParseError) as info:
        parse_planning_csv("A,B,A\n2,low,x\n", "p.csv")
    assert (info.value.line, info.value.column) == (1, 3)


def test_short_row_reports_line():
    with pytest.raises(ParseError) as info:
        parse_planning_csv("A,B\n2,low\n4\n")
    assert info.value.line == 3


def test_bad_json_reports_position():
    with pytest.raises(ParseError) as info:
        loads_json('{"runs": 18,\n  "factors": [}')
    assert info.value.line == 2


def test_read_response(tmp_path):
    p = tmp_path / "y.csv"
    p.write_text("run,y\n1,2.5\n2,-1\n")
    assert np.array_equal(read_response(p, "y"), [2.5, -1.0])
    with pytest.raises(ParseError):
        read_response(p, "z")
    p.write_text("y\n1\nabc\n")
    with pytest.raises(ParseError) as info:
        read_response(p)
    assert info.value.line == 3


def test_metadata_is_sorted_json(welding, tmp_path):
    _, json_path = save_design(welding, tmp_path / "w")
    text = json_path.read_text()
    assert json.loads(text)["runs"] == 18
    assert text.index('"factors"') < text.index('"runs"') < text.index('"sliding"')
