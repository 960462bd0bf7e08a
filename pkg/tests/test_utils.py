from pathlib import Path

import pandas as pd
import pytest

from specprep import exceptions
from specprep._commands import utils


def test_json_dumps_is_stable():
    text = utils.iohelper.json_dumps({"b": [1.5, 2], "a": "é"})
    assert text == '{\n  "b": [\n    1.5,\n    2\n  ],\n  "a": "é"\n}\n'


def test_load_json_reports_the_location(tmp_path: Path):
    path = tmp_path / "config.json"
    path.write_text('{\n  "a": 1,\n  "b": \n}')
    with pytest.raises(exceptions.ConfigError) as error:
        utils.iohelper.load_json(path)
    assert "line 4 column 1" in error.value.format_message()
    assert error.value.source == str(path)


def test_load_json_missing_file(tmp_path: Path):
    with pytest.raises(exceptions.ConfigError):
        utils.iohelper.load_json(tmp_path / "missing.json")


def test_reject_unknown_keys():
    utils.iohelper.reject_unknown_keys({"a": 1}, ("a", "b"))
    with pytest.raises(exceptions.ConfigError) as error:
        utils.iohelper.reject_unknown_keys({"a": 1, "z": 2, "y": 3}, ("a",), "grid")
    assert error.value.details == "Unknown key(s): y, z"


@pytest.mark.parametrize("path", ["", "   "])
def test_write_to_empty_path(path):
    with pytest.raises(exceptions.OutputError):
        utils.iohelper.write_text(path, "text")


def test_write_to_missing_directory(tmp_path: Path):
    with pytest.raises(exceptions.OutputError):
        utils.iohelper.write_json(tmp_path / "missing" / "report.json", {})


def test_write_frame_uses_unix_newlines(tmp_path: Path):
    path = utils.iohelper.write_frame(tmp_path / "frame.csv", pd.DataFrame({"x": [0.1, 1e-20]}))
    assert path.read_bytes() == b"x\n0.10000000000000001\n9.9999999999999995e-21\n"


def test_read_table_keeps_text(tmp_path: Path):
    path = tmp_path / "roster.csv"
    path.write_text("id,group,extra\n007,case,x\n")
    frame = utils.iohelper.read_table(path, required=("id", "group"), optional=("stratum",))
    assert list(frame.columns) == ["id", "group"]
    assert frame["id"][0] == "007"


def test_read_table_missing_columns(tmp_path: Path):
    path = tmp_path / "roster.csv"
    path.write_text("id\na\n")
    with pytest.raises(exceptions.ConfigError) as error:
        utils.iohelper.read_table(path, required=("id", "group"))
    assert "group" in error.value.details
