import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rydberg_bohm import __version__
from rydberg_bohm.io import SeriesError, read_series, sha256, write_columns, write_manifest, write_series


def test_round_trip_full_precision(tmp_path):
    x = np.array([0.1, 1 / 3, np.pi * 1e-300, -2.5e17])
    p = write_columns(tmp_path / "a.csv", {"x": x, "y": x**2}, {"scenario": "t", "n0": 40})
    meta, cols, data = read_series(p)
    assert cols == ["x", "y"]
    assert np.array_equal(data[:, 0], x)
    assert np.array_equal(data[:, 1], x**2)
    assert meta["code_version"] == __version__
    assert meta["n0"] == 40


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=1, max_size=30))
def test_round_trip_property(tmp_path_factory, values):
    p = tmp_path_factory.mktemp("rt") / "v.csv"
    write_columns(p, {"v": values})
    _, _, data = read_series(p)
    assert data[:, 0].tolist() == values


def test_header_only_file(tmp_path):
    p = write_series(tmp_path / "e.csv", ["a", "b"], [])
    meta, cols, data = read_series(p)
    assert cols == ["a", "b"] and data.shape == (0, 2)


def test_byte_identical(tmp_path):
    rows = [(1, 0.5), (2, 0.25)]
    a = write_series(tmp_path / "a.csv", ["i", "x"], rows, {"k": [1, 2]})
    b = write_series(tmp_path / "b.csv", ["i", "x"], rows, {"k": [1, 2]})
    assert a.read_bytes() == b.read_bytes()
    assert sha256(a) == sha256(b)
    assert b"time" not in a.read_bytes()


def test_rectangularity(tmp_path):
    with pytest.raises(SeriesError):
        write_series(tmp_path / "bad.csv", ["a", "b"], [(1, 2), (3,)])
    with pytest.raises(SeriesError):
        write_columns(tmp_path / "bad2.csv", {"a": [1, 2], "b": [1]})
    with pytest.raises(SeriesError):
        write_series(tmp_path / "bad3.csv", ["a,b"], [])


def test_unwritable_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(SeriesError):
        write_series(blocker / "sub" / "a.csv", ["a"], [(1,)])


def test_missing_file():
    with pytest.raises(SeriesError):
        read_series("/nonexistent/never.csv")


def test_manifest_is_sorted_json(tmp_path):
    p = write_manifest(tmp_path / "m.json", {"b": np.float64(1.5), "a": np.arange(3)})
    text = p.read_text()
    assert text.index('"a"') < text.index('"b"')
    assert "[\n    0," in text
