import numpy as np
import pytest

from gepgame.errors import DimensionMismatch
from gepgame.textio import (
    dumps_matrix,
    format_float,
    loads_matrix,
    read_matrix,
    read_paired_csv,
    write_matrix,
    write_paired_csv,
)


def test_format_float_round_trips():
    rng = np.random.default_rng(0)
    for x in rng.standard_normal(200) * 10.0 ** rng.integers(-30, 30, 200):
        assert float(format_float(x)) == x


def test_matrix_layout():
    assert dumps_matrix([[1.0, 0.5], [0.25, 2.0]]) == "2 2\n1 0.5\n0.25 2\n"


def test_matrix_file_round_trip_bitwise(tmp_path):
    m = np.random.default_rng(1).standard_normal((4, 3))
    path = tmp_path / "m.txt"
    write_matrix(path, m)
    assert read_matrix(path).tobytes() == m.tobytes()
    assert not list(tmp_path.glob(".*.tmp"))


@pytest.mark.parametrize("text", ["2 2\n1 2\n", "2 2\n1 2\n3\n"])
def test_matrix_shape_errors(text):
    with pytest.raises(DimensionMismatch):
        loads_matrix(text)


@pytest.mark.parametrize("text", ["", "2\n1\n"])
def test_matrix_header_errors(text):
    with pytest.raises(ValueError):
        loads_matrix(text)


def test_paired_csv_round_trip(tmp_path):
    rng = np.random.default_rng(2)
    X, Y = rng.standard_normal((10, 3)), rng.standard_normal((10, 2))
    path = tmp_path / "d.csv"
    write_paired_csv(path, X, Y)
    assert path.read_text().splitlines()[0] == "x0,x1,x2,y0,y1"
    X2, Y2 = read_paired_csv(path)
    assert X2.tobytes() == X.tobytes() and Y2.tobytes() == Y.tobytes()


def test_single_view_csv(tmp_path):
    X = np.arange(6.0).reshape(3, 2)
    path = tmp_path / "x.csv"
    write_paired_csv(path, X)
    X2, Y2 = read_paired_csv(path)
    assert Y2 is None and np.array_equal(X2, X)


def test_csv_explicit_split_and_errors(tmp_path):
    path = tmp_path / "d.csv"
    write_paired_csv(path, np.ones((2, 2)), np.zeros((2, 1)))
    X, Y = read_paired_csv(path, dx=1)
    assert X.shape == (2, 1) and Y.shape == (2, 2)
    with pytest.raises(DimensionMismatch):
        read_paired_csv(path, dx=4)
    with pytest.raises(DimensionMismatch):
        write_paired_csv(path, np.ones((2, 1)), np.ones((3, 1)))
