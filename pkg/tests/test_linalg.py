import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fcskit.errors import DimensionError, ParseError
from fcskit.linalg import (
    LowRankOperator,
    as_matrix,
    as_vector,
    dense_to_lowrank,
    determinant,
    load_matrix,
    dump_matrix,
    mat_mul,
    matrix_from_json,
    matrix_to_json,
)


def rng(seed=0):
    return np.random.Generator(np.random.PCG64(seed))


def test_as_matrix_accepts_lists_and_arrays():
    m = as_matrix([[1, 2], [3, 4]])
    assert m.dtype == np.complex128 and m.shape == (2, 2)


def test_as_matrix_rejects_bad_shapes():
    with pytest.raises(DimensionError):
        as_matrix([1, 2, 3])
    with pytest.raises(DimensionError):
        as_matrix([[1, 2, 3], [4, 5, 6]], square=True)


def test_as_vector_length_check():
    v = as_vector([1, 2j], length=2)
    assert v.shape == (2,)
    with pytest.raises(DimensionError):
        as_vector([1, 2], length=3)


def test_determinant_empty_matrix_is_one():
    assert determinant(np.zeros((0, 0))) == 1.0


def test_determinant_matches_numpy():
    a = rng(1).normal(size=(4, 4)) + 1j * rng(2).normal(size=(4, 4))
    assert determinant(a) == pytest.approx(np.linalg.det(a))


def test_mat_mul_shape_check():
    with pytest.raises(DimensionError):
        mat_mul(np.eye(2), np.eye(3))


def test_lowrank_operator_basics():
    u = np.array([[1.0, 2.0, 3.0]])
    v = np.array([[4.0, 5.0, 6.0]])
    op = LowRankOperator(3, u, v)
    assert op.rank == 1
    assert np.allclose(op.to_dense(), u.T @ v)
    z = LowRankOperator.zero(3)
    assert z.rank == 0 and np.all(z.to_dense() == 0)


def test_lowrank_operator_rejects_mismatched_width():
    with pytest.raises(DimensionError):
        LowRankOperator(3, np.ones((1, 4)), np.ones((1, 3)))


def test_dense_to_lowrank_recovers_rank_and_product():
    g = rng(3)
    for n, k in ((5, 1), (6, 2), (7, 3)):
        u = g.normal(size=(k, n)) + 1j * g.normal(size=(k, n))
        v = g.normal(size=(k, n)) + 1j * g.normal(size=(k, n))
        dense = u.T @ v
        op = dense_to_lowrank(dense)
        assert op.rank == k
        assert np.max(np.abs(op.to_dense() - dense)) < 1e-10


def test_dense_to_lowrank_zero_matrix():
    op = dense_to_lowrank(np.zeros((4, 4)))
    assert op.rank == 0


def test_matrix_json_round_trip():
    a = rng(4).normal(size=(3, 2)) + 1j * rng(5).normal(size=(3, 2))
    back = matrix_from_json(matrix_to_json(a))
    assert np.array_equal(back, a)


@settings(max_examples=50, deadline=None)
@given(
    rows=st.integers(0, 4),
    cols=st.integers(0, 4),
    seed=st.integers(0, 2**31),
)
def test_matrix_json_round_trip_property(rows, cols, seed):
    a = rng(seed).normal(size=(rows, cols))
    assert np.array_equal(matrix_from_json(matrix_to_json(a)), a)


@pytest.mark.parametrize(
    "text",
    [
        "not json",
        "[]",
        '{"rows": 2, "cols": 2, "data": [[1, 0]]}',
        '{"rows": 1, "cols": 1, "data": [[1]]}',
        '{"rows": -1, "cols": 1, "data": []}',
        '{"rows": 1, "cols": 1}',
        '{"rows": 1, "cols": 1, "data": [["a", 0]]}',
    ],
)
def test_matrix_json_rejects_malformed(text):
    with pytest.raises(ParseError):
        matrix_from_json(text)


def test_matrix_json_rejects_nonfinite():
    with pytest.raises(ParseError):
        matrix_from_json('{"rows": 1, "cols": 1, "data": [[1e999, 0]]}')


def test_matrix_file_round_trip(tmp_path):
    a = rng(6).normal(size=(2, 2)) + 1j * rng(7).normal(size=(2, 2))
    path = tmp_path / "m.json"
    dump_matrix(a, path)
    # the file is one JSON object with 17-significant-digit entries
    obj = json.loads(path.read_text())
    assert obj["rows"] == 2
    assert np.array_equal(load_matrix(path), a)


def test_load_matrix_missing_file(tmp_path):
    with pytest.raises(ParseError):
        load_matrix(tmp_path / "absent.json")
