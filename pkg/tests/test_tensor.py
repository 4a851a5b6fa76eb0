import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from einsvd.errors import FormatError, ModeError, NumericalError, ShapeError
from einsvd.einstein import identity_tensor
from einsvd.rng import randn
from einsvd.tensor import (
    ModeSplit,
    as_tensor,
    entry,
    eten_bytes,
    eten_from_bytes,
    fold,
    frobenius_norm,
    inner,
    matricize,
    n_mode_product,
    read_eten,
    split_fold,
    split_unfold,
    stack_combine,
    stack_push,
    stack_slice,
    write_eten,
)

shapes = st.lists(st.integers(1, 4), min_size=1, max_size=5).map(tuple)


def _linear_index(idx, shape):
    # first-index-fastest, 1-based
    pos, stride = 0, 1
    for i, d in zip(idx, shape):
        pos += (i - 1) * stride
        stride *= d
    return pos


def _matricize_map(shape, n):
    """Brute-force Kolda index map: element idx -> (row, col), both 1-based."""
    out = {}
    for idx in itertools.product(*(range(1, d + 1) for d in shape)):
        col, stride = 1, 1
        for k, (i, d) in enumerate(zip(idx, shape), 1):
            if k == n:
                continue
            col += (i - 1) * stride
            stride *= d
        out[idx] = (idx[n - 1], col)
    return out


class TestEntry:
    def test_zero_tensor(self):
        assert entry(as_tensor(np.zeros((2, 2))), (1, 1)) == 0.0

    def test_identity(self):
        eye = as_tensor(np.eye(2))
        assert entry(eye, (1, 1)) == 1.0
        assert entry(eye, (1, 2)) == 0.0

    def test_first_index_fastest(self):
        t = as_tensor([1, 2, 3, 4, 5, 6], shape=(2, 3))
        assert entry(t, (2, 3)) == 6.0
        assert entry(t, (2, 1)) == 2.0

    def test_out_of_bounds(self):
        with pytest.raises(IndexError):
            entry(as_tensor(np.zeros((2, 2))), (3, 1))

    def test_rejects_nan_and_empty(self):
        with pytest.raises(NumericalError):
            as_tensor([np.nan, 1.0])
        with pytest.raises(ShapeError):
            as_tensor(np.zeros((2, 0)))


class TestMatricize:
    def test_matrix_mode_one_is_itself(self):
        m = randn((3, 5), 1)
        np.testing.assert_array_equal(matricize(m, 1), m)

    @pytest.mark.parametrize("shape,n,idx,expected", [
        ((2, 3, 4), 2, (2, 3, 4), (3, 8)),
        ((2, 2), 2, (1, 2), (2, 1)),
    ])
    def test_index_map_examples(self, shape, n, idx, expected):
        assert _matricize_map(shape, n)[idx] == expected
        t = np.zeros(shape)
        t[tuple(i - 1 for i in idx)] = 1.0
        rows, cols = np.nonzero(matricize(t, n))
        assert (rows[0] + 1, cols[0] + 1) == expected

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_full_enumeration(self, n):
        shape = (2, 3, 4)
        t = randn(shape, 2)
        mat = matricize(t, n)
        for idx, (r, c) in _matricize_map(shape, n).items():
            assert mat[r - 1, c - 1] == t[tuple(i - 1 for i in idx)]

    def test_bad_mode(self):
        with pytest.raises(ModeError):
            matricize(randn((2, 2), 0), 3)

    @given(shapes, st.data())
    @settings(max_examples=60)
    def test_fold_round_trip(self, shape, data):
        t = randn(shape, 5)
        n = data.draw(st.integers(1, len(shape)))
        np.testing.assert_array_equal(fold(matricize(t, n), n, shape), t)

    def test_fold_examples(self):
        t = fold(np.array([[5.0], [7.0]]), 1, (2, 1))
        assert entry(t, (1, 1)) == 5.0 and entry(t, (2, 1)) == 7.0
        np.testing.assert_array_equal(fold(matricize(np.eye(2), 1), 1, (2, 2)), np.eye(2))

    def test_fold_shape_mismatch(self):
        with pytest.raises(ShapeError):
            fold(np.zeros((2, 3)), 1, (2, 2))


class TestModeProduct:
    def test_identity(self):
        t = randn((3, 4, 2), 3)
        np.testing.assert_array_equal(n_mode_product(t, np.eye(4), 2), t)

    def test_against_einsum(self):
        t, u = randn((3, 4, 2), 3), randn((5, 4), 4)
        np.testing.assert_allclose(n_mode_product(t, u, 2), np.einsum("ajc,bj->abc", t, u), atol=1e-13)

    def test_different_modes_commute(self):
        t, u, v = randn((3, 3, 3), 1), randn((3, 3), 2), randn((3, 3), 3)
        lhs = n_mode_product(n_mode_product(t, u, 1), v, 2)
        rhs = n_mode_product(n_mode_product(t, v, 2), u, 1)
        assert np.max(np.abs(lhs - rhs)) <= 1e-13

    def test_same_mode_composes(self):
        t, u, v = randn((3, 4, 2), 1), randn((5, 4), 2), randn((2, 5), 3)
        lhs = n_mode_product(n_mode_product(t, u, 2), v, 2)
        assert np.max(np.abs(lhs - n_mode_product(t, v @ u, 2))) <= 1e-13

    def test_dimension_mismatch(self):
        with pytest.raises(ShapeError):
            n_mode_product(randn((3, 4), 0), np.eye(3), 2)


class TestSplitUnfold:
    def test_matrix(self):
        m = randn((3, 5), 0)
        np.testing.assert_array_equal(split_unfold(m, ModeSplit(1, 1)), m)

    def test_identity_tensor(self):
        np.testing.assert_array_equal(split_unfold(identity_tensor((2, 3)).data, 2), np.eye(6))

    def test_round_trip_bit_identical(self):
        t = randn((2, 3, 4, 5), 9)
        np.testing.assert_array_equal(split_fold(split_unfold(t, 2), (2, 3), (4, 5)), t)

    @given(shapes, st.data())
    @settings(max_examples=60)
    def test_entry_map(self, shape, data):
        if len(shape) < 2:
            shape = shape + (2,)
        n = data.draw(st.integers(1, len(shape) - 1))
        t = randn(shape, 4)
        mat = split_unfold(t, n)
        idx = tuple(data.draw(st.integers(1, d)) for d in shape)
        r = _linear_index(idx[:n], shape[:n])
        c = _linear_index(idx[n:], shape[n:])
        assert mat[r, c] == entry(t, idx)

    def test_inconsistent_split(self):
        with pytest.raises(ShapeError):
            split_unfold(randn((2, 3), 0), ModeSplit(1, 2))


class TestInnerNorm:
    def test_zero_and_identity(self):
        t = randn((2, 3), 0)
        assert inner(t, np.zeros((2, 3))) == 0.0
        assert inner(np.eye(2), np.eye(2)) == 2.0

    def test_flat_sum_oracle(self):
        a, b = randn((2, 3, 4), 1), randn((2, 3, 4), 2)
        flat = sum(x * y for x, y in zip(split_unfold(a, 1).ravel(), split_unfold(b, 1).ravel()))
        assert abs(inner(a, b) - flat) <= 1e-14 * max(1.0, abs(flat)) * 10

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            inner(np.zeros((2, 3)), np.zeros((3, 2)))

    def test_norms(self):
        assert frobenius_norm(np.zeros((3, 3))) == 0.0
        assert abs(frobenius_norm(identity_tensor((2, 3)).data) - np.sqrt(6)) <= 1e-15
        t = randn((3, 4, 5), 7)
        oracle = np.sqrt(sum(float(x) ** 2 for x in t.ravel()))
        assert abs(frobenius_norm(t) - oracle) <= 1e-14 * oracle


class TestStacks:
    def test_push_and_slice(self):
        p1, p2 = randn((2, 2), 1), randn((2, 2), 2)
        s = stack_push(None, p1)
        np.testing.assert_array_equal(stack_slice(s, 1), p1)
        s = stack_push(s, p2)
        assert s.shape == (2, 2, 2)
        np.testing.assert_array_equal(stack_slice(s, 2), p2)

    def test_push_shape_mismatch(self):
        with pytest.raises(ShapeError):
            stack_push(stack_push(None, np.zeros((2, 2))), np.zeros((2, 3)))

    def test_combine_matches_loop(self):
        stack = randn((3, 2, 4, 5), 3)
        c = randn((6, 5), 4)
        out = stack_combine(stack, c)
        for j in range(6):
            expect = sum(c[j, i] * stack[..., i] for i in range(5))
            assert np.max(np.abs(out[..., j] - expect)) <= 1e-13
        v = stack_combine(stack, c[0])
        assert np.max(np.abs(v - out[..., 0])) <= 1e-13


class TestEten:
    @given(shapes)
    @settings(max_examples=40)
    def test_round_trip(self, shape):
        t = randn(shape, 1)
        back = eten_from_bytes(eten_bytes(t))
        assert back.shape == t.shape
        np.testing.assert_array_equal(back, t)

    def test_layout(self):
        t = as_tensor([1, 2, 3, 4, 5, 6], shape=(2, 3))
        buf = eten_bytes(t)
        assert buf[:6] == b"ETEN\x01\x02"
        np.testing.assert_array_equal(np.frombuffer(buf[22:], "<f8"), [1, 2, 3, 4, 5, 6])

    def test_file_round_trip(self, tmp_path):
        t = randn((3, 2, 2), 2)
        write_eten(tmp_path / "t.eten", t)
        np.testing.assert_array_equal(read_eten(tmp_path / "t.eten"), t)

    @pytest.mark.parametrize("buf", [b"XXXX\x01\x01", b"ETEN\x02\x01" + bytes(16), b"ETEN\x01\x01" + bytes(8)])
    def test_malformed(self, buf):
        with pytest.raises(FormatError):
            eten_from_bytes(buf)
