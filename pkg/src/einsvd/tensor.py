"""Dense N-order tensors: linearization, unfoldings, n-mode products, ETEN I/O.

Tensors are plain ``numpy.ndarray`` objects of dtype float64. Every
linearization in this package is *first-index-fastest* (Fortran order), so a
tensor of shape ``(I_1, ..., I_N)`` stored F-contiguously has entry
``(i_1, ..., i_N)`` at flat offset ``sum_k (i_k - 1) * prod_{m<k} I_m``.
Public index and mode parameters are 1-based.
"""

from __future__ import annotations

import struct
from math import prod
from os import PathLike
from typing import NamedTuple, Sequence, Union

import numpy as np

from .errors import FormatError, ModeError, NumericalError, ShapeError

ETEN_MAGIC = b"ETEN"
ETEN_VERSION = 1


class ModeSplit(NamedTuple):
    """Partition of a tensor's modes into leading row modes and trailing column modes."""

    row_order: int
    col_order: int


SplitLike = Union[ModeSplit, int]


def as_tensor(data, shape: Sequence[int] | None = None) -> np.ndarray:
    """Validate and convert ``data`` to an F-contiguous float64 tensor.

    Rejects non-finite entries, zero extents and empty orders.
    """
    arr = np.asarray(data, dtype=np.float64)
    if shape is not None:
        shape = check_shape(shape)
        if arr.size != prod(shape):
            raise ShapeError(f"{arr.size} values cannot fill shape {shape}")
        arr = arr.reshape(shape, order="F")
    check_shape(arr.shape)
    if not np.all(np.isfinite(arr)):
        raise NumericalError("tensor contains NaN or Inf entries")
    return np.asfortranarray(arr)


def check_shape(dims: Sequence[int]) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if len(dims) == 0:
        raise ShapeError("tensor order must be at least 1")
    if any(d < 1 for d in dims):
        raise ShapeError(f"all extents must be >= 1, got {dims}")
    if prod(dims) > np.iinfo(np.intp).max:
        raise ShapeError(f"element count of {dims} overflows the index type")
    return dims


def _row_order(t: np.ndarray, split: SplitLike) -> int:
    if isinstance(split, ModeSplit):
        n = split.row_order
        if split.row_order + split.col_order != t.ndim:
            raise ShapeError(f"split {tuple(split)} does not match order {t.ndim}")
    else:
        n = int(split)
    if not 0 <= n <= t.ndim:
        raise ShapeError(f"row order {n} outside 0..{t.ndim}")
    return n


def _check_mode(t: np.ndarray, n: int) -> int:
    if not 1 <= n <= t.ndim:
        raise ModeError(f"mode {n} outside 1..{t.ndim}")
    return n - 1


def entry(t: np.ndarray, idx: Sequence[int]) -> float:
    """Entry at the 1-based multi-index ``idx``."""
    idx = tuple(int(i) for i in idx)
    if len(idx) != t.ndim:
        raise IndexError(f"index {idx} has wrong length for order {t.ndim}")
    for i, d in zip(idx, t.shape):
        if not 1 <= i <= d:
            raise IndexError(f"index {idx} out of bounds for shape {t.shape}")
    return float(t[tuple(i - 1 for i in idx)])


def matricize(t: np.ndarray, n: int) -> np.ndarray:
    """Mode-``n`` matricization (Kolda-Bader ordering of the column index).

    Element ``(i_1, ..., i_N)`` lands at row ``i_n`` and column
    ``1 + sum_{k != n} (i_k - 1) J_k`` with ``J_k = prod_{m < k, m != n} I_m``.
    """
    ax = _check_mode(t, n)
    return np.moveaxis(t, ax, 0).reshape((t.shape[ax], -1), order="F")


def fold(mat: np.ndarray, n: int, shape: Sequence[int]) -> np.ndarray:
    """Inverse of :func:`matricize`."""
    shape = check_shape(shape)
    if not 1 <= n <= len(shape):
        raise ModeError(f"mode {n} outside 1..{len(shape)}")
    ax = n - 1
    rest = shape[:ax] + shape[ax + 1:]
    if mat.shape != (shape[ax], prod(rest)):
        raise ShapeError(f"matrix {mat.shape} cannot fold to {shape} along mode {n}")
    full = np.reshape(mat, (shape[ax],) + rest, order="F")
    return np.asfortranarray(np.moveaxis(full, 0, ax))


def n_mode_product(t: np.ndarray, u: np.ndarray, n: int) -> np.ndarray:
    """``t x_n u``: multiply mode ``n`` of ``t`` by the matrix ``u`` (J x I_n)."""
    ax = _check_mode(t, n)
    u = np.asarray(u, dtype=np.float64)
    if u.ndim != 2 or u.shape[1] != t.shape[ax]:
        raise ShapeError(f"matrix {u.shape} does not act on mode {n} of extent {t.shape[ax]}")
    shape = t.shape[:ax] + (u.shape[0],) + t.shape[ax + 1:]
    return fold(u @ matricize(t, n), n, shape)


def split_unfold(t: np.ndarray, split: SplitLike) -> np.ndarray:
    """Matrix of shape ``(prod(row extents), prod(col extents))``.

    Zero-copy for F-contiguous input. ``split`` is a :class:`ModeSplit` or the
    number of leading row modes.
    """
    n = _row_order(t, split)
    rows = prod(t.shape[:n])
    return np.reshape(t, (rows, t.size // rows), order="F")


def split_fold(mat: np.ndarray, row_shape: Sequence[int], col_shape: Sequence[int]) -> np.ndarray:
    row_shape, col_shape = tuple(row_shape), tuple(col_shape)
    if mat.shape != (prod(row_shape), prod(col_shape)):
        raise ShapeError(f"matrix {mat.shape} cannot fold to {row_shape} x {col_shape}")
    return np.reshape(mat, row_shape + col_shape, order="F")


def inner(a: np.ndarray, b: np.ndarray) -> float:
    """Sum of elementwise products; equals ``tr(a^T * b)``."""
    if a.shape != b.shape:
        raise ShapeError(f"inner product of shapes {a.shape} and {b.shape}")
    return float(np.dot(a.ravel(order="F"), b.ravel(order="F")))


def frobenius_norm(t: np.ndarray) -> float:
    return float(np.linalg.norm(t.ravel(order="K")))


# stacks: K same-shape tensors joined along a trailing mode

def stack_push(stack: np.ndarray | None, t: np.ndarray) -> np.ndarray:
    """Append ``t`` as a new trailing slice of ``stack`` (``None`` starts a stack)."""
    t = np.asarray(t, dtype=np.float64)
    if stack is None:
        return np.asfortranarray(t[..., np.newaxis])
    if stack.shape[:-1] != t.shape:
        raise ShapeError(f"cannot push {t.shape} onto stack of {stack.shape[:-1]}")
    return np.asfortranarray(np.concatenate([stack, t[..., np.newaxis]], axis=-1))


def stack_slice(stack: np.ndarray, i: int) -> np.ndarray:
    """The ``i``-th (1-based) member of the stack."""
    if not 1 <= i <= stack.shape[-1]:
        raise IndexError(f"slice {i} outside 1..{stack.shape[-1]}")
    return stack[..., i - 1]


def stack_combine(stack: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    """``stack x_{d+1} coeffs``: slice ``j`` of the result is ``sum_i coeffs[j, i] * stack_i``.

    A 1-D ``coeffs`` gives the single combination ``sum_i coeffs[i] * stack_i``.
    """
    coeffs = np.asarray(coeffs, dtype=np.float64)
    squeeze = coeffs.ndim == 1
    c = coeffs[np.newaxis, :] if squeeze else coeffs
    if c.shape[1] != stack.shape[-1]:
        raise ShapeError(f"{c.shape[1]} coefficients for a stack of {stack.shape[-1]}")
    flat = split_unfold(stack, stack.ndim - 1) @ c.T
    out = np.reshape(flat, stack.shape[:-1] + (c.shape[0],), order="F")
    return out[..., 0] if squeeze else out


# ETEN binary format: b"ETEN", u8 version, u8 order, order x u64 LE extents,
# then prod(extents) x f64 LE values in first-index-fastest order.

def eten_bytes(t: np.ndarray) -> bytes:
    t = np.asarray(t, dtype=np.float64)
    if t.ndim > 255:
        raise ShapeError("ETEN supports at most 255 modes")
    head = ETEN_MAGIC + struct.pack("<BB", ETEN_VERSION, t.ndim)
    head += struct.pack(f"<{t.ndim}Q", *t.shape)
    return head + t.astype("<f8").tobytes(order="F")


def eten_from_bytes(buf: bytes) -> np.ndarray:
    if len(buf) < 6 or buf[:4] != ETEN_MAGIC:
        raise FormatError("not an ETEN file (bad magic)")
    version, order = buf[4], buf[5]
    if version != ETEN_VERSION:
        raise FormatError(f"unsupported ETEN version {version}")
    if order < 1:
        raise FormatError("ETEN order must be >= 1")
    hdr = 6 + 8 * order
    if len(buf) < hdr:
        raise FormatError("truncated ETEN header")
    dims = struct.unpack_from(f"<{order}Q", buf, 6)
    if any(d < 1 for d in dims):
        raise FormatError(f"ETEN extents must be >= 1, got {dims}")
    count = prod(dims)
    if len(buf) != hdr + 8 * count:
        raise FormatError(f"ETEN payload has {len(buf) - hdr} bytes, expected {8 * count}")
    data = np.frombuffer(buf, dtype="<f8", count=count, offset=hdr)
    return as_tensor(data.astype(np.float64), dims)


def write_eten(path: str | PathLike, t: np.ndarray) -> None:
    with open(path, "wb") as fh:
        fh.write(eten_bytes(t))


def read_eten(path: str | PathLike) -> np.ndarray:
    with open(path, "rb") as fh:
        return eten_from_bytes(fh.read())
