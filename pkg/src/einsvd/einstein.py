"""Einstein-product algebra and the exact Einstein SVD.

A :class:`SplitTensor` of shape ``I_1 x ... x I_N x J_1 x ... x J_M`` with
``N`` row modes behaves like the ``prod(I) x prod(J)`` matrix obtained by
:func:`~einsvd.tensor.split_unfold`. The Einstein product ``A *_M B`` is
evaluated as unfold, matrix product, fold.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import NamedTuple, Sequence

import numpy as np

from .errors import CapacityError, PreconditionError, ShapeError
from .linalg import sign_convention
from .tensor import ModeSplit, as_tensor, split_fold, split_unfold

# dense oracle caps, in float64 entries
ORACLE_MAX_ENTRIES = 50_000_000
ORACLE_MAX_FACTOR_ENTRIES = 50_000_000


@dataclass(frozen=True, eq=False)
class SplitTensor:
    """Tensor paired with the number of leading row modes."""

    data: np.ndarray
    row_order: int

    def __post_init__(self):
        data = as_tensor(self.data)
        if not 0 <= self.row_order <= data.ndim:
            raise ShapeError(f"row order {self.row_order} invalid for order {data.ndim}")
        object.__setattr__(self, "data", data)

    @property
    def split(self) -> ModeSplit:
        return ModeSplit(self.row_order, self.data.ndim - self.row_order)

    @property
    def row_shape(self) -> tuple[int, ...]:
        return self.data.shape[: self.row_order]

    @property
    def col_shape(self) -> tuple[int, ...]:
        return self.data.shape[self.row_order:]

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def matrix(self) -> np.ndarray:
        return split_unfold(self.data, self.row_order)

    def norm(self) -> float:
        return float(np.linalg.norm(self.data.ravel(order="K")))


@dataclass
class SingularTriplet:
    """Singular value with its left (row-mode) and right (column-mode) tensors."""

    value: float
    left: np.ndarray
    right: np.ndarray
    residual_estimate: float = 0.0
    converged: bool = True


def _split(x, row_order=None) -> SplitTensor:
    if isinstance(x, SplitTensor):
        return x
    x = np.asarray(x)
    return SplitTensor(x, x.ndim if row_order is None else row_order)


def einstein_product(a: SplitTensor, b: SplitTensor) -> SplitTensor:
    """Contract the column modes of ``a`` with the row modes of ``b``."""
    a, b = _split(a), _split(b)
    if a.col_shape != b.row_shape:
        raise ShapeError(f"cannot contract column modes {a.col_shape} with row modes {b.row_shape}")
    out = split_fold(a.matrix @ b.matrix, a.row_shape, b.col_shape)
    return SplitTensor(out, a.row_order)


def einstein_loop(a: SplitTensor, b: SplitTensor) -> SplitTensor:
    """Direct summation over the contracted multi-index. Slow; kept as a reference."""
    a, b = _split(a), _split(b)
    if a.col_shape != b.row_shape:
        raise ShapeError(f"cannot contract column modes {a.col_shape} with row modes {b.row_shape}")
    out = np.zeros(a.row_shape + b.col_shape)
    for i in np.ndindex(*a.row_shape):
        for j in np.ndindex(*b.col_shape):
            acc = 0.0
            for k in np.ndindex(*a.col_shape):
                acc += a.data[i + k] * b.data[k + j]
            out[i + j] = acc
    return SplitTensor(out, a.row_order)


def apply(a: SplitTensor, x: np.ndarray) -> np.ndarray:
    """``A *_M X`` for ``X`` shaped ``col_shape`` plus optional trailing modes."""
    extra = x.shape[len(a.col_shape):]
    if x.shape[: len(a.col_shape)] != a.col_shape:
        raise ShapeError(f"operand {x.shape} does not start with {a.col_shape}")
    flat = a.matrix @ np.reshape(x, (a.matrix.shape[1], prod(extra)), order="F")
    return np.reshape(flat, a.row_shape + extra, order="F")


def apply_transpose(a: SplitTensor, y: np.ndarray) -> np.ndarray:
    """``A^T *_N Y`` for ``Y`` shaped ``row_shape`` plus optional trailing modes."""
    extra = y.shape[len(a.row_shape):]
    if y.shape[: len(a.row_shape)] != a.row_shape:
        raise ShapeError(f"operand {y.shape} does not start with {a.row_shape}")
    flat = a.matrix.T @ np.reshape(y, (a.matrix.shape[0], prod(extra)), order="F")
    return np.reshape(flat, a.col_shape + extra, order="F")


def transpose(a: SplitTensor) -> SplitTensor:
    n, m = a.split
    axes = tuple(range(n, n + m)) + tuple(range(n))
    return SplitTensor(np.transpose(a.data, axes), m)


def identity_tensor(dims: Sequence[int]) -> SplitTensor:
    dims = tuple(int(d) for d in dims)
    return SplitTensor(split_fold(np.eye(prod(dims)), dims, dims), len(dims))


def diagonal_tensor(values, row_shape: Sequence[int], col_shape: Sequence[int]) -> SplitTensor:
    """Diagonal tensor with ``values`` on the paired-mode diagonal.

    ``values`` has shape ``(min(I_1, J_1), ..., min(I_p, J_p))`` with
    ``p = min(N, M)``; unpaired indices of each nonzero entry are 1.
    """
    row_shape, col_shape = tuple(row_shape), tuple(col_shape)
    p = min(len(row_shape), len(col_shape))
    diag_shape = tuple(min(row_shape[k], col_shape[k]) for k in range(p))
    values = np.asarray(values, dtype=np.float64).reshape(diag_shape, order="F")
    out = np.zeros(row_shape + col_shape, order="F")
    for idx in np.ndindex(*diag_shape):
        i = idx + (0,) * (len(row_shape) - p)
        j = idx + (0,) * (len(col_shape) - p)
        out[i + j] = values[idx]
    return SplitTensor(out, len(row_shape))


class EinsteinSvd(NamedTuple):
    """Exact SVD ``A = U *_N S *_M V^T``.

    With ``full_matrices`` the factors have shapes ``I x I`` and ``J x J``;
    otherwise ``I x r`` and ``J x r`` with ``r = min(prod(I), prod(J))``.
    """

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray
    split: ModeSplit
    row_shape: tuple
    col_shape: tuple

    def left(self, i: int) -> np.ndarray:
        """``i``-th (1-based) left singular tensor."""
        return np.reshape(split_unfold(self.u, self.split.row_order)[:, i - 1], self.row_shape, order="F")

    def right(self, i: int) -> np.ndarray:
        return np.reshape(split_unfold(self.v, self.split.col_order)[:, i - 1], self.col_shape, order="F")

    def triplets(self, k: int | None = None) -> list[SingularTriplet]:
        k = len(self.s) if k is None else k
        return [SingularTriplet(float(self.s[i]), self.left(i + 1), self.right(i + 1)) for i in range(k)]

    def s_tensor(self) -> SplitTensor:
        """Diagonal core tensor: the fold of the rectangular ``diag(s)``.

        When ``I_k = J_k`` for the paired modes this places ``mu`` at
        ``(i_1..i_M) = (j_1..j_M)`` with trailing row indices equal to 1.
        """
        mat = np.zeros((prod(self.row_shape), prod(self.col_shape)))
        r = len(self.s)
        mat[np.arange(r), np.arange(r)] = self.s
        return SplitTensor(split_fold(mat, self.row_shape, self.col_shape), len(self.row_shape))

    def reconstruct(self) -> SplitTensor:
        umat = split_unfold(self.u, self.split.row_order)
        vmat = split_unfold(self.v, self.split.col_order)
        r = len(self.s)
        mat = (umat[:, :r] * self.s) @ vmat[:, :r].T
        return SplitTensor(split_fold(mat, self.row_shape, self.col_shape), len(self.row_shape))


def _check_capacity(a: SplitTensor, full_matrices: bool):
    rows, cols = a.matrix.shape
    if rows * cols > ORACLE_MAX_ENTRIES:
        raise CapacityError(f"unfolding {rows}x{cols} exceeds the oracle cap of {ORACLE_MAX_ENTRIES} entries")
    if full_matrices and rows * rows + cols * cols > ORACLE_MAX_FACTOR_ENTRIES:
        raise CapacityError(f"full factors for {rows}x{cols} exceed the oracle cap; use full_matrices=False")


def exact_einstein_svd(a: SplitTensor, full_matrices: bool = True) -> EinsteinSvd:
    """Exact Einstein SVD through the unfolding isomorphism (LAPACK ``gesdd``)."""
    a = _split(a)
    _check_capacity(a, full_matrices)
    umat, s, vt = np.linalg.svd(a.matrix, full_matrices=full_matrices)
    vmat = vt.T
    r = len(s)
    u_head, v_head = sign_convention(umat[:, :r], vmat[:, :r])
    umat = np.concatenate([u_head, umat[:, r:]], axis=1)
    vmat = np.concatenate([v_head, vmat[:, r:]], axis=1)
    I, J = a.row_shape, a.col_shape
    u_tail = I if full_matrices else (r,)
    v_tail = J if full_matrices else (r,)
    u = np.reshape(umat, I + u_tail, order="F")
    v = np.reshape(vmat, J + v_tail, order="F")
    return EinsteinSvd(np.asfortranarray(u), s, np.asfortranarray(v), a.split, I, J)


def exact_singular_values(a: SplitTensor) -> np.ndarray:
    a = _split(a)
    _check_capacity(a, False)
    return np.linalg.svd(a.matrix, compute_uv=False)


def truncated_reconstruct(triplets: Sequence[SingularTriplet], k: int | None = None,
                          like: SplitTensor | None = None) -> SplitTensor:
    """``sum_{i <= k} s_i U_i o V_i`` (outer product of left and right tensors).

    ``like`` supplies the shape when ``k = 0`` and no triplets are given.
    """
    k = len(triplets) if k is None else k
    if not 0 <= k <= len(triplets):
        raise PreconditionError(f"k={k} outside 0..{len(triplets)}")
    if triplets:
        row_shape, col_shape = triplets[0].left.shape, triplets[0].right.shape
    elif like is not None:
        row_shape, col_shape = like.row_shape, like.col_shape
    else:
        raise PreconditionError("no triplets and no reference shape")
    umat = np.zeros((prod(row_shape), k))
    vmat = np.zeros((prod(col_shape), k))
    s = np.zeros(k)
    for i, t in enumerate(triplets[:k]):
        umat[:, i] = t.left.ravel(order="F")
        vmat[:, i] = t.right.ravel(order="F")
        s[i] = t.value
    mat = (umat * s) @ vmat.T
    return SplitTensor(split_fold(mat, row_shape, col_shape), len(row_shape))
