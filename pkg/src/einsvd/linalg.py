"""Small dense matrix kernels: checked matmul and a one-sided Jacobi SVD.

Used for the projected ``m x m`` problem of the Lanczos solvers. The exact
oracle in :mod:`einsvd.einstein` deliberately uses LAPACK instead, so the two
routes stay independent.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import NumericalError, ShapeError

EPS = np.finfo(np.float64).eps
MAX_SWEEPS = 60


class SmallSvd(NamedTuple):
    """Thin SVD ``a = u @ diag(s) @ v.T`` with ``s`` descending."""

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def _round_robin(n):
    """Pairings for a cyclic sweep: ``n - 1`` rounds of disjoint column pairs.

    Circle method on an even number of slots; slot ``n`` is a bye when ``n`` is odd.
    """
    slots = n + (n % 2)
    order = list(range(slots))
    rounds = []
    for _ in range(slots - 1):
        half = slots // 2
        pairs = [(order[i], order[slots - 1 - i]) for i in range(half)]
        pairs = [(min(p, q), max(p, q)) for p, q in pairs if p < n and q < n]
        rounds.append((np.array([p for p, _ in pairs], dtype=np.intp),
                       np.array([q for _, q in pairs], dtype=np.intp)))
        order = [order[0], order[-1]] + order[1:-1]
    return rounds


def sign_convention(u: np.ndarray, v: np.ndarray, rel: float = 1e-10):
    """Flip column pairs so the first significant entry of each ``u`` column is >= 0.

    "Significant" means magnitude above ``rel`` times the column's largest
    magnitude, which keeps the choice stable under roundoff.
    """
    u, v = u.copy(), v.copy()
    for j in range(u.shape[1]):
        col = u[:, j]
        big = np.abs(col)
        nz = np.flatnonzero(big > rel * big.max()) if big.max() > 0 else []
        if len(nz) and col[nz[0]] < 0:
            u[:, j] = -col
            v[:, j] = -v[:, j]
    return u, v


def _complete_columns(u, missing):
    # replace columns in `missing` by an orthonormal completion built from e_1, e_2, ...
    keep = [j for j in range(u.shape[1]) if j not in set(missing)]
    basis = [u[:, j] for j in keep]
    rows = u.shape[0]
    cursor = 0
    for j in missing:
        while True:
            e = np.zeros(rows)
            e[cursor] = 1.0
            cursor += 1
            for _ in range(2):
                for b in basis:
                    e -= (b @ e) * b
            norm = np.linalg.norm(e)
            if norm > 0.5:
                break
        u[:, j] = e / norm
        basis.append(u[:, j])
    return u


def _jacobi(a, tol, max_sweeps, floor=0.0):
    """Rotate column pairs until all are numerically orthogonal.

    Columns whose squared norm is at most ``floor`` are roundoff-level and
    are left alone; rotating them only shuffles noise and may never settle.
    """
    rows, cols = a.shape
    w = np.array(a, dtype=np.float64, order="F")
    v = np.eye(cols, order="F")
    rounds = _round_robin(cols)
    for sweep in range(max_sweeps):
        rotated = False
        for p, q in rounds:
            if len(p) == 0:
                continue
            wp, wq = w[:, p], w[:, q]
            alpha = np.einsum("ij,ij->j", wp, wp)
            beta = np.einsum("ij,ij->j", wq, wq)
            gamma = np.einsum("ij,ij->j", wp, wq)
            act = (np.abs(gamma) > tol * np.sqrt(alpha * beta)) & (alpha > floor) & (beta > floor)
            if not act.any():
                continue
            rotated = True
            p, q = p[act], q[act]
            alpha, beta, gamma = alpha[act], beta[act], gamma[act]
            zeta = (beta - alpha) / (2.0 * gamma)
            t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.hypot(1.0, zeta))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            wp, wq = w[:, p], w[:, q]
            w[:, p] = c * wp - s * wq
            w[:, q] = s * wp + c * wq
            vp, vq = v[:, p], v[:, q]
            v[:, p] = c * vp - s * vq
            v[:, q] = s * vp + c * vq
        if not rotated:
            return w, v, sweep + 1
    raise NumericalError(
        f"Jacobi SVD of a {rows}x{cols} matrix did not converge in {max_sweeps} sweeps"
    )


def svd(a: np.ndarray, tol: float | None = None, max_sweeps: int = MAX_SWEEPS) -> SmallSvd:
    """Thin SVD by one-sided (Hestenes) Jacobi with parallel round-robin sweeps.

    Parameters
    ----------
    a : ndarray
        Finite 2-D array.
    tol : float, optional
        A column pair is rotated while ``|<a_p, a_q>| > tol * ||a_p|| ||a_q||``.
        Defaults to ``max(1e-15, rows * eps)``. Columns with norm at most
        ``eps * ||a||_F`` are treated as zero: they are not rotated, their
        singular values are reported as 0 and their left vectors are
        completed to an orthonormal set.
    max_sweeps : int
        Sweep cap; exceeding it raises :class:`NumericalError`.

    Returns
    -------
    SmallSvd
        ``s`` sorted descending (stable), ``u`` and ``v`` with orthonormal
        columns, and the sign convention of :func:`sign_convention`.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or 0 in a.shape:
        raise ShapeError(f"svd needs a non-empty 2-D array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NumericalError("svd input contains NaN or Inf")
    if a.shape[0] < a.shape[1]:
        t = svd(a.T, tol, max_sweeps)
        u, v = sign_convention(t.v, t.u)
        return SmallSvd(u, t.s, v)
    rows = a.shape[0]
    if tol is None:
        tol = max(1e-15, rows * EPS)
    negligible = EPS * np.linalg.norm(a)
    w, v, _ = _jacobi(a, tol, max_sweeps, floor=negligible**2)
    s = np.sqrt(np.einsum("ij,ij->j", w, w))
    order = np.argsort(-s, kind="stable")
    s, w, v = s[order], w[:, order], v[:, order]
    cut = max(negligible, np.finfo(np.float64).tiny)
    zero = [j for j in range(len(s)) if s[j] <= cut]
    u = np.zeros_like(w)
    pos = s > cut
    u[:, pos] = w[:, pos] / s[pos]
    s[~pos] = 0.0
    if zero:
        u = _complete_columns(u, zero)
    u, v = sign_convention(u, v)
    return SmallSvd(u, s, v)
