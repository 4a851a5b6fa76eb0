"""Tensor Lanczos (Golub-Kahan) bidiagonalization under the Einstein product.

For ``A`` with row modes ``I`` and column modes ``J`` the process builds
orthonormal right tensors ``P_1..P_m`` (shape ``J``), left tensors
``Q_1..Q_m`` (shape ``I``) and an upper bidiagonal ``B_m`` with

    A *_M P_j   = sum_i B[i, j] Q_i
    A^T *_N Q_j = sum_i B[j, i] P_i + delta_{jm} R_m

Stacks are kept as ``prod(J) x m`` and ``prod(I) x m`` matrices whose columns
are first-index-fastest vectorizations; ``p_stack``/``q_stack`` expose them
as ``J x m`` / ``I x m`` tensors. Every new basis tensor is re-orthogonalized
twice against the whole stack (classical Gram-Schmidt, iterated once).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import Sequence

import numpy as np

from .einstein import SingularTriplet, SplitTensor, apply
from .errors import NumericalError, PreconditionError, ShapeError
from .linalg import SmallSvd, svd
from .rng import SplitMix64, randn

BREAKDOWN_RTOL = 1e-14
DEFAULT_EPS = 1e-8
# deflation directions come from an independent stream so the start tensor
# stream is untouched by breakdowns
DEFLATION_SEED_OFFSET = 0x5EED


@dataclass
class LanczosFactorization:
    p_basis: np.ndarray
    q_basis: np.ndarray
    b: np.ndarray
    residual: np.ndarray
    beta_m: float
    row_shape: tuple
    col_shape: tuple
    breakdown: str | None = None
    """``"beta"`` if an exact invariant subspace was found, ``"alpha"`` if
    ``A *_M P_{j+1}`` fell into the span of the left stack, else ``None``."""

    @property
    def m(self) -> int:
        return self.b.shape[0]

    @property
    def p_stack(self) -> np.ndarray:
        return np.reshape(self.p_basis, self.col_shape + (self.m,), order="F")

    @property
    def q_stack(self) -> np.ndarray:
        return np.reshape(self.q_basis, self.row_shape + (self.m,), order="F")

    @property
    def invariant(self) -> bool:
        return self.breakdown == "beta"


def breakdown_tol(a: SplitTensor) -> float:
    return BREAKDOWN_RTOL * a.norm()


def random_start(shape: Sequence[int], seed: int = 0) -> np.ndarray:
    """Unit-norm standard-normal tensor from the SplitMix64 stream ``seed``."""
    p = randn(shape, seed)
    return p / np.linalg.norm(p.ravel(order="F"))


def _orthogonalize(w, basis):
    if basis.shape[1] == 0:
        return w, np.zeros(0)
    c = basis.T @ w
    w = w - basis @ c
    c2 = basis.T @ w
    return w - basis @ c2, c + c2


def _fresh_direction(rng, basis):
    n = basis.shape[0]
    for _ in range(10):
        w, _ = _orthogonalize(rng.normal(n), basis)
        norm = np.linalg.norm(w)
        if norm > 1e-8:
            return w / norm
    raise NumericalError("could not draw a direction orthogonal to the current basis")


def _grow(amat, P, Q, B, r, j, m, tol, rng):
    """Advance a ``j``-column factorization with pending residual ``r`` to ``m`` columns.

    With ``rng=None`` a vanishing coefficient stops the process; otherwise
    the basis continues from a random orthogonal direction and the coupling
    coefficient is recorded as 0.
    """
    while j < m:
        beta = np.linalg.norm(r)
        if beta <= tol:
            if rng is None:
                return j, r, "beta"
            p, beta = _fresh_direction(rng, P[:, :j]), 0.0
        else:
            p = r / beta
        w = amat @ p - beta * Q[:, j - 1]
        w, _ = _orthogonalize(w, Q[:, :j])
        alpha = np.linalg.norm(w)
        if alpha <= tol:
            if rng is None:
                return j, r, "alpha"
            w, alpha = _fresh_direction(rng, Q[:, :j]), 0.0
        else:
            w = w / alpha
        P[:, j] = p
        Q[:, j] = w
        B[j - 1, j] = beta
        B[j, j] = alpha
        r = amat.T @ w - alpha * p
        r, _ = _orthogonalize(r, P[:, : j + 1])
        j += 1
    return j, r, None


def _max_steps(a: SplitTensor) -> int:
    return min(prod(a.row_shape), prod(a.col_shape))


def _package(a, P, Q, B, r, j, breakdown):
    return LanczosFactorization(
        p_basis=np.asfortranarray(P[:, :j]),
        q_basis=np.asfortranarray(Q[:, :j]),
        b=np.array(B[:j, :j]),
        residual=np.reshape(r, a.col_shape, order="F"),
        beta_m=float(np.linalg.norm(r)),
        row_shape=a.row_shape,
        col_shape=a.col_shape,
        breakdown=breakdown,
    )


def elb(a: SplitTensor, p1: np.ndarray, m: int) -> LanczosFactorization:
    """Run ``m`` steps of Einstein tensor Lanczos bidiagonalization.

    Parameters
    ----------
    a : SplitTensor
        Tensor ``I_1 x .. x I_N x J_1 x .. x J_M`` with ``N`` row modes.
    p1 : ndarray
        Unit-norm starting tensor of shape ``J``.
    m : int
        Number of steps, ``1 <= m <= min(prod(I), prod(J))``.

    Returns
    -------
    LanczosFactorization
        Truncated to ``j < m`` columns with ``breakdown`` set when a
        coefficient drops below ``1e-14 * ||A||_F``.
    """
    p1 = np.asarray(p1, dtype=np.float64)
    if p1.shape != a.col_shape:
        raise ShapeError(f"start tensor {p1.shape} must have shape {a.col_shape}")
    if abs(np.linalg.norm(p1.ravel(order="F")) - 1.0) > 1e-12:
        raise PreconditionError("start tensor must have unit Frobenius norm")
    if not 1 <= m <= _max_steps(a):
        raise PreconditionError(f"m={m} outside 1..{_max_steps(a)}")
    amat = a.matrix
    rows, cols = amat.shape
    tol = breakdown_tol(a)
    P = np.zeros((cols, m), order="F")
    Q = np.zeros((rows, m), order="F")
    B = np.zeros((m, m))
    p = p1.ravel(order="F")
    w = amat @ p
    alpha = np.linalg.norm(w)
    if not np.isfinite(alpha):
        raise NumericalError("non-finite value in the first Lanczos step")
    if alpha <= tol:
        raise PreconditionError("A *_M P_1 vanishes; choose another start tensor")
    P[:, 0], Q[:, 0], B[0, 0] = p, w / alpha, alpha
    r, _ = _orthogonalize(amat.T @ Q[:, 0] - alpha * p, P[:, :1])
    j, r, breakdown = _grow(amat, P, Q, B, r, 1, m, tol, None)
    if not np.all(np.isfinite(B)):
        raise NumericalError("non-finite Lanczos coefficients")
    return _package(a, P, Q, B, r, j, breakdown)


def extend(a: SplitTensor, f: LanczosFactorization, m: int, rng: SplitMix64) -> LanczosFactorization:
    """Continue any factorization (plain or Ritz-augmented) to exactly ``m`` columns.

    Vanishing coefficients are replaced by random orthogonal directions drawn
    from ``rng`` so the result always has ``m`` columns.
    """
    j = f.m
    if not j <= m <= _max_steps(a):
        raise PreconditionError(f"cannot extend {j} columns to m={m}")
    amat = a.matrix
    P = np.zeros((amat.shape[1], m), order="F")
    Q = np.zeros((amat.shape[0], m), order="F")
    B = np.zeros((m, m))
    P[:, :j], Q[:, :j], B[:j, :j] = f.p_basis, f.q_basis, f.b
    r = f.residual.ravel(order="F")
    j, r, _ = _grow(amat, P, Q, B, r, j, m, breakdown_tol(a), rng)
    return _package(a, P, Q, B, r, j, None)


def lift_triplets(f: LanczosFactorization, svd_b: SmallSvd, k: int, which: str = "largest",
                  tol: float | None = None) -> list[SingularTriplet]:
    """Map ``k`` singular triplets of ``B_m`` to approximate triplets of ``A``.

    ``V_i = P_m x_{M+1} v_i^T``, ``U_i = Q_m x_{N+1} u_i^T``; the residual
    estimate is ``beta_m |u_i(m)|``, the exact norm of ``A^T *_N U_i - s_i V_i``.
    ``which="smallest"`` takes the last ``k`` triplets. Triplets with an
    estimate ``<= tol`` are flagged converged.
    """
    m = f.m
    if not 0 <= k <= m:
        raise PreconditionError(f"k={k} outside 0..{m}")
    if which == "largest":
        idx = np.arange(k)
    elif which == "smallest":
        idx = np.arange(m - k, m)
    else:
        raise PreconditionError(f"unknown target {which!r}")
    vs = f.p_basis @ svd_b.v[:, idx]
    us = f.q_basis @ svd_b.u[:, idx]
    out = []
    for c, i in enumerate(idx):
        est = f.beta_m * abs(svd_b.u[m - 1, i])
        out.append(SingularTriplet(
            value=float(svd_b.s[i]),
            left=np.reshape(us[:, c], f.row_shape, order="F"),
            right=np.reshape(vs[:, c], f.col_shape, order="F"),
            residual_estimate=float(est),
            converged=tol is not None and est <= tol,
        ))
    return out


def convergence_tol(a: SplitTensor, eps: float) -> float:
    """Threshold on ``beta_m |u_i(m)|``: ``eps * max(1, ||A||_F)``."""
    return eps * max(1.0, a.norm())


def aelb(a: SplitTensor, m: int, k: int, p1: np.ndarray | None = None,
         eps: float = DEFAULT_EPS, seed: int = 0) -> list[SingularTriplet]:
    """Approximate the ``k`` largest triplets from one ``m``-step bidiagonalization.

    If the recurrence breaks down early the triplets found so far are exact;
    the factorization is then continued with random orthogonal directions
    (stream ``seed + DEFLATION_SEED_OFFSET``) so that ``m`` columns are
    always available.
    """
    if not 1 <= k <= m:
        raise PreconditionError(f"need 1 <= k <= m, got k={k}, m={m}")
    if p1 is None:
        p1 = random_start(a.col_shape, seed)
    f = elb(a, p1, m)
    if f.m < m:
        f = extend(a, f, m, SplitMix64(seed + DEFLATION_SEED_OFFSET))
    return lift_triplets(f, svd(f.b), k, tol=convergence_tol(a, eps))


def res_norm(a: SplitTensor, t: SingularTriplet) -> float:
    """``||A *_M V_i - s_i U_i||_F``."""
    return float(np.linalg.norm((apply(a, t.right) - t.value * t.left).ravel(order="F")))


def right_res_norm(a: SplitTensor, t: SingularTriplet) -> float:
    """``||A^T *_N U_i - s_i V_i||_F``."""
    r = a.matrix.T @ t.left.ravel(order="F") - t.value * t.right.ravel(order="F")
    return float(np.linalg.norm(r))


def gres_norm(a: SplitTensor, triplets: Sequence[SingularTriplet]) -> float:
    """``||A *_M V - U *_N S||_F`` over the stacked triplets."""
    if not triplets:
        return 0.0
    V = np.column_stack([t.right.ravel(order="F") for t in triplets])
    U = np.column_stack([t.left.ravel(order="F") for t in triplets])
    s = np.array([t.value for t in triplets])
    return float(np.linalg.norm(a.matrix @ V - U * s))
