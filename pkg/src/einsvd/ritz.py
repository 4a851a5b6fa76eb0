"""Restarted bidiagonalization with Ritz augmentation (LBR).

Each cycle keeps the ``k`` wanted Ritz tensors ``V_1..V_k`` and the residual
direction ``P_{m+1}``, rebuilds a ``(k+1)``-column factorization whose
projected matrix is ``diag(s_1..s_k)`` with a spike column ``rho_i =
beta_m u_i(m)`` and corner ``alpha_{k+1}``, and extends it back to ``m``
columns with ordinary Lanczos steps. The extended projected matrix is
upper triangular: diagonal, the spike in column ``k+1`` and a superdiagonal
from there on.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from math import prod

import numpy as np

from .einstein import SingularTriplet, SplitTensor, transpose
from .errors import PreconditionError
from .lanczos import (
    DEFLATION_SEED_OFFSET,
    LanczosFactorization,
    _fresh_direction,
    _max_steps,
    _orthogonalize,
    breakdown_tol,
    convergence_tol,
    elb,
    extend,
    gres_norm,
    lift_triplets,
    random_start,
)
from .linalg import svd
from .rng import SplitMix64

TARGETS = ("largest", "smallest")


@dataclass
class RestartConfig:
    m: int
    k: int
    epsilon: float = 1e-8
    max_restarts: int = 1000
    target: str = "largest"
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.k < self.m:
            raise PreconditionError(f"need 1 <= k < m, got k={self.k}, m={self.m}")
        if not self.epsilon > 0:
            raise PreconditionError("epsilon must be positive")
        if self.max_restarts < 1:
            raise PreconditionError("max_restarts must be >= 1")
        if self.target not in TARGETS:
            raise PreconditionError(f"target must be one of {TARGETS}")


@dataclass
class RestartReport:
    iterations: int
    converged: bool
    residual_estimates: list[float]
    gres_norm: float
    wall_time: float
    history: list[list[float]] = field(default_factory=list)
    """Residual estimates of the tracked triplets, one row per cycle."""
    value_history: list[list[float]] = field(default_factory=list)


def build_augmented(a: SplitTensor, f: LanczosFactorization, triplets: list[SingularTriplet],
                    rng: SplitMix64 | None = None) -> LanczosFactorization | None:
    """Ritz-augmented ``(k+1)``-column factorization.

    Returns ``None`` when ``beta_m`` vanishes: the lifted triplets are then
    exact and there is nothing to restart with.
    """
    tol = breakdown_tol(a)
    if f.beta_m <= tol:
        return None
    k = len(triplets)
    amat = a.matrix
    V = np.column_stack([t.right.ravel(order="F") for t in triplets]) if k else np.zeros((amat.shape[1], 0))
    U = np.column_stack([t.left.ravel(order="F") for t in triplets]) if k else np.zeros((amat.shape[0], 0))
    p_next = f.residual.ravel(order="F") / f.beta_m

    w, rho = _orthogonalize(amat @ p_next, U)
    alpha = np.linalg.norm(w)
    if alpha <= tol:
        rng = rng or SplitMix64(DEFLATION_SEED_OFFSET)
        w, alpha = _fresh_direction(rng, U), 0.0
    else:
        w = w / alpha

    P = np.asfortranarray(np.column_stack([V, p_next]))
    Q = np.asfortranarray(np.column_stack([U, w]))
    B = np.zeros((k + 1, k + 1))
    B[np.arange(k), np.arange(k)] = [t.value for t in triplets]
    B[:k, k] = rho
    B[k, k] = alpha
    r, _ = _orthogonalize(amat.T @ w - alpha * p_next, P)
    return LanczosFactorization(
        p_basis=P, q_basis=Q, b=B,
        residual=np.reshape(r, a.col_shape, order="F"),
        beta_m=float(np.linalg.norm(r)),
        row_shape=a.row_shape, col_shape=a.col_shape,
    )


def extend_to_m(a: SplitTensor, aug: LanczosFactorization, m: int,
                rng: SplitMix64 | None = None) -> LanczosFactorization:
    """Append Lanczos steps to an augmented factorization until it has ``m`` columns."""
    return extend(a, aug, m, rng or SplitMix64(DEFLATION_SEED_OFFSET))


def lbr(a: SplitTensor, cfg: RestartConfig, p1: np.ndarray | None = None):
    """Restarted Lanczos bidiagonalization with Ritz augmentation.

    Parameters
    ----------
    a : SplitTensor
    cfg : RestartConfig
        ``target="smallest"`` augments with the last ``k`` Ritz tensors.
        For smallest triplets of a wide tensor (``prod(I) < prod(J)``) the
        solver runs on ``A^T`` and swaps the returned tensors.
    p1 : ndarray, optional
        Unit start tensor; defaults to :func:`random_start` with ``cfg.seed``.

    Returns
    -------
    (list of SingularTriplet, RestartReport)
        Triplets in descending order of value. Convergence means every
        tracked ``beta_m |u_i(m)| <= epsilon * max(1, ||A||_F)``.
    """
    t0 = time.perf_counter()
    swapped = cfg.target == "smallest" and prod(a.row_shape) < prod(a.col_shape)
    work = transpose(a) if swapped else a
    if cfg.m > _max_steps(work):
        raise PreconditionError(f"m={cfg.m} exceeds min(prod(I), prod(J))={_max_steps(work)}")
    if p1 is None:
        p1 = random_start(work.col_shape, cfg.seed)
    rng = SplitMix64(cfg.seed + DEFLATION_SEED_OFFSET)
    tol = convergence_tol(work, cfg.epsilon)

    f = elb(work, p1, cfg.m)
    if f.m < cfg.m:
        f = extend(work, f, cfg.m, rng)

    history, values = [], []
    converged = False
    for it in range(1, cfg.max_restarts + 1):
        trip = lift_triplets(f, svd(f.b), cfg.k, which=cfg.target, tol=tol)
        history.append([t.residual_estimate for t in trip])
        values.append([t.value for t in trip])
        if all(t.converged for t in trip):
            converged = True
            break
        if it == cfg.max_restarts:
            break
        aug = build_augmented(work, f, trip, rng)
        if aug is None:
            converged = True
            break
        f = extend(work, aug, cfg.m, rng)

    if swapped:
        trip = [SingularTriplet(t.value, t.right, t.left, t.residual_estimate, t.converged) for t in trip]
    report = RestartReport(
        iterations=it,
        converged=converged,
        residual_estimates=[t.residual_estimate for t in trip],
        gres_norm=gres_norm(a, trip),
        wall_time=time.perf_counter() - t0,
        history=history,
        value_history=values,
    )
    return trip, report
