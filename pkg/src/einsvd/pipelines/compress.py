"""Low-rank tensor compression by truncated Einstein SVD."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..einstein import SplitTensor, exact_einstein_svd, truncated_reconstruct
from ..errors import PreconditionError
from ..lanczos import DEFAULT_EPS, aelb
from ..ritz import RestartConfig, lbr
from .pca import METHODS, default_m


@dataclass
class CompressionReport:
    method: str
    ks: list = field(default_factory=list)
    relative_errors: list = field(default_factory=list)
    seconds: list = field(default_factory=list)
    converged: list = field(default_factory=list)

    def rows(self):
        return list(zip(self.ks, self.relative_errors, self.seconds))


def relative_error(a: SplitTensor, ak: SplitTensor) -> float:
    """``||A - A_k||_F / ||A||_F``."""
    return float(np.linalg.norm((a.data - ak.data).ravel(order="F")) / a.norm())


def _approximate(a, k, method, m, eps, seed, max_restarts, exact_cache):
    if k == 0:
        return truncated_reconstruct([], 0, like=a), True
    if method == "exact":
        if "svd" not in exact_cache:
            exact_cache["svd"] = exact_einstein_svd(a, full_matrices=False)
        return truncated_reconstruct(exact_cache["svd"].triplets(k)), True
    cap = min(a.matrix.shape)
    m = default_m(k, cap, method) if m is None else m
    if method == "lb":
        trip = aelb(a, m, k, eps=eps, seed=seed)
        return truncated_reconstruct(trip), all(t.converged for t in trip)
    trip, report = lbr(a, RestartConfig(m=m, k=k, epsilon=eps, max_restarts=max_restarts, seed=seed))
    return truncated_reconstruct(trip), report.converged


def compress_sweep(a: SplitTensor, ks, method: str = "exact", m: int | None = None,
                   eps: float = DEFAULT_EPS, seed: int = 0, max_restarts: int = 1000):
    """Compress ``a`` at every rank in ``ks``.

    Returns the list of approximations ``A_k`` and a :class:`CompressionReport`.
    The exact method factorizes once and reuses the SVD across ``ks``; the
    iterative methods solve afresh for every ``k``.
    """
    if method not in METHODS:
        raise PreconditionError(f"method must be one of {METHODS}")
    if a.norm() == 0:
        raise PreconditionError("cannot measure relative error of a zero tensor")
    report = CompressionReport(method)
    approximations = []
    cache: dict = {}
    for k in ks:
        if not 0 <= k <= min(a.matrix.shape):
            raise PreconditionError(f"k={k} outside 0..{min(a.matrix.shape)}")
        t0 = time.perf_counter()
        ak, ok = _approximate(a, k, method, m, eps, seed, max_restarts, cache)
        report.seconds.append(time.perf_counter() - t0)
        report.ks.append(k)
        report.relative_errors.append(relative_error(a, ak))
        report.converged.append(ok)
        approximations.append(ak)
    return approximations, report


def compress(a: SplitTensor, k: int, method: str = "exact", **kw):
    """Rank-``k`` approximation ``A_k`` and its single-row report."""
    approximations, report = compress_sweep(a, [k], method, **kw)
    return approximations[0], report
