"""Recognition by PCA under the Einstein product.

Each ``l x p x n`` training image is reshaped (first-index-fastest) to an
``lp x n`` matrix ``X_i``; the centred images form the training tensor
``Xbar`` of shape ``lp x n x N`` with row modes ``(lp, n)`` and column mode
``N``. Its first ``k`` left singular tensors span the face space; images
are compared through their coordinates ``U_k^T *_2 (X - M)``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..einstein import SplitTensor, einstein_product, exact_einstein_svd, transpose
from ..errors import FormatError, PreconditionError, ShapeError
from ..lanczos import DEFAULT_EPS, aelb
from ..ritz import RestartConfig, lbr
from ..tensor import eten_bytes, eten_from_bytes
from .images import ImageSet

METHODS = ("exact", "lb", "ritz")
BUNDLE_MAGIC = b"EPCA"
BUNDLE_VERSION = 1


@dataclass
class PcaModel:
    mean: np.ndarray
    """Mean image as an ``lp x n`` matrix."""
    projector: np.ndarray
    """Left singular tensors stacked as ``lp x n x k``."""
    projected: np.ndarray
    """Training coordinates, ``k x N``."""
    labels: list
    image_shape: tuple
    method: str = "exact"
    converged: bool = True

    @property
    def k(self) -> int:
        return self.projector.shape[-1]

    @property
    def projector_images(self) -> np.ndarray:
        """Projector slices reshaped back to ``l x p x n x k``."""
        return np.reshape(self.projector, self.image_shape + (self.k,), order="F")


def vectorize(img: np.ndarray) -> np.ndarray:
    l, p, n = img.shape
    return np.reshape(img, (l * p, n), order="F")


def build_training_tensor(images) -> tuple[np.ndarray, np.ndarray]:
    """Mean ``M`` (``lp x n``) and centred stack ``Xbar`` (``lp x n x N``)."""
    if len(images) == 0:
        raise PreconditionError("training set is empty")
    shape = np.shape(images[0])
    if any(np.shape(img) != shape for img in images):
        raise ShapeError("training images have differing shapes")
    X = np.stack([vectorize(np.asarray(img, dtype=np.float64)) for img in images], axis=-1)
    mean = X.mean(axis=-1)
    return mean, np.asfortranarray(X - mean[..., None])


def default_m(k: int, cap: int, method: str) -> int:
    m = min(cap, max(2 * k, k + 10))
    if method == "ritz" and m <= k:
        raise PreconditionError(f"restarted solver needs m > k={k}, but at most {cap} steps fit")
    return m


def leading_left_tensors(xbar: SplitTensor, k: int, method: str, m: int | None = None,
                         eps: float = DEFAULT_EPS, seed: int = 0, max_restarts: int = 1000):
    """First ``k`` left singular tensors of ``xbar`` and a convergence flag."""
    if method not in METHODS:
        raise PreconditionError(f"method must be one of {METHODS}")
    cap = min(xbar.matrix.shape)
    if not 1 <= k <= cap:
        raise PreconditionError(f"k={k} outside 1..{cap}")
    if method == "exact":
        return [t.left for t in exact_einstein_svd(xbar, full_matrices=False).triplets(k)], True
    m = default_m(k, cap, method) if m is None else m
    if method == "lb":
        trip = aelb(xbar, m, k, eps=eps, seed=seed)
        return [t.left for t in trip], all(t.converged for t in trip)
    trip, report = lbr(xbar, RestartConfig(m=m, k=k, epsilon=eps, max_restarts=max_restarts, seed=seed))
    return [t.left for t in trip], report.converged


def project(projector: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``U_k^T *_2 x`` for ``x`` shaped ``lp x n`` (plus optional trailing modes)."""
    ut = transpose(SplitTensor(projector, 2))
    return einstein_product(ut, SplitTensor(x, 2)).data


def pca_train(train: ImageSet, k: int, method: str = "exact", m: int | None = None,
              eps: float = DEFAULT_EPS, seed: int = 0, max_restarts: int = 1000) -> PcaModel:
    mean, xbar = build_training_tensor(train.images)
    lefts, ok = leading_left_tensors(SplitTensor(xbar, 2), k, method, m, eps, seed, max_restarts)
    projector = np.asfortranarray(np.stack(lefts, axis=-1))
    projected = np.reshape(project(projector, xbar), (k, len(train)), order="F")
    return PcaModel(mean, projector, projected, list(train.labels), train.image_shape, method, ok)


def query_coordinates(model: PcaModel, img: np.ndarray) -> np.ndarray:
    if tuple(np.shape(img)) != model.image_shape:
        raise ShapeError(f"query image {np.shape(img)} does not match model {model.image_shape}")
    return np.reshape(project(model.projector, vectorize(np.asarray(img, dtype=np.float64)) - model.mean),
                      (model.k,), order="F")


def pca_query(model: PcaModel, img: np.ndarray) -> tuple[str, float]:
    """Label of the nearest projected training image; ties go to the lowest index."""
    coords = query_coordinates(model, img)
    dist = np.linalg.norm(model.projected - coords[:, None], axis=0)
    best = int(np.argmin(dist))
    return model.labels[best], float(dist[best])


def identification_rate(predicted, truth) -> float:
    """Percentage of test images whose predicted label is correct."""
    if len(predicted) != len(truth) or not truth:
        raise PreconditionError("need equally many (>0) predictions and true labels")
    hits = sum(p == t for p, t in zip(predicted, truth))
    return 100.0 * hits / len(truth)


# bundle: b"EPCA", u8 version, u8 method length, method, u8 converged,
# then ETEN blobs (u64 length-prefixed) for image shape, mean, projector,
# projected, and finally u64-prefixed newline-joined UTF-8 labels.

def model_bytes(model: PcaModel) -> bytes:
    out = [BUNDLE_MAGIC, struct.pack("<BB", BUNDLE_VERSION, len(model.method)),
           model.method.encode("ascii"), struct.pack("<B", int(model.converged))]
    for arr in (np.array(model.image_shape, dtype=np.float64), model.mean, model.projector, model.projected):
        blob = eten_bytes(arr)
        out += [struct.pack("<Q", len(blob)), blob]
    labels = "\n".join(model.labels).encode("utf-8")
    out += [struct.pack("<Q", len(labels)), labels]
    return b"".join(out)


def model_from_bytes(buf: bytes) -> PcaModel:
    if buf[:4] != BUNDLE_MAGIC:
        raise FormatError("not a PCA model bundle (bad magic)")
    try:
        version, mlen = struct.unpack_from("<BB", buf, 4)
        if version != BUNDLE_VERSION:
            raise FormatError(f"unsupported bundle version {version}")
        pos = 6
        method = buf[pos:pos + mlen].decode("ascii")
        pos += mlen
        converged = bool(buf[pos])
        pos += 1
        arrays = []
        for _ in range(4):
            (n,) = struct.unpack_from("<Q", buf, pos)
            pos += 8
            arrays.append(eten_from_bytes(buf[pos:pos + n]))
            pos += n
        (n,) = struct.unpack_from("<Q", buf, pos)
        pos += 8
        labels = buf[pos:pos + n].decode("utf-8").split("\n")
        if pos + n != len(buf):
            raise FormatError("trailing bytes in model bundle")
    except struct.error as exc:
        raise FormatError("truncated model bundle") from exc
    shape, mean, projector, projected = arrays
    return PcaModel(mean, projector, projected, labels, tuple(int(x) for x in shape), method, converged)


def save_model(path, model: PcaModel) -> None:
    Path(path).write_bytes(model_bytes(model))


def load_model(path) -> PcaModel:
    return model_from_bytes(Path(path).read_bytes())
