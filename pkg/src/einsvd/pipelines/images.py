"""PPM (P6) image I/O, image datasets, video frame folders and synthetic generators."""

from __future__ import annotations

import os
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import FormatError, PreconditionError, ShapeError
from ..rng import SplitMix64

_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def read_ppm(path) -> np.ndarray:
    """Binary PPM as an ``height x width x 3`` float tensor scaled to ``[0, 1]``."""
    buf = Path(path).read_bytes()
    return ppm_from_bytes(buf, str(path))


def ppm_from_bytes(buf: bytes, name: str = "<bytes>") -> np.ndarray:
    pos = 0
    fields = []
    for _ in range(4):
        match = _TOKEN.match(buf, pos)
        if match is None:
            raise FormatError(f"{name}: truncated PPM header")
        fields.append(match.group(1))
        pos = match.end()
    if fields[0] != b"P6":
        raise FormatError(f"{name}: not a binary PPM (magic {fields[0]!r})")
    try:
        width, height, maxval = (int(x) for x in fields[1:])
    except ValueError as exc:
        raise FormatError(f"{name}: malformed PPM header") from exc
    if width < 1 or height < 1 or not 1 <= maxval <= 65535:
        raise FormatError(f"{name}: invalid PPM dimensions or maxval")
    if pos >= len(buf) or not buf[pos:pos + 1].isspace():
        raise FormatError(f"{name}: missing whitespace after PPM header")
    pos += 1
    dtype = np.dtype("u1") if maxval < 256 else np.dtype(">u2")
    count = width * height * 3
    if len(buf) - pos != count * dtype.itemsize:
        raise FormatError(f"{name}: PPM payload has {len(buf) - pos} bytes, expected {count * dtype.itemsize}")
    raw = np.frombuffer(buf, dtype=dtype, count=count, offset=pos)
    img = raw.reshape(height, width, 3).astype(np.float64) / maxval
    return np.asfortranarray(img)


def ppm_bytes(img: np.ndarray) -> bytes:
    """8-bit P6 encoding; values are clipped to ``[0, 1]`` and rounded."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ShapeError(f"PPM needs a height x width x 3 tensor, got {img.shape}")
    q = np.rint(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
    head = f"P6\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii")
    return head + np.ascontiguousarray(q).tobytes()


def write_ppm(path, img: np.ndarray) -> None:
    Path(path).write_bytes(ppm_bytes(img))


@dataclass
class ImageSet:
    """Same-sized ``l x p x n`` images with one label each."""

    images: list
    labels: list

    def __post_init__(self):
        if len(self.images) != len(self.labels):
            raise ShapeError(f"{len(self.images)} images but {len(self.labels)} labels")
        shapes = {np.shape(img) for img in self.images}
        if len(shapes) > 1:
            raise ShapeError(f"images have differing shapes {sorted(shapes)}")
        if shapes and len(next(iter(shapes))) != 3:
            raise ShapeError("images must be 3-order tensors")

    def __len__(self):
        return len(self.images)

    @property
    def image_shape(self) -> tuple:
        return tuple(np.shape(self.images[0]))

    def split(self, test_per_class: int, seed: int | None = None):
        """Hold out ``test_per_class`` images of every label.

        Without a seed the last images of each class (in set order) are held
        out; with a seed the choice is a SplitMix64 permutation per class.
        """
        train, test = ([], []), ([], [])
        rng = SplitMix64(seed) if seed is not None else None
        for label in dict.fromkeys(self.labels):
            idx = [i for i, lab in enumerate(self.labels) if lab == label]
            if rng is not None:
                idx = [idx[j] for j in np.argsort(rng.uniform(len(idx)), kind="stable")]
            if len(idx) <= test_per_class:
                raise PreconditionError(f"class {label!r} has only {len(idx)} images")
            for j, i in enumerate(idx):
                dest = test if j >= len(idx) - test_per_class else train
                dest[0].append(self.images[i])
                dest[1].append(label)
        return ImageSet(*train), ImageSet(*test)


def load_dataset(root) -> ImageSet:
    """Read ``<root>/<label>/<image>.ppm`` with labels and files in lexicographic order."""
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset root {root} is not a directory")
    images, labels = [], []
    for label_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        for f in sorted(label_dir.glob("*.ppm")):
            images.append(read_ppm(f))
            labels.append(label_dir.name)
    if not images:
        raise FormatError(f"no .ppm images under {root}")
    return ImageSet(images, labels)


def save_dataset(root, dataset: ImageSet) -> None:
    root = Path(root)
    counts: dict = {}
    for img, label in zip(dataset.images, dataset.labels):
        n = counts.get(label, 0)
        counts[label] = n + 1
        os.makedirs(root / str(label), exist_ok=True)
        write_ppm(root / str(label) / f"img_{n:03d}.ppm", img)


def ingest_video(root) -> np.ndarray:
    """Stack the ``*.ppm`` frames of ``root`` (lexicographic order) into ``l x w x 3 x T``."""
    frames = sorted(Path(root).glob("*.ppm"))
    if not frames:
        raise FormatError(f"no .ppm frames in {root}")
    data = [read_ppm(f) for f in frames]
    shape = data[0].shape
    for f, d in zip(frames, data):
        if d.shape != shape:
            raise ShapeError(f"frame {f.name} has shape {d.shape}, expected {shape}")
    return np.asfortranarray(np.stack(data, axis=-1))


def export_video(root, video: np.ndarray) -> list:
    os.makedirs(root, exist_ok=True)
    paths = []
    for t in range(video.shape[-1]):
        path = Path(root) / f"frame_{t + 1:05d}.ppm"
        write_ppm(path, video[..., t])
        paths.append(path)
    return paths


def _blob(h, w, cy, cx, sigma):
    y = np.arange(h)[:, None]
    x = np.arange(w)[None, :]
    return np.exp(-((y - cy) ** 2 + (x - cx) ** 2) / (2.0 * sigma**2))


def synthetic_faces(n_classes: int = 10, per_class: int = 5, size=(16, 16),
                    seed: int = 0, noise: float = 0.03) -> ImageSet:
    """Colour "faces": each class is a distinct arrangement of coloured blobs.

    Individual images vary the overall brightness slightly and add
    independent noise, so classes are well separated in pixel space.
    """
    rng = SplitMix64(seed)
    h, w = size
    images, labels = [], []
    for c in range(n_classes):
        base = np.full((h, w, 3), 0.2)
        params = rng.uniform(4 * 6).reshape(4, 6)
        for cy, cx, sig, r, g, b in params:
            blob = _blob(h, w, cy * h, cx * w, 1.5 + 2.5 * sig)
            base += 0.6 * blob[..., None] * np.array([r, g, b])
        for _ in range(per_class):
            gain = 0.9 + 0.2 * rng.uniform(1)[0]
            img = gain * base + noise * rng.normal(h * w * 3).reshape(h, w, 3)
            images.append(np.asfortranarray(np.clip(img, 0.0, 1.0)))
            labels.append(f"s{c + 1:02d}")
    return ImageSet(images, labels)


def synthetic_video(height: int = 20, width: int = 24, frames: int = 15,
                    seed: int = 0, noise: float = 0.01) -> np.ndarray:
    """``height x width x 3 x frames`` clip of coloured blobs drifting over a gradient."""
    rng = SplitMix64(seed)
    yy = np.linspace(0.0, 1.0, height)[:, None]
    xx = np.linspace(0.0, 1.0, width)[None, :]
    background = np.stack([0.3 + 0.3 * yy * np.ones_like(xx), 0.2 + 0.4 * xx * np.ones_like(yy),
                           0.5 * np.ones((height, width))], axis=-1)
    blobs = rng.uniform(3 * 8).reshape(3, 8)
    video = np.empty((height, width, 3, frames))
    for t in range(frames):
        frame = background.copy()
        for y0, x0, vy, vx, sig, r, g, b in blobs:
            cy = (y0 + 0.4 * (vy - 0.5) * t / max(frames - 1, 1)) * height
            cx = (x0 + 0.6 * (vx - 0.5) * t / max(frames - 1, 1)) * width
            frame += 0.5 * _blob(height, width, cy, cx, 2.0 + 3.0 * sig)[..., None] * np.array([r, g, b])
        frame += noise * rng.normal(height * width * 3).reshape(height, width, 3)
        video[..., t] = np.clip(frame, 0.0, 1.0)
    return np.asfortranarray(video)
