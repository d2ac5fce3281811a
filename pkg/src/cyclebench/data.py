"""Deterministic desk-scale datasets and real-data ingestion.

Three synthetic task families cover the benchmark surface: a Gaussian
mixture for the dense path, interleaved spirals for a nonlinear 2-D
sanity task, and band-limited textured images for the convolutional
path.  Every dataset is a pure function of (task spec, seed) and is
split 80/20 into train/validation in generation order.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .rng import substream
from .tensor import Layout, Tensor4

TASK_KINDS = ("gaussian_mixture", "spirals", "synthetic_images")


class FormatError(ValueError):
    """Raised for malformed binary input files."""


@dataclass(frozen=True)
class TaskSpec:
    kind: str = "gaussian_mixture"
    classes: int = 10
    samples: int = 6250
    label_noise: float = 0.0
    # gaussian_mixture
    dim: int = 32
    separation: float = 4.0
    # spirals / synthetic_images coordinate or pixel jitter
    noise: float = 0.2
    # synthetic_images
    side: int = 8
    texture_scale: float = 1.0

    def validate(self) -> list[str]:
        errors = []
        if self.kind not in TASK_KINDS:
            errors.append(f"unknown task kind {self.kind!r}")
        if self.classes < 2:
            errors.append("classes below 2")
        if self.samples < 10:
            errors.append("samples below 10")
        if not 0.0 <= self.label_noise <= 1.0:
            errors.append("label_noise outside [0, 1]")
        if self.kind == "gaussian_mixture":
            if self.dim < 1:
                errors.append("dim below 1")
            if self.dim < self.classes:
                errors.append("gaussian_mixture needs dim >= classes")
            if self.separation < 0:
                errors.append("separation below 0")
        if self.kind == "spirals" and self.noise < 0:
            errors.append("noise below 0")
        if self.kind == "synthetic_images":
            if self.side < 4:
                errors.append("side below 4")
            if self.texture_scale <= 0:
                errors.append("texture_scale not positive")
        return errors


@dataclass
class Dataset:
    """Features plus labels with a fixed train/validation split."""

    features: np.ndarray | Tensor4
    labels: np.ndarray
    train_idx: np.ndarray
    val_idx: np.ndarray
    n_classes: int

    @property
    def n_train(self) -> int:
        return len(self.train_idx)

    @property
    def n_val(self) -> int:
        return len(self.val_idx)

    def _take(self, idx: np.ndarray):
        if isinstance(self.features, Tensor4):
            return Tensor4(self.features.data[idx], self.features.layout)
        return self.features[idx]

    def train_split(self):
        return self._take(self.train_idx), self.labels[self.train_idx]

    def val_split(self):
        return self._take(self.val_idx), self.labels[self.val_idx]


def _split_indices(n: int) -> tuple[np.ndarray, np.ndarray]:
    # First 80% train, last 20% validation; samples are generated iid so
    # positional splitting is already unbiased.
    n_train = round(0.8 * n)
    return np.arange(n_train), np.arange(n_train, n)


def _apply_label_noise(labels, k, rate, rng) -> np.ndarray:
    if rate <= 0:
        return labels
    flip = rng.random(labels.shape[0]) < rate
    noisy = labels.copy()
    noisy[flip] = rng.integers(0, k, int(flip.sum()))
    return noisy


def _gaussian_mixture(spec: TaskSpec, rng) -> tuple[np.ndarray, np.ndarray]:
    # Class means are mutually orthogonal with norm `separation`, so every
    # pair of classes is equally confusable.
    q, _ = np.linalg.qr(rng.standard_normal((spec.dim, spec.dim)))
    means = spec.separation * q[:, : spec.classes].T
    labels = rng.integers(0, spec.classes, spec.samples)
    feats = means[labels] + rng.standard_normal((spec.samples, spec.dim))
    return feats, labels


def _spirals(spec: TaskSpec, rng) -> tuple[np.ndarray, np.ndarray]:
    labels = rng.integers(0, spec.classes, spec.samples)
    t = rng.random(spec.samples)
    radius = 0.2 + 0.8 * t
    angle = 2.0 * np.pi * labels / spec.classes + 3.0 * np.pi * t
    feats = np.stack([radius * np.cos(angle), radius * np.sin(angle)], axis=1)
    feats += spec.noise * rng.standard_normal(feats.shape)
    return feats, labels


def _synthetic_images(spec: TaskSpec, rng) -> tuple[Tensor4, np.ndarray]:
    # One band-limited texture prototype per class; each sample is a
    # circular shift of its prototype plus pixel noise.
    side = spec.side
    h, w = np.meshgrid(np.arange(side), np.arange(side), indexing="ij")
    protos = np.zeros((spec.classes, side, side))
    for c in range(spec.classes):
        for _ in range(3):
            fh, fw = rng.integers(0, 3, 2)
            if fh == 0 and fw == 0:
                fh = 1
            amp = rng.uniform(0.5, 1.0) * spec.texture_scale
            phase = rng.uniform(0.0, 2.0 * np.pi)
            protos[c] += amp * np.sin(2.0 * np.pi * (fh * h + fw * w) / side + phase)
    labels = rng.integers(0, spec.classes, spec.samples)
    shifts = rng.integers(0, side, (spec.samples, 2))
    imgs = np.empty((spec.samples, 1, side, side))
    for i in range(spec.samples):
        rolled = np.roll(protos[labels[i]], (shifts[i, 0], shifts[i, 1]), axis=(0, 1))
        imgs[i, 0] = rolled
    imgs += spec.noise * spec.texture_scale * rng.standard_normal(imgs.shape)
    return Tensor4(imgs, Layout.CHANNELS_FIRST), labels


def gen_dataset(spec: TaskSpec, seed: int) -> Dataset:
    """Synthesize a dataset; bit-identical for identical (spec, seed)."""
    errors = spec.validate()
    if errors:
        raise ValueError("invalid task spec: " + "; ".join(errors))
    rng = substream(seed, "data")
    if spec.kind == "gaussian_mixture":
        feats, labels = _gaussian_mixture(spec, rng)
    elif spec.kind == "spirals":
        feats, labels = _spirals(spec, rng)
    else:
        feats, labels = _synthetic_images(spec, rng)
    labels = _apply_label_noise(labels, spec.classes, spec.label_noise, rng)
    train_idx, val_idx = _split_indices(spec.samples)
    return Dataset(feats, labels.astype(np.int64), train_idx, val_idx, spec.classes)


_IDX_IMAGE_MAGIC = 0x00000803
_IDX_LABEL_MAGIC = 0x00000801


def _read_idx(path, magic: int, rank: int) -> np.ndarray:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 4 + 4 * rank:
        raise FormatError(f"{path}: truncated header")
    got = struct.unpack_from(">I", blob, 0)[0]
    if got != magic:
        raise FormatError(
            f"{path}: bad magic 0x{got:08x} at byte offset 0 (expected 0x{magic:08x})"
        )
    dims = struct.unpack_from(f">{rank}I", blob, 4)
    n_bytes = int(np.prod(dims))
    payload = blob[4 + 4 * rank :]
    if len(payload) != n_bytes:
        raise FormatError(
            f"{path}: payload is {len(payload)} bytes, header implies {n_bytes}"
        )
    return np.frombuffer(payload, dtype=np.uint8).reshape(dims)


def load_idx(images_path, labels_path) -> Dataset:
    """Load an IDX image/label pair into a Dataset.

    Images become channels-first Tensor4 data (C=1) scaled to [0, 1] by
    dividing by 255.  The split rule matches the synthetic tasks: the
    first 80% of samples (file order) are train, the rest validation.
    """
    images = _read_idx(images_path, _IDX_IMAGE_MAGIC, rank=3)
    labels = _read_idx(labels_path, _IDX_LABEL_MAGIC, rank=1)
    if images.shape[0] != labels.shape[0]:
        raise FormatError(
            f"{images.shape[0]} images but {labels.shape[0]} labels"
        )
    feats = Tensor4(
        (images.astype(np.float64) / 255.0)[:, None, :, :], Layout.CHANNELS_FIRST
    )
    train_idx, val_idx = _split_indices(images.shape[0])
    n_classes = int(labels.max()) + 1 if labels.size else 0
    return Dataset(feats, labels.astype(np.int64), train_idx, val_idx, n_classes)
