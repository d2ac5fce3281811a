"""Training-method modifications: label smoothing and mixup targets,
plus the flag bundle that composes all four methods.

BlurPool and Channels Last live in :mod:`cyclebench.tensor`; this module
owns the target-distribution transforms and the method configuration
surface shared by the trainer and the CLI.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import Tensor4


@dataclass(frozen=True)
class MethodFlags:
    """Which training methods are enabled, with their hyperparameters."""

    blurpool: bool = False
    channels_last: bool = False
    label_smoothing: bool = False
    mixup: bool = False
    alpha_ls: float = 0.1
    alpha_mx: float = 0.2

    def label(self) -> str:
        parts = []
        if self.blurpool:
            parts.append("BP")
        if self.channels_last:
            parts.append("CL")
        if self.label_smoothing:
            parts.append("LS")
        if self.mixup:
            parts.append("MX")
        return "+".join(parts) if parts else "baseline"


def one_hot(labels: np.ndarray, n_classes: int) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise ValueError(f"labels outside [0, {n_classes})")
    out = np.zeros((labels.shape[0], n_classes))
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out


def smooth_labels(labels: np.ndarray, n_classes: int, alpha: float) -> np.ndarray:
    """Smoothed target rows: (1 - alpha) * onehot + alpha / n_classes."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"smoothing alpha {alpha} outside [0, 1]")
    return (1.0 - alpha) * one_hot(labels, n_classes) + alpha / n_classes


def mixup_batch(
    inputs: np.ndarray | Tensor4,
    targets: np.ndarray,
    alpha: float,
    rng: np.random.Generator,
):
    """Mix a batch with one Beta(alpha, alpha) draw and a random pairing.

    Every sample is blended with a permuted partner: lam * x + (1 - lam) * x_perm,
    applied identically to inputs and target rows.  Returns
    (mixed_inputs, mixed_targets, lam).
    """
    if alpha <= 0:
        raise ValueError("mixup alpha must be positive")
    arr = inputs.data if isinstance(inputs, Tensor4) else np.asarray(inputs)
    n = arr.shape[0]
    if n < 2:
        raise ValueError("mixup needs a batch of at least 2 samples")
    if targets.shape[0] != n:
        raise ValueError("inputs and targets disagree on batch size")
    lam = float(rng.beta(alpha, alpha))
    perm = rng.permutation(n)
    mixed = lam * arr + (1.0 - lam) * arr[perm]
    mixed_targets = lam * targets + (1.0 - lam) * targets[perm]
    if isinstance(inputs, Tensor4):
        return Tensor4(mixed, inputs.layout), mixed_targets, lam
    return mixed, mixed_targets, lam
