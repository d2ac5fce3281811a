"""Deterministic single-run training with per-step scheduled learning rates.

A run is a pure function of its :class:`RunConfig`: dataset synthesis,
weight init, epoch shuffling, and mixup draws each pull from an
independent named substream of the run seed, so the logged metrics
(everything except wall clock) are bit-reproducible.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, TaskSpec, gen_dataset
from .methods import MethodFlags, mixup_batch, one_hot, smooth_labels
from .nn import Model, NumericError, build_mlp, build_tiny_cnn, forward_backward_logits
from .optim import OptimizerConfig, init_state, sgdw_step
from .rng import substream
from .schedule import ScheduleSpec, lr_at, total_steps, validate as validate_schedule
from .tensor import Layout, ShapeError, Tensor4, to_layout

EVAL_BATCH = 512


class TrainError(RuntimeError):
    """A run aborted; the message records the epoch and step."""


@dataclass(frozen=True)
class ModelConfig:
    kind: str = "mlp"  # "mlp" | "tiny_cnn"
    widths: tuple[int, ...] = (32, 64, 10)
    channels: tuple[int, ...] = (8, 16)
    downsample: str = "stride"  # "stride" | "blurpool"

    def validate(self) -> list[str]:
        errors = []
        if self.kind == "mlp":
            if len(self.widths) < 3:
                errors.append("mlp needs at least one hidden layer")
            if any(w < 1 for w in self.widths):
                errors.append("mlp widths must be >= 1")
        elif self.kind == "tiny_cnn":
            if not self.channels:
                errors.append("tiny_cnn needs at least one conv block")
            if any(c < 1 for c in self.channels):
                errors.append("tiny_cnn channels must be >= 1")
            if self.downsample not in ("stride", "blurpool"):
                errors.append(f"unknown downsample {self.downsample!r}")
        else:
            errors.append(f"unknown model kind {self.kind!r}")
        return errors


@dataclass(frozen=True)
class RunConfig:
    task: TaskSpec
    model: ModelConfig
    optimizer: OptimizerConfig
    schedule: ScheduleSpec
    methods: MethodFlags = MethodFlags()
    epochs: int = 1
    batch_size: int = 128
    grad_accum: int = 1
    seed: int = 0

    def steps_per_epoch(self) -> int:
        n_train = round(0.8 * self.task.samples)
        return n_train // (self.batch_size * self.grad_accum)

    def validate(self) -> list[str]:
        errors = []
        errors += self.task.validate()
        errors += self.model.validate()
        errors += self.optimizer.validate()
        if self.epochs > 0:
            errors += validate_schedule(self.schedule)
        if self.batch_size < 1:
            errors.append("batch_size below 1")
        if self.grad_accum < 1:
            errors.append("grad_accum below 1")
        if self.epochs < 0:
            errors.append("epochs below 0")
        if not errors:
            spe = self.steps_per_epoch()
            if spe < 1:
                errors.append("batch_size * grad_accum exceeds the train split")
            elif self.epochs > 0:
                # epochs=0 is a legal degenerate run; the schedule is unused.
                if self.schedule.steps_per_epoch != spe:
                    errors.append(
                        f"schedule declares {self.schedule.steps_per_epoch} steps/epoch, "
                        f"data yields {spe}"
                    )
                elif self.epochs * spe != total_steps(self.schedule):
                    errors.append(
                        f"epochs*steps_per_epoch = {self.epochs * spe} but schedule "
                        f"has {total_steps(self.schedule)} steps"
                    )
        return errors

    def fingerprint(self) -> str:
        """Hash of the full recipe excluding the seed, so sibling seeds of
        one experiment share a fingerprint."""
        payload = {
            "task": vars(self.task),
            "model": {k: list(v) if isinstance(v, tuple) else v
                      for k, v in vars(self.model).items()},
            "optimizer": vars(self.optimizer),
            "methods": vars(self.methods),
            "schedule": {
                "eta_max": self.schedule.eta_max,
                "eta_min": self.schedule.eta_min,
                "warmup_steps": self.schedule.warmup_steps,
                "steps_per_epoch": self.schedule.steps_per_epoch,
                "shape": type(self.schedule.shape).__name__,
                "shape_args": vars(self.schedule.shape),
            },
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "grad_accum": self.grad_accum,
        }
        blob = json.dumps(payload, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class MetricsLog:
    """Everything one training run measured."""

    lrs: list[float]
    train_loss: list[float]
    train_acc: list[float]
    val_acc: list[float]
    wall_clock_s: list[float]
    seed: int
    config_fingerprint: str
    schedule_kind: str
    epochs: int
    steps_per_epoch: int

    @property
    def total_wall_clock_s(self) -> float:
        return self.wall_clock_s[-1] if self.wall_clock_s else 0.0


@dataclass
class TrainResult:
    model: Model
    log: MetricsLog
    dataset: Dataset = field(repr=False, default=None)


def _build_model(config: RunConfig, dataset: Dataset, rng) -> Model:
    if config.model.kind == "mlp":
        return build_mlp(list(config.model.widths), rng)
    in_channels = dataset.features.dims[1]
    downsample = "blurpool" if config.methods.blurpool else config.model.downsample
    return build_tiny_cnn(
        in_channels, list(config.model.channels), dataset.n_classes, downsample, rng
    )


def _take(features, idx):
    if isinstance(features, Tensor4):
        return Tensor4(features.data[idx], features.layout)
    return features[idx]


def evaluate(model: Model, split, batch_size: int = EVAL_BATCH) -> float:
    """Top-1 accuracy of ``model`` on a (features, labels) split."""
    features, labels = split
    n = _n_samples(features)
    if n == 0:
        raise ValueError("cannot evaluate on an empty split")
    if labels.shape[0] != n:
        raise ShapeError(f"{n} samples but {labels.shape[0]} labels")
    hits = 0
    for start in range(0, n, batch_size):
        idx = np.arange(start, min(start + batch_size, n))
        preds = model.predict(_take(features, idx))
        hits += int((preds == labels[idx]).sum())
    return hits / n


def _n_samples(features) -> int:
    return features.dims[0] if isinstance(features, Tensor4) else features.shape[0]


def fit(config: RunConfig) -> TrainResult:
    """Train per the config and return the model plus its metrics log."""
    errors = config.validate()
    if errors:
        raise ValueError("invalid run config: " + "; ".join(errors))

    dataset = gen_dataset(config.task, config.seed)
    rng_init = substream(config.seed, "init")
    rng_shuffle = substream(config.seed, "shuffle")
    rng_mixup = substream(config.seed, "mixup")
    model = _build_model(config, dataset, rng_init)

    flags = config.methods
    layout = Layout.CHANNELS_LAST if flags.channels_last else Layout.CHANNELS_FIRST
    is_image = isinstance(dataset.features, Tensor4)

    train_x, train_y = dataset.train_split()
    val_split = dataset.val_split()
    if is_image and config.model.kind == "mlp":
        # dense models consume flattened pixels
        train_x = np.ascontiguousarray(train_x.nchw().reshape(len(train_y), -1))
        val_x = val_split[0]
        val_split = (
            np.ascontiguousarray(val_x.nchw().reshape(val_x.dims[0], -1)),
            val_split[1],
        )
        is_image = False
    elif is_image and flags.channels_last:
        train_x = to_layout(train_x, layout)
        val_split = (to_layout(val_split[0], layout), val_split[1])

    spe = config.steps_per_epoch()
    micro = config.batch_size
    state = init_state(model.param_arrays())

    lrs: list[float] = []
    train_loss, train_acc, val_acc, wall = [], [], [], []
    t0 = time.perf_counter()
    global_step = 0
    n_train = _n_samples(train_x)

    for epoch in range(1, config.epochs + 1):
        perm = rng_shuffle.permutation(n_train)
        epoch_loss = 0.0
        epoch_hits = 0
        epoch_seen = 0
        for step in range(spe):
            base = step * micro * config.grad_accum
            acc_grads = None
            step_loss = 0.0
            try:
                for j in range(config.grad_accum):
                    idx = perm[base + j * micro : base + (j + 1) * micro]
                    x = _take(train_x, idx)
                    y = train_y[idx]
                    if flags.label_smoothing:
                        targets = smooth_labels(y, dataset.n_classes, flags.alpha_ls)
                    else:
                        targets = one_hot(y, dataset.n_classes)
                    if flags.mixup:
                        x, targets, _ = mixup_batch(x, targets, flags.alpha_mx, rng_mixup)
                    loss, grads, logits = forward_backward_logits(model, x, targets)
                    step_loss += loss / config.grad_accum
                    epoch_hits += int((np.argmax(logits, axis=1) == y).sum())
                    epoch_seen += len(idx)
                    garr = model.grad_arrays(grads)
                    if acc_grads is None:
                        acc_grads = [g / config.grad_accum for g in garr]
                    else:
                        for a, g in zip(acc_grads, garr):
                            a += g / config.grad_accum
                lr = lr_at(config.schedule, global_step)
                lrs.append(lr)
                sgdw_step(state, acc_grads, lr, config.optimizer)
            except (ShapeError, NumericError, FloatingPointError) as err:
                raise TrainError(f"run aborted at epoch {epoch}, step {step}: {err}") from err
            epoch_loss += step_loss
            global_step += 1
        train_loss.append(epoch_loss / spe if spe else 0.0)
        train_acc.append(epoch_hits / epoch_seen if epoch_seen else 0.0)
        val_acc.append(evaluate(model, val_split))
        wall.append(time.perf_counter() - t0)

    log = MetricsLog(
        lrs=lrs,
        train_loss=train_loss,
        train_acc=train_acc,
        val_acc=val_acc,
        wall_clock_s=wall,
        seed=config.seed,
        config_fingerprint=config.fingerprint(),
        schedule_kind=type(config.schedule.shape).__name__,
        epochs=config.epochs,
        steps_per_epoch=spe,
    )
    return TrainResult(model=model, log=log, dataset=dataset)


def train(config: RunConfig) -> MetricsLog:
    """Run training and return only the metrics log."""
    return fit(config).log
