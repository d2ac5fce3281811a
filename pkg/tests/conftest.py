import numpy as np
import pytest

from cyclebench.data import TaskSpec
from cyclebench.methods import MethodFlags
from cyclebench.optim import OptimizerConfig
from cyclebench.schedule import CosineDecay, ScheduleSpec
from cyclebench.train import ModelConfig, RunConfig


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def tiny_task(**overrides) -> TaskSpec:
    """Small gaussian mixture: 480 train / 120 val, 4 classes."""
    defaults = dict(kind="gaussian_mixture", classes=4, samples=600, dim=8, separation=4.0)
    defaults.update(overrides)
    return TaskSpec(**defaults)


def tiny_run(epochs=3, seed=1, task=None, methods=None, model=None, batch_size=32,
             grad_accum=1, shape=None, warmup_epochs=1, eta_max=0.05) -> RunConfig:
    """A fast-to-train run config used across the suite."""
    task = task or tiny_task()
    spe = round(0.8 * task.samples) // (batch_size * grad_accum)
    shape = shape or CosineDecay(total=epochs)
    schedule = ScheduleSpec.from_epochs(
        eta_max=eta_max, shape=shape, warmup_epochs=warmup_epochs, steps_per_epoch=spe
    )
    return RunConfig(
        task=task,
        model=model or ModelConfig(kind="mlp", widths=(task.dim, 16, task.classes)),
        optimizer=OptimizerConfig(eta_max=eta_max),
        schedule=schedule,
        methods=methods or MethodFlags(),
        epochs=epochs,
        batch_size=batch_size,
        grad_accum=grad_accum,
        seed=seed,
    )


def tiny_image_task(**overrides) -> TaskSpec:
    defaults = dict(kind="synthetic_images", classes=4, samples=400, side=8,
                    texture_scale=1.0, noise=0.25)
    defaults.update(overrides)
    return TaskSpec(**defaults)
