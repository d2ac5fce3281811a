"""cyclebench: accuracy-vs-training-time tradeoff curves from single
training runs with multiplicative cyclic learning rate schedules."""

__version__ = "0.1.0"

from .data import Dataset, TaskSpec, gen_dataset, load_idx
from .methods import MethodFlags, mixup_batch, smooth_labels
from .schedule import (
    Constant,
    CosineDecay,
    CyclePlan,
    Sawtooth,
    ScheduleSpec,
    WarmRestarts,
    cycle_end_steps,
    lr_at,
    total_steps,
)
from .tensor import Layout, Tensor4, blurpool2d, conv2d, to_layout
from .tradeoff import (
    RelativeCurve,
    TradeoffCurve,
    TradeoffPoint,
    aggregate_seeds,
    cyclic_curve,
    relative_improvement,
    speedup_ratio,
    standard_curve,
    wall_clock_totals,
)
from .train import MetricsLog, ModelConfig, RunConfig, evaluate, fit, train

__all__ = [
    "__version__",
    "Constant",
    "CosineDecay",
    "CyclePlan",
    "Dataset",
    "Layout",
    "MethodFlags",
    "MetricsLog",
    "ModelConfig",
    "RelativeCurve",
    "RunConfig",
    "Sawtooth",
    "ScheduleSpec",
    "TaskSpec",
    "Tensor4",
    "TradeoffCurve",
    "TradeoffPoint",
    "WarmRestarts",
    "aggregate_seeds",
    "blurpool2d",
    "conv2d",
    "cycle_end_steps",
    "cyclic_curve",
    "evaluate",
    "fit",
    "gen_dataset",
    "load_idx",
    "lr_at",
    "mixup_batch",
    "relative_improvement",
    "smooth_labels",
    "speedup_ratio",
    "standard_curve",
    "to_layout",
    "total_steps",
    "train",
    "wall_clock_totals",
]
