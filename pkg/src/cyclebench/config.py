"""Declarative experiment configuration: TOML parsing, defaults, validation.

A config file describes one experiment: a task, a model, an optimizer,
method flags, and a run mode (duration sweep, multiplicative cyclic run,
or constant-period cyclic runs).  Parsing materializes every default so
the echoed config is complete and reproducible.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .data import TaskSpec
from .methods import MethodFlags
from .optim import OptimizerConfig
from .schedule import (
    CosineDecay,
    ScheduleSpec,
    Sawtooth,
    WarmRestarts,
    cycle_end_steps,
    total_steps,
)
from .train import ModelConfig, RunConfig

MODES = ("sweep", "cyclic", "constant")

# Reference lr at the reference batch size; defaults scale proportionally.
REFERENCE_LR = 2.048
REFERENCE_BATCH = 2048


class ConfigError(ValueError):
    """Aggregated configuration problems."""


@dataclass(frozen=True)
class ExperimentConfig:
    label: str
    task: TaskSpec
    model: ModelConfig
    optimizer: OptimizerConfig
    methods: MethodFlags
    mode: str
    warmup_epochs: int
    batch_size: int
    grad_accum: int
    seeds: tuple[int, ...]
    eta_min: float = 0.0
    durations: tuple[int, ...] = ()  # sweep
    t0: int = 0                      # cyclic
    growth: float = 2.0
    cycles: int = 0
    periods: tuple[int, ...] = ()    # constant
    epochs: int = 0                  # constant: total budget per run
    shape: str = "cosine"            # cyclic cycle shape: cosine | sawtooth
    out_dir: str = ""

    def steps_per_epoch(self) -> int:
        n_train = round(0.8 * self.task.samples)
        return n_train // (self.batch_size * self.grad_accum)

    def to_dict(self) -> dict:
        """Fully materialized snapshot; feeding it back through
        :func:`config_from_dict` reproduces this config."""
        opt = dict(vars(self.optimizer))
        opt.pop("decoupled", None)
        opt["eta_min"] = self.eta_min
        return {
            "label": self.label,
            "task": dict(vars(self.task)),
            "model": {k: list(v) if isinstance(v, tuple) else v
                      for k, v in vars(self.model).items()},
            "optimizer": opt,
            "methods": dict(vars(self.methods)),
            "run": {
                "mode": self.mode,
                "warmup_epochs": self.warmup_epochs,
                "batch_size": self.batch_size,
                "grad_accum": self.grad_accum,
                "seeds": list(self.seeds),
                "durations": list(self.durations),
                "t0": self.t0,
                "growth": self.growth,
                "cycles": self.cycles,
                "periods": list(self.periods),
                "epochs": self.epochs,
                "shape": self.shape,
            },
        }

    def fingerprint(self) -> str:
        """Identity of the experiment recipe; the output directory is
        excluded so relocating results never changes it."""
        blob = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def validate(self) -> list[str]:
        errors = []
        errors += self.task.validate()
        errors += self.model.validate()
        errors += self.optimizer.validate()
        if self.mode not in MODES:
            errors.append(f"unknown mode {self.mode!r}")
        if self.warmup_epochs < 0:
            errors.append("warmup_epochs below 0")
        if self.batch_size < 1:
            errors.append("batch_size below 1")
        if self.grad_accum < 1:
            errors.append("grad_accum below 1")
        if not self.seeds:
            errors.append("seeds list is empty")
        if len(set(self.seeds)) != len(self.seeds):
            errors.append("seeds must be distinct")
        if self.eta_min < 0:
            errors.append("eta_min below 0")
        if self.shape not in ("cosine", "sawtooth"):
            errors.append(f"unknown cycle shape {self.shape!r}")
        if not errors and self.steps_per_epoch() < 1:
            errors.append("batch_size * grad_accum exceeds the train split")
        if self.mode == "sweep":
            if not self.durations:
                errors.append("sweep mode requires durations")
            elif list(self.durations) != sorted(set(self.durations)):
                errors.append("durations not strictly increasing")
            elif self.durations[0] <= self.warmup_epochs:
                errors.append("shortest duration must exceed warmup")
        elif self.mode == "cyclic":
            if self.t0 < 1:
                errors.append("cyclic mode requires t0 >= 1")
            if self.cycles < 1:
                errors.append("cyclic mode requires cycles >= 1")
            if self.growth < 1:
                errors.append("growth factor below 1")
        elif self.mode == "constant":
            if not self.periods:
                errors.append("constant mode requires periods")
            elif any(p < 1 for p in self.periods):
                errors.append("periods must be >= 1")
            elif len(set(self.periods)) != len(self.periods):
                errors.append("periods must be distinct")
            if self.epochs <= self.warmup_epochs:
                errors.append("constant mode requires epochs > warmup")
            elif self.periods and all(
                (self.epochs - self.warmup_epochs) // p < 1 for p in self.periods
            ):
                errors.append("no period fits a single cycle in the epoch budget")
        return errors

    # Schedules for each run mode

    def sweep_schedule(self, duration: int) -> ScheduleSpec:
        return ScheduleSpec.from_epochs(
            eta_max=self.optimizer.eta_max,
            eta_min=self.eta_min,
            warmup_epochs=self.warmup_epochs,
            shape=CosineDecay(total=duration),
            steps_per_epoch=self.steps_per_epoch(),
        )

    def cyclic_schedule(self) -> ScheduleSpec:
        shape = (
            Sawtooth(period=self.t0, cycles=self.cycles)
            if self.shape == "sawtooth"
            else WarmRestarts(first_period=self.t0, growth=self.growth, cycles=self.cycles)
        )
        return ScheduleSpec.from_epochs(
            eta_max=self.optimizer.eta_max,
            eta_min=self.eta_min,
            warmup_epochs=self.warmup_epochs,
            shape=shape,
            steps_per_epoch=self.steps_per_epoch(),
        )

    def constant_schedule(self, period: int) -> ScheduleSpec:
        n_cycles = (self.epochs - self.warmup_epochs) // period
        return ScheduleSpec.from_epochs(
            eta_max=self.optimizer.eta_max,
            eta_min=self.eta_min,
            warmup_epochs=self.warmup_epochs,
            shape=WarmRestarts(first_period=period, growth=1.0, cycles=n_cycles),
            steps_per_epoch=self.steps_per_epoch(),
        )

    def run_epochs(self, spec: ScheduleSpec) -> int:
        steps = total_steps(spec)
        spe = self.steps_per_epoch()
        if steps % spe:
            raise ConfigError(
                f"schedule length {steps} steps does not align to {spe} steps/epoch"
            )
        return steps // spe

    def run_config(self, schedule: ScheduleSpec, seed: int) -> RunConfig:
        return RunConfig(
            task=self.task,
            model=self.model,
            optimizer=self.optimizer,
            schedule=schedule,
            methods=self.methods,
            epochs=self.run_epochs(schedule),
            batch_size=self.batch_size,
            grad_accum=self.grad_accum,
            seed=seed,
        )

    def cycle_plan(self):
        return cycle_end_steps(self.cyclic_schedule())


_SCHEMA = {
    "": {"label"},
    "task": {"kind", "classes", "samples", "label_noise", "dim", "separation",
             "noise", "side", "texture_scale"},
    "model": {"kind", "widths", "channels", "downsample"},
    "optimizer": {"eta_max", "eta_min", "momentum", "weight_decay"},
    "methods": {"blurpool", "channels_last", "label_smoothing", "mixup",
                "alpha_ls", "alpha_mx"},
    "run": {"mode", "warmup_epochs", "batch_size", "grad_accum", "seeds",
            "durations", "t0", "growth", "cycles", "periods", "epochs", "shape"},
}


def _check_keys(doc: dict) -> list[str]:
    errors = []
    for key, value in doc.items():
        if key in _SCHEMA and key != "" and isinstance(value, dict):
            for sub in value:
                if sub not in _SCHEMA[key]:
                    errors.append(f"unknown key [{key}] {sub!r}")
        elif key in _SCHEMA[""]:
            continue
        else:
            errors.append(f"unknown key {key!r}")
    return errors


def config_from_dict(doc: dict, out_dir: str = "") -> ExperimentConfig:
    """Materialize an ExperimentConfig from a parsed document, applying
    every default; raises ConfigError with the full problem list."""
    errors = _check_keys(doc)

    task_doc = dict(doc.get("task", {}))
    model_doc = dict(doc.get("model", {}))
    opt_doc = dict(doc.get("optimizer", {}))
    methods_doc = dict(doc.get("methods", {}))
    run_doc = dict(doc.get("run", {}))

    t_def = TaskSpec()
    task = TaskSpec(
        kind=task_doc.get("kind", t_def.kind),
        classes=int(task_doc.get("classes", t_def.classes)),
        samples=int(task_doc.get("samples", t_def.samples)),
        label_noise=float(task_doc.get("label_noise", t_def.label_noise)),
        dim=int(task_doc.get("dim", t_def.dim)),
        separation=float(task_doc.get("separation", t_def.separation)),
        noise=float(task_doc.get("noise", t_def.noise)),
        side=int(task_doc.get("side", t_def.side)),
        texture_scale=float(task_doc.get("texture_scale", t_def.texture_scale)),
    )

    if "widths" in model_doc:
        widths = tuple(int(w) for w in model_doc["widths"])
    elif task.kind == "gaussian_mixture":
        widths = (task.dim, 64, task.classes)
    elif task.kind == "spirals":
        widths = (2, 64, task.classes)
    else:
        widths = (task.side * task.side, 64, task.classes)
    default_model_kind = "tiny_cnn" if task.kind == "synthetic_images" else "mlp"
    model = ModelConfig(
        kind=model_doc.get("kind", default_model_kind),
        widths=widths,
        channels=tuple(int(c) for c in model_doc.get("channels", (8, 16))),
        downsample=model_doc.get("downsample", "stride"),
    )

    batch_size = int(run_doc.get("batch_size", 128))
    grad_accum = int(run_doc.get("grad_accum", 1))
    default_lr = REFERENCE_LR * (batch_size * grad_accum) / REFERENCE_BATCH
    o_def = OptimizerConfig()
    optimizer = OptimizerConfig(
        eta_max=float(opt_doc.get("eta_max", default_lr)),
        momentum=float(opt_doc.get("momentum", o_def.momentum)),
        weight_decay=float(opt_doc.get("weight_decay", o_def.weight_decay)),
    )

    m_def = MethodFlags()
    methods = MethodFlags(
        blurpool=bool(methods_doc.get("blurpool", False)),
        channels_last=bool(methods_doc.get("channels_last", False)),
        label_smoothing=bool(methods_doc.get("label_smoothing", False)),
        mixup=bool(methods_doc.get("mixup", False)),
        alpha_ls=float(methods_doc.get("alpha_ls", m_def.alpha_ls)),
        alpha_mx=float(methods_doc.get("alpha_mx", m_def.alpha_mx)),
    )

    if "mode" not in run_doc:
        errors.append("missing required key [run] mode")
    mode = run_doc.get("mode", "sweep")

    config = ExperimentConfig(
        label=str(doc.get("label", methods.label())),
        task=task,
        model=model,
        optimizer=optimizer,
        methods=methods,
        mode=mode,
        warmup_epochs=int(run_doc.get("warmup_epochs", 4)),
        batch_size=batch_size,
        grad_accum=grad_accum,
        seeds=tuple(int(s) for s in run_doc.get("seeds", (1, 2, 3))),
        eta_min=float(opt_doc.get("eta_min", 0.0)),
        durations=tuple(int(d) for d in run_doc.get("durations", ())),
        t0=int(run_doc.get("t0", 0)),
        growth=float(run_doc.get("growth", 2.0)),
        cycles=int(run_doc.get("cycles", 0)),
        periods=tuple(int(p) for p in run_doc.get("periods", ())),
        epochs=int(run_doc.get("epochs", 0)),
        shape=str(run_doc.get("shape", "cosine")),
        out_dir=out_dir,
    )
    errors += config.validate()
    if errors:
        raise ConfigError("; ".join(errors))
    return config


def parse_config(path, out_dir: str = "") -> ExperimentConfig:
    """Parse and validate a TOML experiment config file."""
    text = Path(path).read_bytes()
    try:
        doc = tomllib.loads(text.decode("utf-8"))
    except tomllib.TOMLDecodeError as err:
        raise ConfigError(f"{path}: {err}") from err
    return config_from_dict(doc, out_dir=out_dir)


def reference_config_path() -> Path:
    """The shipped reference config matching the original large-scale recipe."""
    return Path(__file__).parent / "configs" / "imagenet-shape.toml"
