"""Learning rate schedules evaluated statelessly at any optimizer step.

All schedules share the same anatomy: an optional linear warmup to
``eta_max`` followed by a shape (single cosine decay, cosine cycles with
warm restarts, triangular sawtooth cycles, or a constant plateau).
Everything is denominated in optimizer steps; ``steps_per_epoch`` converts
epoch-denominated period definitions into steps.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass


class ScheduleError(ValueError):
    """Raised for invalid schedule specs or out-of-range queries."""


@dataclass(frozen=True)
class CosineDecay:
    """Single cosine decay spanning the whole run (``total`` includes warmup)."""

    total: int


@dataclass(frozen=True)
class WarmRestarts:
    """Cosine cycles restarting at eta_max; cycle i lasts round(first_period * growth**i) steps."""

    first_period: int
    growth: float = 2.0
    cycles: int = 1


@dataclass(frozen=True)
class Sawtooth:
    """Triangular cycles: linear ramp eta_min -> eta_max -> eta_min, constant period."""

    period: int
    cycles: int = 1


@dataclass(frozen=True)
class Constant:
    """Flat at eta_max after warmup (``total`` includes warmup)."""

    total: int


Shape = CosineDecay | WarmRestarts | Sawtooth | Constant

CYCLIC_SHAPES = (WarmRestarts, Sawtooth)


@dataclass(frozen=True)
class ScheduleSpec:
    """Declarative learning rate schedule, evaluable at any step via :func:`lr_at`."""

    eta_max: float
    eta_min: float = 0.0
    warmup_steps: int = 0
    shape: Shape = Constant(total=1)
    steps_per_epoch: int = 1

    @staticmethod
    def from_epochs(
        eta_max: float,
        shape: Shape,
        warmup_epochs: int = 0,
        eta_min: float = 0.0,
        steps_per_epoch: int = 1,
    ) -> "ScheduleSpec":
        """Build a spec whose warmup and shape are given in epochs.

        The shape's period fields are scaled by ``steps_per_epoch``; growth
        factors and cycle counts are untouched.
        """
        k = steps_per_epoch
        if isinstance(shape, CosineDecay):
            scaled: Shape = CosineDecay(total=shape.total * k)
        elif isinstance(shape, WarmRestarts):
            scaled = WarmRestarts(shape.first_period * k, shape.growth, shape.cycles)
        elif isinstance(shape, Sawtooth):
            scaled = Sawtooth(shape.period * k, shape.cycles)
        elif isinstance(shape, Constant):
            scaled = Constant(total=shape.total * k)
        else:
            raise ScheduleError(f"unknown shape {shape!r}")
        return ScheduleSpec(
            eta_max=eta_max,
            eta_min=eta_min,
            warmup_steps=warmup_epochs * k,
            shape=scaled,
            steps_per_epoch=k,
        )


@dataclass(frozen=True)
class CyclePlan:
    """Absolute end positions of each cycle, in steps and in epochs."""

    cycle_end_steps: tuple[int, ...]
    cycle_end_epochs: tuple[float, ...]


def validate(spec: ScheduleSpec) -> list[str]:
    """Return every invariant violation in ``spec`` (empty list means valid)."""
    errors = []
    if not (math.isfinite(spec.eta_max) and math.isfinite(spec.eta_min)):
        errors.append("learning rates must be finite")
    if spec.eta_min < 0:
        errors.append("eta_min below 0")
    if spec.eta_max < 0:
        errors.append("eta_max below 0")
    if spec.eta_min > spec.eta_max:
        errors.append("eta_min exceeds eta_max")
    if spec.warmup_steps < 0:
        errors.append("warmup_steps below 0")
    if spec.steps_per_epoch < 1:
        errors.append("steps_per_epoch below 1")
    shape = spec.shape
    if isinstance(shape, WarmRestarts):
        if shape.first_period < 1:
            errors.append("first cycle period below 1 step")
        if shape.growth < 1:
            errors.append("growth factor below 1")
        if shape.cycles < 1:
            errors.append("cycle count below 1")
    elif isinstance(shape, Sawtooth):
        if shape.period < 1:
            errors.append("sawtooth period below 1 step")
        if shape.cycles < 1:
            errors.append("cycle count below 1")
    elif isinstance(shape, (CosineDecay, Constant)):
        if shape.total < 1:
            errors.append("total steps below 1")
        elif shape.total < spec.warmup_steps:
            # equality is allowed: an all-warmup run never evaluates the tail
            errors.append("total steps below warmup")
    else:
        errors.append(f"unknown shape {shape!r}")
    return errors


def _check(spec: ScheduleSpec) -> None:
    errors = validate(spec)
    if errors:
        raise ScheduleError("invalid schedule spec: " + "; ".join(errors))


def cycle_lengths(spec: ScheduleSpec) -> list[int]:
    """Per-cycle lengths in steps, rounded to the nearest step (ties to even)."""
    shape = spec.shape
    if isinstance(shape, WarmRestarts):
        return [round(shape.first_period * shape.growth**i) for i in range(shape.cycles)]
    if isinstance(shape, Sawtooth):
        return [shape.period] * shape.cycles
    raise ScheduleError(f"shape {type(shape).__name__} has no cycles")


def total_steps(spec: ScheduleSpec) -> int:
    """Total schedule length in optimizer steps, warmup included."""
    _check(spec)
    shape = spec.shape
    if isinstance(shape, (CosineDecay, Constant)):
        return shape.total
    return spec.warmup_steps + sum(cycle_lengths(spec))


def cycle_end_steps(spec: ScheduleSpec) -> CyclePlan:
    """Cumulative cycle-end positions (warmup offset included) of a cyclic spec."""
    _check(spec)
    if not isinstance(spec.shape, CYCLIC_SHAPES):
        raise ScheduleError(
            f"cycle plan undefined for non-cyclic shape {type(spec.shape).__name__}"
        )
    ends = []
    pos = spec.warmup_steps
    for length in cycle_lengths(spec):
        pos += length
        ends.append(pos)
    return CyclePlan(
        cycle_end_steps=tuple(ends),
        cycle_end_epochs=tuple(e / spec.steps_per_epoch for e in ends),
    )


def _cosine(eta_min: float, eta_max: float, t_cur: int, t_i: int) -> float:
    if t_cur == 0:
        return eta_max  # cos(0) = 1; branch keeps restart boundaries exact
    return eta_min + 0.5 * (eta_max - eta_min) * (1.0 + math.cos(t_cur / t_i * math.pi))


def lr_at(spec: ScheduleSpec, step: int) -> float:
    """Learning rate at an optimizer step.

    Warmup rises linearly from eta_max/warmup_steps at step 0 and reaches
    eta_max exactly at the final warmup step.  After warmup, the active
    cycle is located and the phase within it is (steps since cycle start)
    divided by the cycle length, so the first step of every cycle returns
    eta_max exactly and the final step stops one step short of the trough.
    """
    _check(spec)
    n = total_steps(spec)
    if not 0 <= step < n:
        raise ScheduleError(f"step {step} outside [0, {n})")
    if step < spec.warmup_steps:
        return spec.eta_max * (step + 1) / spec.warmup_steps

    shape = spec.shape
    t = step - spec.warmup_steps
    if isinstance(shape, Constant):
        return spec.eta_max
    if isinstance(shape, CosineDecay):
        return _cosine(spec.eta_min, spec.eta_max, t, shape.total - spec.warmup_steps)

    lengths = cycle_lengths(spec)
    starts = [0]
    for length in lengths[:-1]:
        starts.append(starts[-1] + length)
    i = bisect_right(starts, t) - 1
    t_cur = t - starts[i]
    t_i = lengths[i]
    if isinstance(shape, WarmRestarts):
        return _cosine(spec.eta_min, spec.eta_max, t_cur, t_i)
    # Sawtooth: peak at mid-cycle, troughs at cycle boundaries.
    phase = t_cur / t_i
    return spec.eta_min + (spec.eta_max - spec.eta_min) * (1.0 - abs(2.0 * phase - 1.0))


def lr_sequence(spec: ScheduleSpec) -> list[float]:
    """The full per-step learning rate trace for the spec."""
    return [lr_at(spec, s) for s in range(total_steps(spec))]
