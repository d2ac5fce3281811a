"""Accuracy-vs-time tradeoff curves and their comparisons.

A standard curve aggregates the final accuracy of one full run per
training duration.  A cyclic curve is pulled out of a single warm-restart
run by taking one accuracy peak per cycle.  Relative curves subtract a
baseline to expose what a training method actually buys at each budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .schedule import CyclePlan
from .train import MetricsLog

STANDARD = "standard"
CYCLIC = "cyclic"


class CurveError(ValueError):
    """Inconsistent inputs to a curve construction or comparison."""


@dataclass(frozen=True)
class TradeoffPoint:
    epochs: float
    wall_clock_s: float
    acc_mean: float
    acc_std: float
    n_seeds: int
    interpolated: bool = False


@dataclass(frozen=True)
class TradeoffCurve:
    kind: str
    method_set: str
    points: tuple[TradeoffPoint, ...]
    fingerprint: str = ""
    meta: dict = field(default_factory=dict)

    def epoch_grid(self) -> tuple[float, ...]:
        return tuple(p.epochs for p in self.points)


@dataclass(frozen=True)
class RelativePoint:
    epochs: float
    delta: float
    interpolated: bool


@dataclass(frozen=True)
class RelativeCurve:
    kind: str
    method_set: str
    baseline: str
    points: tuple[RelativePoint, ...]


@dataclass(frozen=True)
class WallClockReport:
    standard_total_s: float
    cyclic_total_s: float
    measured_ratio: float
    predicted_ratio: float | None
    duration_points: tuple[float, ...]
    n_standard_runs: int
    n_cyclic_runs: int


def population_std(values) -> float:
    """Seed scatter convention: divide by n, not n-1."""
    a = np.sort(np.asarray(values, dtype=float))
    return float(np.sqrt(np.mean((a - a.mean()) ** 2)))


def _seed_mean(values) -> float:
    # summing in sorted order makes seed aggregation exactly
    # permutation-invariant
    return float(np.mean(np.sort(np.asarray(values, dtype=float))))


def speedup_ratio(growth: float, cycles: int) -> float:
    """Sweep epochs over single-run epochs when both sample the same points:
    (1 - r**n) / ((1 - r) * r**(n-1)) for period growth r and n cycles."""
    if growth <= 1:
        raise ValueError("speedup ratio needs growth factor > 1")
    if cycles < 1:
        raise ValueError("cycle count below 1")
    return (1.0 - growth**cycles) / ((1.0 - growth) * growth ** (cycles - 1))


def _fingerprint_of(logs: list[MetricsLog], override: str | None) -> str:
    if override is not None:
        return override
    prints = sorted({log.config_fingerprint for log in logs})
    if len(prints) == 1:
        return prints[0]
    import hashlib

    return hashlib.sha256("|".join(prints).encode()).hexdigest()[:16]


def standard_curve(
    runs: list[MetricsLog],
    method_set: str = "baseline",
    fingerprint: str | None = None,
) -> TradeoffCurve:
    """One point per distinct duration: mean/std of final-epoch accuracy."""
    if not runs:
        raise CurveError("no runs supplied")
    kinds = {log.schedule_kind for log in runs}
    if kinds != {"CosineDecay"}:
        raise CurveError(f"standard curves need CosineDecay runs, got {sorted(kinds)}")
    seen = set()
    for log in runs:
        key = (log.epochs, log.seed)
        if key in seen:
            raise CurveError(f"duplicate (duration, seed) run {key}")
        seen.add(key)
    by_duration: dict[int, list[MetricsLog]] = {}
    for log in runs:
        by_duration.setdefault(log.epochs, []).append(log)
    points = []
    for duration in sorted(by_duration):
        group = by_duration[duration]
        finals = [log.val_acc[-1] for log in group]
        walls = [log.total_wall_clock_s for log in group]
        points.append(
            TradeoffPoint(
                epochs=float(duration),
                wall_clock_s=_seed_mean(walls),
                acc_mean=_seed_mean(finals),
                acc_std=population_std(finals),
                n_seeds=len(group),
            )
        )
    return TradeoffCurve(
        kind=STANDARD,
        method_set=method_set,
        points=tuple(points),
        fingerprint=_fingerprint_of(runs, fingerprint),
    )


def _cycle_windows(plan: CyclePlan) -> list[tuple[int, int]]:
    """Per-cycle (first_epoch, last_epoch] windows as integer epoch ranges."""
    windows = []
    prev = 0
    for end in plan.cycle_end_epochs:
        end_i = math.floor(end + 1e-9)
        if end_i <= prev:
            raise CurveError(f"cycle window ({prev}, {end}] holds no whole epoch")
        windows.append((prev, end_i))
        prev = end_i
    return windows


def cycle_peaks(log: MetricsLog, plan: CyclePlan, peak: str = "window") -> list[float]:
    """One accuracy per cycle: the in-window maximum ("window", default)
    or strictly the cycle-end epoch's value ("end")."""
    if peak not in ("window", "end"):
        raise ValueError(f"unknown peak rule {peak!r}")
    windows = _cycle_windows(plan)
    if windows[-1][1] != log.epochs:
        raise CurveError(
            f"plan ends at epoch {windows[-1][1]} but log has {log.epochs} epochs"
        )
    out = []
    for lo, hi in windows:
        vals = log.val_acc[lo:hi]  # epochs lo+1 .. hi (records are 1-based)
        out.append(max(vals) if peak == "window" else vals[-1])
    return out


def cyclic_curve(
    logs: MetricsLog | list[MetricsLog],
    plan: CyclePlan,
    peak: str = "window",
    method_set: str = "baseline",
    fingerprint: str | None = None,
) -> TradeoffCurve:
    """Tradeoff curve from warm-restart runs: one point per cycle.

    Accepts one log or one per seed; per-cycle peaks are aggregated to
    mean/std across seeds.
    """
    if isinstance(logs, MetricsLog):
        logs = [logs]
    if not logs:
        raise CurveError("no runs supplied")
    for log in logs:
        if log.schedule_kind not in ("WarmRestarts", "Sawtooth"):
            raise CurveError(f"cyclic curves need cyclic runs, got {log.schedule_kind}")
    peaks = np.array([cycle_peaks(log, plan, peak) for log in logs])  # (seeds, cycles)
    windows = _cycle_windows(plan)
    points = []
    for j, (end_epoch, (_, hi)) in enumerate(zip(plan.cycle_end_epochs, windows)):
        walls = [log.wall_clock_s[hi - 1] for log in logs]
        points.append(
            TradeoffPoint(
                epochs=float(end_epoch),
                wall_clock_s=_seed_mean(walls),
                acc_mean=_seed_mean(peaks[:, j]),
                acc_std=population_std(peaks[:, j]),
                n_seeds=len(logs),
            )
        )
    return TradeoffCurve(
        kind=CYCLIC,
        method_set=method_set,
        points=tuple(points),
        fingerprint=_fingerprint_of(logs, fingerprint),
    )


def _interp_log2(curve: TradeoffCurve, epochs: float) -> tuple[float, bool]:
    """Baseline accuracy at ``epochs``: exact when on the grid, otherwise
    piecewise-linear in log2(epochs).  No extrapolation."""
    xs = curve.epoch_grid()
    ys = [p.acc_mean for p in curve.points]
    for x, y in zip(xs, ys):
        if x == epochs:
            return y, False
    if epochs < xs[0] or epochs > xs[-1]:
        raise CurveError(f"duration {epochs} outside baseline range [{xs[0]}, {xs[-1]}]")
    i = max(j for j in range(len(xs)) if xs[j] < epochs)
    t = (math.log2(epochs) - math.log2(xs[i])) / (math.log2(xs[i + 1]) - math.log2(xs[i]))
    return ys[i] + t * (ys[i + 1] - ys[i]), True


def relative_improvement(curve: TradeoffCurve, baseline: TradeoffCurve) -> RelativeCurve:
    """Pointwise (curve - baseline) accuracy at the curve's durations.

    Durations missing from the baseline grid are interpolated in
    log2(epochs) and flagged; durations outside the baseline range are
    dropped.
    """
    if curve.kind != baseline.kind:
        raise CurveError(f"kind mismatch: {curve.kind} vs {baseline.kind}")
    if not curve.points or not baseline.points:
        raise CurveError("empty curve")
    lo, hi = baseline.epoch_grid()[0], baseline.epoch_grid()[-1]
    points = []
    for p in curve.points:
        if p.epochs < lo or p.epochs > hi:
            continue
        base_acc, interpolated = _interp_log2(baseline, p.epochs)
        points.append(RelativePoint(p.epochs, p.acc_mean - base_acc, interpolated))
    if not points:
        raise CurveError("no overlapping durations between curve and baseline")
    return RelativeCurve(
        kind=curve.kind,
        method_set=curve.method_set,
        baseline=baseline.method_set,
        points=tuple(points),
    )


def cross_kind_gap(cyclic: TradeoffCurve, standard: TradeoffCurve) -> float:
    """Mean (cyclic - standard) accuracy over the cyclic curve's durations
    that fall inside the standard curve's range."""
    deltas = []
    for p in cyclic.points:
        lo, hi = standard.epoch_grid()[0], standard.epoch_grid()[-1]
        if p.epochs < lo or p.epochs > hi:
            continue
        base_acc, _ = _interp_log2(standard, p.epochs)
        deltas.append(p.acc_mean - base_acc)
    if not deltas:
        raise CurveError("no overlapping durations between cyclic and standard curves")
    return float(np.mean(deltas))


def aggregate_seeds(curves: list[TradeoffCurve]) -> TradeoffCurve:
    """Combine per-seed curves on one grid into mean/std points."""
    if not curves:
        raise CurveError("no curves supplied")
    first = curves[0]
    for c in curves[1:]:
        if c.kind != first.kind:
            raise CurveError("kind mismatch across seed curves")
        if c.method_set != first.method_set:
            raise CurveError("method_set mismatch across seed curves")
        if c.epoch_grid() != first.epoch_grid():
            raise CurveError("duration grid mismatch across seed curves")
    points = []
    for j in range(len(first.points)):
        accs = [c.points[j].acc_mean for c in curves]
        walls = [c.points[j].wall_clock_s for c in curves]
        points.append(
            TradeoffPoint(
                epochs=first.points[j].epochs,
                wall_clock_s=_seed_mean(walls),
                acc_mean=_seed_mean(accs),
                acc_std=population_std(accs),
                n_seeds=len(curves),
            )
        )
    return TradeoffCurve(
        kind=first.kind,
        method_set=first.method_set,
        points=tuple(points),
        fingerprint=first.fingerprint,
        meta=dict(first.meta),
    )


def wall_clock_totals(
    standard_runs: list[MetricsLog],
    cyclic_runs: MetricsLog | list[MetricsLog],
    plan: CyclePlan,
    growth: float,
) -> WallClockReport:
    """Measured sweep-vs-single-run wall clock, with the closed-form
    prediction for multiplicative periods alongside."""
    if isinstance(cyclic_runs, MetricsLog):
        cyclic_runs = [cyclic_runs]
    if not standard_runs or not cyclic_runs:
        raise CurveError("both run sets must be non-empty")
    sweep_durations = sorted({float(log.epochs) for log in standard_runs})
    ends = [float(e) for e in plan.cycle_end_epochs]
    if sweep_durations != ends:
        raise CurveError(
            f"sweep samples {sweep_durations} but cycles end at {ends}"
        )
    std_total = float(sum(log.total_wall_clock_s for log in standard_runs))
    cyc_total = float(sum(log.total_wall_clock_s for log in cyclic_runs))
    n_cycles = len(ends)
    predicted = speedup_ratio(growth, n_cycles) if growth > 1 else None
    return WallClockReport(
        standard_total_s=std_total,
        cyclic_total_s=cyc_total,
        measured_ratio=std_total / cyc_total,
        predicted_ratio=predicted,
        duration_points=tuple(ends),
        n_standard_runs=len(standard_runs),
        n_cyclic_runs=len(cyclic_runs),
    )
