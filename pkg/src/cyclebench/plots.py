"""Static SVG plots for bundles and comparison reports.

Output is deterministic: rendering the same inputs twice produces
byte-identical files.
"""

from __future__ import annotations

from pathlib import Path

from .bundle import ComparisonReport, ResultsBundle
from .schedule import lr_sequence
from .svg import PALETTE, Series, bar_chart, line_chart
from .tradeoff import CYCLIC, TradeoffCurve


def _curve_series(curve: TradeoffCurve, idx: int, x_axis: str) -> Series:
    if not curve.points:
        raise ValueError(f"curve {curve.method_set!r} has no points")
    xs = [p.wall_clock_s if x_axis == "wall_clock" else p.epochs for p in curve.points]
    label = curve.method_set
    if "period" in curve.meta:
        label += f" (T={curve.meta['period']})"
    label += f" [{curve.kind}]"
    return Series(
        xs=xs,
        ys=[p.acc_mean for p in curve.points],
        label=label,
        color=PALETTE[idx % len(PALETTE)],
        dashed=curve.kind == CYCLIC,
        y_err=[p.acc_std for p in curve.points],
    )


def _tradeoff_chart(curves: list[TradeoffCurve], x_axis: str) -> str:
    series = [_curve_series(c, i, x_axis) for i, c in enumerate(curves)]
    x_label = "wall clock (s)" if x_axis == "wall_clock" else "training epochs"
    return line_chart(series, x_label, "top-1 validation accuracy", "Accuracy vs. training time")


def _schedule_series(bundle: ResultsBundle) -> list[Series]:
    config = bundle.config
    series = []
    if config.mode == "sweep":
        specs = [(f"{d} epochs", config.sweep_schedule(d)) for d in config.durations]
    elif config.mode == "cyclic":
        specs = [(config.label, config.cyclic_schedule())]
    else:
        specs = [(f"T={p}", config.constant_schedule(p)) for p in config.periods]
    for i, (label, spec) in enumerate(specs):
        lrs = lr_sequence(spec)
        series.append(
            Series(
                xs=list(range(len(lrs))),
                ys=lrs,
                label=label,
                color=PALETTE[i % len(PALETTE)],
                markers=False,
            )
        )
    return series


def render_plots(target: ResultsBundle | ComparisonReport, out_dir) -> list[Path]:
    """Write every plot the target supports; returns the file paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    if isinstance(target, ResultsBundle):
        if not target.curves:
            raise ValueError("bundle has no curves to plot")
        for x_axis, name in (("wall_clock", "tradeoff_wallclock.svg"),
                             ("epochs", "tradeoff_epochs.svg")):
            path = out / name
            path.write_text(_tradeoff_chart(target.curves, x_axis))
            written.append(path)
        path = out / "schedule_trace.svg"
        path.write_text(
            line_chart(
                _schedule_series(target),
                "optimizer step",
                "learning rate",
                "Learning rate schedule",
            )
        )
        written.append(path)
        return written

    report = target
    if not report.curves:
        raise ValueError("report has no curves to plot")
    path = out / "tradeoff_overlay.svg"
    path.write_text(_tradeoff_chart(report.curves, "epochs"))
    written.append(path)

    for kind in ("standard", "cyclic"):
        rels = [rc for rc in report.relative if rc.kind == kind]
        if not rels:
            continue
        series = [
            Series(
                xs=[p.epochs for p in rc.points],
                ys=[p.delta for p in rc.points],
                label=f"{rc.method_set} - {rc.baseline}",
                color=PALETTE[i % len(PALETTE)],
                dashed=kind == "cyclic",
            )
            for i, rc in enumerate(rels)
        ]
        path = out / f"relative_{kind}.svg"
        path.write_text(
            line_chart(
                series,
                "training epochs",
                "accuracy delta vs. baseline",
                f"Relative improvement ({kind})",
            )
        )
        written.append(path)

    if report.wall_clock:
        labels = sorted(report.wall_clock)
        groups = {
            "standard sweep": [report.wall_clock[l].standard_total_s for l in labels],
            "cyclic run": [report.wall_clock[l].cyclic_total_s for l in labels],
        }
        path = out / "wallclock_totals.svg"
        path.write_text(bar_chart(labels, groups, "total wall clock (s)", "Curve construction cost"))
        written.append(path)
    return written
