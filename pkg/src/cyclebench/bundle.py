"""Experiment orchestration and on-disk results bundles.

A bundle directory holds the materialized config snapshot, one CSV of
per-epoch metrics per run, curve JSONs, and a summary.  Runs may execute
concurrently; all file writes happen from the orchestrating thread after
every run has finished.
"""

from __future__ import annotations

import csv
import json
import socket
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .config import ConfigError, ExperimentConfig, config_from_dict
from .schedule import cycle_end_steps
from .tradeoff import (
    CurveError,
    CYCLIC,
    RelativeCurve,
    STANDARD,
    TradeoffCurve,
    TradeoffPoint,
    cross_kind_gap,
    cyclic_curve,
    relative_improvement,
    speedup_ratio,
    standard_curve,
    wall_clock_totals,
)
from .train import MetricsLog, TrainError, train

CSV_HEADER = ["epoch", "step", "lr", "train_loss", "train_acc", "val_acc", "wall_clock_s"]


@dataclass
class ResultsBundle:
    config: ExperimentConfig
    fingerprint: str
    logs: dict = field(default_factory=dict)      # run key -> MetricsLog
    curves: list = field(default_factory=list)    # TradeoffCurve
    failures: list = field(default_factory=list)  # {"run": key, "error": str}
    meta: dict = field(default_factory=dict)

    @property
    def partial(self) -> bool:
        return bool(self.failures)

    def curve(self, kind: str) -> TradeoffCurve | None:
        for c in self.curves:
            if c.kind == kind and "period" not in c.meta:
                return c
        return None


def _planned_runs(config: ExperimentConfig) -> list[tuple[str, object, int]]:
    """(run key, schedule, seed) for every training run the mode implies."""
    runs = []
    if config.mode == "sweep":
        for d in config.durations:
            for s in config.seeds:
                runs.append((f"d{d:04d}_s{s}", config.sweep_schedule(d), s))
    elif config.mode == "cyclic":
        for s in config.seeds:
            runs.append((f"cyclic_s{s}", config.cyclic_schedule(), s))
    else:
        for p in config.periods:
            for s in config.seeds:
                runs.append((f"p{p:03d}_s{s}", config.constant_schedule(p), s))
    return runs


def _build_curves(config: ExperimentConfig, logs: dict, fingerprint: str) -> list:
    curves = []
    label = config.label
    if config.mode == "sweep":
        if logs:
            curves.append(standard_curve(list(logs.values()), label, fingerprint))
    elif config.mode == "cyclic":
        if logs:
            plan = config.cycle_plan()
            curves.append(cyclic_curve(list(logs.values()), plan, "window", label, fingerprint))
    else:
        for p in config.periods:
            group = [log for key, log in logs.items() if key.startswith(f"p{p:03d}_")]
            if not group:
                continue
            spec = config.constant_schedule(p)
            plan = cycle_end_steps(spec)
            curve = cyclic_curve(group, plan, "window", label, fingerprint)
            curves.append(
                TradeoffCurve(
                    kind=curve.kind,
                    method_set=curve.method_set,
                    points=curve.points,
                    fingerprint=curve.fingerprint,
                    meta={"period": p},
                )
            )
    return curves


def run_experiment(config: ExperimentConfig, jobs: int = 1) -> ResultsBundle:
    """Execute every run the config implies and assemble the bundle.

    Individual run failures never abort siblings; curves are built from
    the successful runs and the failures are recorded in the summary.
    """
    errors = config.validate()
    if errors:
        raise ConfigError("; ".join(errors))
    planned = _planned_runs(config)
    fingerprint = config.fingerprint()
    logs: dict = {}
    failures = []

    def _one(item):
        key, schedule, seed = item
        return key, train(config.run_config(schedule, seed))

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = {pool.submit(_one, item): item[0] for item in planned}
            for future, key in futures.items():
                try:
                    _, log = future.result()
                    logs[key] = log
                except (TrainError, ValueError) as err:
                    failures.append({"run": key, "error": str(err)})
    else:
        for item in planned:
            try:
                key, log = _one(item)
                logs[key] = log
            except (TrainError, ValueError) as err:
                failures.append({"run": item[0], "error": str(err)})

    logs = {k: logs[k] for k in sorted(logs)}
    curves = _build_curves(config, logs, fingerprint)
    meta = {
        "tool_version": __version__,
        "hostname": socket.gethostname(),
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "n_runs_planned": len(planned),
        "n_runs_ok": len(logs),
    }
    if config.mode == "cyclic" and config.growth > 1 and config.shape == "cosine":
        meta["predicted_speedup_ratio"] = speedup_ratio(config.growth, config.cycles)
    return ResultsBundle(config, fingerprint, logs, curves, failures, meta)


# Persistence

def _curve_to_dict(curve: TradeoffCurve, config: ExperimentConfig) -> dict:
    return {
        "kind": curve.kind,
        "method_set": curve.method_set,
        "points": [
            {
                "epochs": p.epochs,
                "wall_clock_s": p.wall_clock_s,
                "acc_mean": p.acc_mean,
                "acc_std": p.acc_std,
                "n_seeds": p.n_seeds,
                "interpolated": p.interpolated,
            }
            for p in curve.points
        ],
        "meta": {
            "fingerprint": curve.fingerprint,
            "d_decisions": {
                "alpha_ls": config.methods.alpha_ls,
                "alpha_mx": config.methods.alpha_mx,
                "eta_min": config.eta_min,
                "std_convention": "population",
            },
            **curve.meta,
        },
    }


def _curve_from_dict(doc: dict) -> TradeoffCurve:
    points = tuple(
        TradeoffPoint(
            epochs=p["epochs"],
            wall_clock_s=p["wall_clock_s"],
            acc_mean=p["acc_mean"],
            acc_std=p["acc_std"],
            n_seeds=p["n_seeds"],
            interpolated=p.get("interpolated", False),
        )
        for p in doc["points"]
    )
    meta = {k: v for k, v in doc["meta"].items() if k not in ("fingerprint", "d_decisions")}
    return TradeoffCurve(
        kind=doc["kind"],
        method_set=doc["method_set"],
        points=points,
        fingerprint=doc["meta"]["fingerprint"],
        meta=meta,
    )


def _curve_filename(curve: TradeoffCurve) -> str:
    suffix = f"_T{curve.meta['period']:03d}" if "period" in curve.meta else ""
    return f"curve_{curve.kind}{suffix}.json"


def write_bundle(bundle: ResultsBundle, out_dir) -> Path:
    out = Path(out_dir)
    (out / "runs").mkdir(parents=True, exist_ok=True)
    (out / "curves").mkdir(parents=True, exist_ok=True)

    config_doc = bundle.config.to_dict()
    config_doc["fingerprint"] = bundle.fingerprint
    (out / "config.json").write_text(json.dumps(config_doc, indent=2, sort_keys=True))

    for key, log in bundle.logs.items():
        with open(out / "runs" / f"{key}.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_HEADER)
            spe = log.steps_per_epoch
            for e in range(log.epochs):
                step = (e + 1) * spe
                writer.writerow(
                    [
                        e + 1,
                        step,
                        repr(log.lrs[step - 1]) if log.lrs else "",
                        repr(log.train_loss[e]),
                        repr(log.train_acc[e]),
                        repr(log.val_acc[e]),
                        repr(log.wall_clock_s[e]),
                    ]
                )

    for curve in bundle.curves:
        doc = _curve_to_dict(curve, bundle.config)
        (out / "curves" / _curve_filename(curve)).write_text(
            json.dumps(doc, indent=2, sort_keys=True)
        )

    summary = {
        "label": bundle.config.label,
        "mode": bundle.config.mode,
        "fingerprint": bundle.fingerprint,
        "failures": bundle.failures,
        "partial": bundle.partial,
        "runs": {
            key: {
                "seed": log.seed,
                "epochs": log.epochs,
                "schedule_kind": log.schedule_kind,
                "wall_clock_s": log.total_wall_clock_s,
                "final_val_acc": log.val_acc[-1] if log.val_acc else None,
            }
            for key, log in bundle.logs.items()
        },
        **bundle.meta,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    return out


def _log_from_csv(path: Path, seed: int, fingerprint: str, schedule_kind: str) -> MetricsLog:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    epochs = len(rows)
    spe = 0
    if rows:
        spe = int(rows[0]["step"]) // int(rows[0]["epoch"])
    return MetricsLog(
        lrs=[],  # per-step trace is not persisted; per-epoch lr is in the CSV
        train_loss=[float(r["train_loss"]) for r in rows],
        train_acc=[float(r["train_acc"]) for r in rows],
        val_acc=[float(r["val_acc"]) for r in rows],
        wall_clock_s=[float(r["wall_clock_s"]) for r in rows],
        seed=seed,
        config_fingerprint=fingerprint,
        schedule_kind=schedule_kind,
        epochs=epochs,
        steps_per_epoch=spe,
    )


def load_bundle(path) -> ResultsBundle:
    """Read a bundle directory back; curve floats round-trip bit-exactly."""
    root = Path(path)
    config_doc = json.loads((root / "config.json").read_text())
    fingerprint = config_doc.pop("fingerprint")
    config = config_from_dict(config_doc)
    if config.fingerprint() != fingerprint:
        raise CurveError(f"{root}: config snapshot does not match its fingerprint")

    summary = json.loads((root / "summary.json").read_text())
    curves = []
    for cpath in sorted((root / "curves").glob("*.json")):
        curve = _curve_from_dict(json.loads(cpath.read_text()))
        if curve.fingerprint != fingerprint:
            raise CurveError(
                f"{cpath.name}: curve fingerprint {curve.fingerprint} does not match "
                f"bundle config {fingerprint}"
            )
        curves.append(curve)

    logs = {}
    for key, info in summary.get("runs", {}).items():
        csv_path = root / "runs" / f"{key}.csv"
        if csv_path.exists():
            logs[key] = _log_from_csv(
                csv_path, info["seed"], fingerprint, info["schedule_kind"]
            )
    return ResultsBundle(
        config=config,
        fingerprint=fingerprint,
        logs=logs,
        curves=curves,
        failures=summary.get("failures", []),
        meta={k: v for k, v in summary.items() if k not in ("runs", "failures")},
    )


# Cross-bundle comparison

@dataclass
class ComparisonReport:
    baseline: str
    relative: list[RelativeCurve]
    gaps: dict              # label -> mean cyclic-minus-standard accuracy
    sign_agreement: dict    # label -> [{epochs, standard, cyclic, agree}]
    wall_clock: dict        # label -> WallClockReport
    curves: list            # every curve seen, for overlay plotting
    warnings: list

    def to_dict(self) -> dict:
        return {
            "baseline": self.baseline,
            "relative": [
                {
                    "kind": rc.kind,
                    "method_set": rc.method_set,
                    "baseline": rc.baseline,
                    "points": [
                        {"epochs": p.epochs, "delta": p.delta, "interpolated": p.interpolated}
                        for p in rc.points
                    ],
                }
                for rc in self.relative
            ],
            "gaps": self.gaps,
            "sign_agreement": self.sign_agreement,
            "wall_clock": {
                label: {
                    "standard_total_s": r.standard_total_s,
                    "cyclic_total_s": r.cyclic_total_s,
                    "measured_ratio": r.measured_ratio,
                    "predicted_ratio": r.predicted_ratio,
                    "duration_points": list(r.duration_points),
                    "n_standard_runs": r.n_standard_runs,
                    "n_cyclic_runs": r.n_cyclic_runs,
                }
                for label, r in self.wall_clock.items()
            },
            "warnings": self.warnings,
        }


def compare(bundles: list[ResultsBundle], baseline_label: str) -> ComparisonReport:
    """Relative curves, cyclic-vs-standard gaps, sign agreement, and wall
    clock ratios of every bundle against the baseline label."""
    if len(bundles) < 2:
        raise CurveError("compare needs at least two bundles")
    by_label: dict[str, dict[str, ResultsBundle]] = {}
    for b in bundles:
        kind = STANDARD if b.config.mode == "sweep" else CYCLIC
        by_label.setdefault(b.config.label, {})[kind] = b
    if baseline_label not in by_label:
        raise CurveError(f"baseline label {baseline_label!r} not among bundles")

    base = by_label[baseline_label]
    warnings = []
    relative: list[RelativeCurve] = []
    gaps = {}
    agreement = {}
    wall = {}

    for label, group in by_label.items():
        std_curve = group[STANDARD].curve(STANDARD) if STANDARD in group else None
        cyc_curve = group[CYCLIC].curve(CYCLIC) if CYCLIC in group else None
        if std_curve and cyc_curve:
            gaps[label] = cross_kind_gap(cyc_curve, std_curve)
            cyc_bundle = group[CYCLIC]
            if cyc_bundle.config.mode == "cyclic":
                try:
                    wall[label] = wall_clock_totals(
                        list(group[STANDARD].logs.values()),
                        list(cyc_bundle.logs.values()),
                        cyc_bundle.config.cycle_plan(),
                        cyc_bundle.config.growth,
                    )
                except CurveError as err:
                    warnings.append(f"{label}: wall clock skipped ({err})")
        if label == baseline_label:
            continue
        rel_by_kind = {}
        for kind in (STANDARD, CYCLIC):
            mine = group.get(kind)
            theirs = base.get(kind)
            if mine is None or theirs is None:
                warnings.append(f"{label}: no {kind} bundle to compare")
                continue
            mc, bc = mine.curve(kind), theirs.curve(kind)
            if mc is None or bc is None:
                warnings.append(f"{label}: missing {kind} curve")
                continue
            rc = relative_improvement(mc, bc)
            relative.append(rc)
            rel_by_kind[kind] = {p.epochs: p.delta for p in rc.points}
        if len(rel_by_kind) == 2:
            shared = sorted(set(rel_by_kind[STANDARD]) & set(rel_by_kind[CYCLIC]))
            agreement[label] = [
                {
                    "epochs": e,
                    "standard": rel_by_kind[STANDARD][e],
                    "cyclic": rel_by_kind[CYCLIC][e],
                    "agree": rel_by_kind[STANDARD][e] * rel_by_kind[CYCLIC][e] >= 0,
                }
                for e in shared
            ]

    curves = [c for b in bundles for c in b.curves]
    return ComparisonReport(
        baseline=baseline_label,
        relative=relative,
        gaps=gaps,
        sign_agreement=agreement,
        wall_clock=wall,
        curves=curves,
        warnings=warnings,
    )
