"""Command-line driver wiring the modules into reproducible experiments.

Every command takes a declarative config and an output directory, writes its
artifacts idempotently (reruns produce byte-identical files), and records the
fully resolved config plus a run id in ``manifest.json`` — the one artifact
that carries a timestamp. Exit codes: 2 config error, 3 data error,
4 training failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import dataset as ds
from . import errors as err
from .ablation import covariate_sweep, history_sweep, importance
from .anomaly import AnomalyParams, detect_anomalies, events_to_json
from .baselines import BaselineSpec
from .config import ExperimentConfig, build_search_space, load_config
from .evaluation import EvalReport, aggregate_seeds, evaluate, forecast_horizon_breakdown
from .hyperopt import search
from .models import ModelSpec, load_model, save_model, predict_batch
from .pipeline import prepare_frame, train_on_plan
from .preprocess import build_windows
from .synthpilot import generate

DATA_ENV = "DENITLAB_DATA"

_CONFIG_ERRORS = (err.InvalidConfig, err.InvalidSpec)
_DATA_ERRORS = (err.MissingColumn, err.UnparsableTimestamp, err.UnparsableValue,
                err.NonMonotonicTime, err.OffGridTimestamp, err.FrameTooShort,
                err.InvalidFractions, err.ZeroVarianceColumn, err.EmptyRanges,
                err.BadParams, err.MaskTouchesBoundary, err.NoAdmissibleWindows,
                err.EmptyTraining, err.InsufficientHistory, err.SpecMismatch,
                err.GuardrailExceeded, err.EmptyTable, err.EmptyReports,
                err.MixedGroups, err.LengthMismatch, err.NonFinite,
                err.NonFiniteInput, err.WindowCrossesGap, FileNotFoundError)
_TRAIN_ERRORS = (err.NonFiniteLoss, err.AllTrialsFailed, err.EmptyWindows,
                 err.DimensionMismatch)


def _write_manifest(config: ExperimentConfig, out: Path, command: str) -> None:
    manifest = {
        "command": command,
        "run_id": config.run_id(),
        "written_at": datetime.now(timezone.utc).isoformat(),
        "config": config.resolved_dict(),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2))


def _load_frame(config: ExperimentConfig, dataset_override: str | None):
    """Source the frame (CSV path, synth config, or DENITLAB_DATA), then clean it."""
    path = dataset_override or config.dataset
    if path is None and config.synth is None:
        path = os.environ.get(DATA_ENV)
    if path is not None:
        frame = ds.load_csv(path)
    elif config.synth is not None:
        frame, _ = generate(config.synth)
    else:
        raise err.InvalidConfig(
            f"no dataset: set 'dataset' or 'synth' in the config, pass --dataset, "
            f"or export {DATA_ENV}")
    return prepare_frame(frame, config.cleaning)


def _model_specs(config: ExperimentConfig, out: Path) -> list[ModelSpec]:
    specs = []
    for arch in config.archs:
        if config.use_best_specs:
            best_path = out / f"best_spec_{arch}.json"
            if not best_path.exists():
                raise err.InvalidConfig(
                    f"use_best_specs set but {best_path} is missing; run hyperopt first")
            base = ModelSpec.from_dict(json.loads(best_path.read_text()))
            base = replace(base, task=config.task)
        else:
            base = ModelSpec(arch=arch, covariates=config.covariates, h=config.h,
                             task=config.task,
                             hyperparams=dict(config.hyperparams.get(arch, {})))
        for seed in config.seeds:
            specs.append(base.with_seed(int(seed)))
    return specs


def _model_path(out: Path, spec: ModelSpec) -> Path:
    return out / "models" / f"{spec.arch}_seed{spec.seed}.bin"


def cmd_synth(config: ExperimentConfig, out: Path, args) -> None:
    if config.synth is None:
        raise err.InvalidConfig("synth command needs a 'synth' section")
    frame, schedule = generate(config.synth)
    ds.save_csv(frame, out / "data.csv")
    (out / "faults.json").write_text(schedule.to_json())
    print(f"wrote {out / 'data.csv'} ({len(frame)} rows) and {out / 'faults.json'}")


def cmd_train(config: ExperimentConfig, out: Path, args) -> None:
    frame, mask = _load_frame(config, args.dataset)
    (out / "cleaning_mask.json").write_text(mask.to_json())
    plan = ds.make_final_split(frame, config.final_split.train_fraction,
                               config.final_split.val_fraction)
    (out / "models").mkdir(exist_ok=True)
    logs = {}
    first = True
    for spec in _model_specs(config, out):
        model, log, _ = train_on_plan(spec, frame, plan)
        save_model(model, _model_path(out, spec))
        if first:
            save_model(model, out / "model.bin")
            first = False
        logs[f"{spec.arch}_seed{spec.seed}"] = {
            "stop_reason": log.stop_reason,
            "stopped_at": log.stopped_at,
            "train_loss": list(log.train_loss),
            "val_loss": list(log.val_loss),
        }
        print(f"trained {spec.arch} seed {spec.seed}: "
              f"{log.stop_reason} at {log.stopped_at}")
    (out / "train_logs.json").write_text(json.dumps(logs, indent=2))


def _report_rows(config: ExperimentConfig, out: Path, frame, plan) -> list[EvalReport]:
    rows: list[EvalReport] = []
    for spec in _model_specs(config, out):
        model = load_model(_model_path(out, spec))
        for split in ("train", "validation", "test"):
            rows.append(evaluate(model, frame, plan, config.task, split=split))
    if config.task == "nowcast":
        baselines = [BaselineSpec("training_mean"), BaselineSpec("running_mean")]
    else:
        baselines = [BaselineSpec("training_mean"), BaselineSpec("seasonal"),
                     BaselineSpec("trend_n", n=3), BaselineSpec("trend_n", n=6)]
    for b in baselines:
        for split in ("validation", "test"):
            rows.append(evaluate(b, frame, plan, config.task, split=split))
    return rows


def cmd_evaluate(config: ExperimentConfig, out: Path, args) -> None:
    frame, _ = _load_frame(config, args.dataset)
    plan = ds.make_final_split(frame, config.final_split.train_fraction,
                               config.final_split.val_fraction)
    rows = _report_rows(config, out, frame, plan)
    with open(out / "report.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model_id", "task", "split", "seed", "mse", "mae", "n_points"])
        for r in rows:
            writer.writerow([r.model_id, r.task, r.split, r.seed,
                             repr(r.mse), repr(r.mae), r.n_points])
    if config.task == "forecast":
        horizons = {}
        for spec in _model_specs(config, out):
            model = load_model(_model_path(out, spec))
            horizons[f"{spec.arch}_seed{spec.seed}"] = \
                forecast_horizon_breakdown(model, frame, plan)
        (out / "horizons.json").write_text(json.dumps(horizons, indent=2))
    print(f"wrote {out / 'report.csv'} ({len(rows)} rows)")


def cmd_hyperopt(config: ExperimentConfig, out: Path, args) -> None:
    frame, _ = _load_frame(config, args.dataset)
    folds = ds.make_cv_folds(frame, config.folds.n_folds, config.folds.train_block,
                             config.folds.val_block, config.folds.test_fraction)
    with open(out / "trials.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["arch", "trial", "fold", "val_mse", "mean_val_mse", "spec"])
        for arch in config.archs:
            space = build_search_space(config, arch)
            best, trials = search(space, frame, folds, config.task,
                                  budget=config.hyperopt.budget,
                                  search_seed=config.hyperopt.seed,
                                  jobs=config.jobs)
            for t in trials:
                for k, v in enumerate(t.fold_val_mse):
                    writer.writerow([arch, t.index, k, repr(v),
                                     repr(t.mean_val_mse),
                                     json.dumps(t.spec.to_dict())])
            (out / f"best_spec_{arch}.json").write_text(
                json.dumps(best.to_dict(), indent=2))
            print(f"{arch}: best mean val MSE "
                  f"{min(t.mean_val_mse for t in trials):.4f} over "
                  f"{len(trials)} trials")


def cmd_ablate(config: ExperimentConfig, out: Path, args) -> None:
    frame, _ = _load_frame(config, args.dataset)
    plan = ds.make_final_split(frame, config.final_split.train_fraction,
                               config.final_split.val_fraction)
    arch = config.archs[0]
    base = ModelSpec(arch=arch, covariates=config.ablation.covariates,
                     h=config.h, task=config.task,
                     hyperparams=dict(config.hyperparams.get(arch, {})),
                     seed=config.seeds[0])
    seeds = config.ablation.seeds if config.ablation.multi_seed else None
    table = covariate_sweep(base, config.ablation.covariates, frame, plan,
                            seeds=seeds, jobs=config.jobs)
    table.to_csv(out / "ablation.csv")
    (out / "importance.json").write_text(importance(table).to_json())
    if config.ablation.h_values:
        pairs = history_sweep(base, config.ablation.h_values, frame, plan,
                              jobs=config.jobs)
        with open(out / "history.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["h", "test_mse"])
            for h, score in pairs:
                writer.writerow([h, "" if score is None else repr(score)])
    print(f"wrote {out / 'ablation.csv'} "
          f"({len(table.scored_rows())} scored rows) and importance.json")


def cmd_anomaly(config: ExperimentConfig, out: Path, args) -> None:
    frame, _ = _load_frame(config, args.dataset)
    plan = ds.make_final_split(frame, config.final_split.train_fraction,
                               config.final_split.val_fraction)
    model = load_model(out / "model.bin")
    if model.spec.task != "nowcast":
        raise err.SpecMismatch("anomaly analysis expects a nowcast model")
    scaled = ds.apply_scaler(frame, model.scaler)
    ranges = getattr(plan, config.anomaly.split)
    ws = build_windows(scaled, model.spec.covariates, model.spec.h, horizon=0,
                       with_target_history=False, plan_ranges=ranges)
    anchors = np.array([s.t for s in ws.samples])
    preds = ds.invert_target(model.scaler, predict_batch(model, ws.samples))
    actual = frame.col(ds.TARGET)[anchors]
    params = AnomalyParams(peak_window=config.anomaly.peak_window,
                           peak_sigma=config.anomaly.peak_sigma,
                           follow_ratio=config.anomaly.follow_ratio,
                           bias_window=config.anomaly.bias_window,
                           bias_threshold=config.anomaly.bias_threshold)
    events = detect_anomalies(preds, actual, params)
    stamps = frame.timestamps()
    anchor_stamps = [stamps[int(a)] for a in anchors]
    doc = json.loads(events_to_json(events, anchor_stamps))
    for item, ev in zip(doc, events):
        item["start"] = int(anchors[ev.start_index])
        item["end"] = int(anchors[ev.end_index - 1]) + 1
    (out / "anomalies.json").write_text(json.dumps(doc, indent=2))
    print(f"wrote {out / 'anomalies.json'} ({len(events)} events)")


def cmd_report(config: ExperimentConfig, out: Path, args) -> None:
    path = out / "report.csv"
    if not path.exists():
        raise err.InvalidConfig(f"{path} missing; run evaluate first")
    rows: dict[tuple, list[EvalReport]] = {}
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            report = EvalReport(model_id=rec["model_id"], task=rec["task"],
                                split=rec["split"], seed=int(rec["seed"]),
                                mse=float(rec["mse"]), mae=float(rec["mae"]),
                                n_points=int(rec["n_points"]))
            key = (report.model_id, report.task, report.split)
            rows.setdefault(key, []).append(report)
    aggregates = {key: aggregate_seeds(group) for key, group in rows.items()}

    tables: dict[str, list] = {}
    tasks = sorted({key[1] for key in aggregates})
    for task in tasks:
        models = sorted({key[0] for key in aggregates if key[1] == task})
        entries = []
        for model_id in models:
            val = aggregates.get((model_id, task, "validation"))
            test = aggregates.get((model_id, task, "test"))
            if test is None:
                continue
            entries.append({
                "model": model_id,
                "val_mse": None if val is None else
                    {"mean": val.mean_mse, "std": val.std_mse},
                "test_mse": {"mean": test.mean_mse, "std": test.std_mse},
                "test_mae": {"mean": test.mean_mae, "std": test.std_mae},
                "n_seeds": test.n_seeds,
            })
        entries.sort(key=lambda e: e["test_mse"]["mean"])
        tables[task] = entries
    (out / "table1.json").write_text(json.dumps(tables, indent=2))
    print(f"wrote {out / 'table1.json'}")


_COMMANDS = {
    "synth": cmd_synth,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "hyperopt": cmd_hyperopt,
    "ablate": cmd_ablate,
    "anomaly": cmd_anomaly,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="denitlab",
        description="Data-driven modelling experiments for pilot-reactor denitrification")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="experiment config (YAML)")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--jobs", type=int, default=None, help="max parallel trainings")
        p.add_argument("--seed", type=int, default=None, help="override the seeds list")
        p.add_argument("--dataset", default=None, help="override the dataset path")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        if args.jobs is not None:
            config = replace(config, jobs=args.jobs)
        if args.seed is not None:
            config = replace(config, seeds=(args.seed,))
        out = Path(args.out if args.out is not None else config.out)
        out.mkdir(parents=True, exist_ok=True)
        _COMMANDS[args.command](config, out, args)
        _write_manifest(config, out, args.command)
    except _CONFIG_ERRORS as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except _DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except _TRAIN_ERRORS as exc:
        print(f"training error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
