"""Metric computation on the original scale, split-wise evaluation, and
multi-seed aggregation.

Models predict in the scaled domain and are inverted before scoring;
baselines never leave original units. Forecast scores pool all six horizon
steps of every admissible anchor into a single mean.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .baselines import BaselineSpec, running_mean_predict, seasonal_predict, \
    training_mean_predict, trend_n_predict
from .dataset import TARGET, FoldPlan, Scaler, TimeSeriesFrame, apply_scaler, invert_target
from .errors import EmptyReports, LengthMismatch, MixedGroups, NoAdmissibleWindows, \
    NonFinite, SpecMismatch
from .models import TrainedModel, predict_batch, rollout_forecast_batch
from .preprocess import build_windows

FORECAST_HORIZON = 6


def mse(pred, actual) -> float:
    pred = np.asarray(pred, dtype=float)
    actual = np.asarray(actual, dtype=float)
    if pred.shape != actual.shape or pred.size == 0:
        raise LengthMismatch(f"{pred.shape} vs {actual.shape}")
    if not (np.all(np.isfinite(pred)) and np.all(np.isfinite(actual))):
        raise NonFinite("metrics require finite values")
    return float(((pred - actual) ** 2).mean())


def mae(pred, actual) -> float:
    pred = np.asarray(pred, dtype=float)
    actual = np.asarray(actual, dtype=float)
    if pred.shape != actual.shape or pred.size == 0:
        raise LengthMismatch(f"{pred.shape} vs {actual.shape}")
    if not (np.all(np.isfinite(pred)) and np.all(np.isfinite(actual))):
        raise NonFinite("metrics require finite values")
    return float(np.abs(pred - actual).mean())


@dataclass(frozen=True)
class EvalReport:
    """One (model, task, split, seed) score row, original units."""

    model_id: str
    task: str
    split: str
    mse: float
    mae: float
    n_points: int
    seed: int

    def __post_init__(self):
        if self.mse < 0 or self.mae < 0:
            raise ValueError("negative metric")
        if self.mae ** 2 > self.mse * (1 + 1e-9):
            raise ValueError(f"mae^2 {self.mae**2} exceeds mse {self.mse}")


@dataclass(frozen=True)
class SeedAggregate:
    model_id: str
    task: str
    split: str
    mean_mse: float
    std_mse: float
    mean_mae: float
    std_mae: float
    n_seeds: int


def _split_ranges(plan: FoldPlan, split: str):
    if split not in ("train", "validation", "test"):
        raise SpecMismatch(f"unknown split {split!r}")
    return getattr(plan, split)


def _finite_rows(frame: TimeSeriesFrame, names) -> np.ndarray:
    if not names:
        return np.ones(len(frame), dtype=bool)
    idx = [frame.col_index(n) for n in names]
    return np.all(np.isfinite(frame.values[:, idx]), axis=1)


def _span_clear(ok: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """For each row, whether ok holds on every index of [lo, hi]."""
    bad = np.concatenate([[0], np.cumsum(~ok)])
    return bad[hi + 1] - bad[lo] == 0


def _model_pairs(model: TrainedModel, frame: TimeSeriesFrame, ranges,
                 scaler: Scaler):
    """(pred, actual) in original units for one model over the given ranges."""
    spec = model.spec
    scaled = apply_scaler(frame, scaler)
    y = frame.col(TARGET)
    if spec.task == "nowcast":
        ws = build_windows(scaled, spec.covariates, spec.h, horizon=0,
                           with_target_history=False, plan_ranges=ranges)
        anchors = np.array([s.t for s in ws.samples])
        preds = invert_target(scaler, predict_batch(model, ws.samples))
        return preds, y[anchors]

    ws = build_windows(scaled, spec.covariates, spec.h, horizon=FORECAST_HORIZON,
                       with_target_history=True, plan_ranges=ranges)
    anchors = np.array([s.t for s in ws.samples])
    # the rollout also consumes covariates over (t, t+horizon]; drop anchors
    # where those are missing (the window builder only vets [t-h, t])
    okcov = _finite_rows(frame, spec.covariates)
    keep = _span_clear(okcov, anchors + 1, anchors + FORECAST_HORIZON)
    anchors = anchors[keep]
    if anchors.size == 0:
        raise NoAdmissibleWindows("no forecast anchors with known future covariates")
    preds = rollout_forecast_batch(model, frame, anchors, FORECAST_HORIZON)
    future = anchors[:, None] + np.arange(1, FORECAST_HORIZON + 1)
    return preds.ravel(), y[future].ravel()


def _baseline_pairs(spec: BaselineSpec, frame: TimeSeriesFrame, plan: FoldPlan,
                    split: str, task: str):
    y = frame.col(TARGET)
    ranges = _split_ranges(plan, split)
    ok_y = np.isfinite(y)
    breaks = frame.gap_break_indices()

    if task == "nowcast":
        if spec.kind == "training_mean":
            train_y = np.concatenate([y[s:e] for s, e in plan.train])
            anchors = np.concatenate([np.arange(s, e) for s, e in ranges])
            anchors = anchors[ok_y[anchors]]
            if anchors.size == 0:
                raise NoAdmissibleWindows("no finite targets on split")
            return training_mean_predict(train_y, len(anchors)), y[anchors]
        if spec.kind == "running_mean":
            series = np.concatenate([y[s:e] for s, e in ranges])
            preds = running_mean_predict(series)
            keep = np.isfinite(series)
            return preds[keep], series[keep]
        raise SpecMismatch(f"{spec.name} is a forecasting baseline")

    # forecasting: one horizon-block per admissible anchor, all steps pooled
    horizon = spec.horizon
    need = spec.history_needed
    if spec.kind == "training_mean":
        train_y = np.concatenate([y[s:e] for s, e in plan.train])
        mean_block = training_mean_predict(train_y, horizon)
    elif spec.kind == "running_mean":
        raise SpecMismatch(f"{spec.name} is not a forecasting baseline")
    preds_blocks = []
    actual_blocks = []
    for rs, re_ in ranges:
        for t in range(rs + max(need - 1, 0), re_ - horizon):
            lo = t - need + 1 if need else t + 1  # earliest index the block touches
            hi = t + horizon
            if not np.all(ok_y[lo:hi + 1]):
                continue
            if any(lo <= b < hi for b in breaks):
                continue
            if spec.kind == "training_mean":
                block = mean_block
            elif spec.kind == "seasonal":
                block = seasonal_predict(y[lo:t + 1], horizon)
            else:
                block = trend_n_predict(y[lo:t + 1], spec.n, horizon)
            preds_blocks.append(block)
            actual_blocks.append(y[t + 1:t + horizon + 1])
    if not preds_blocks:
        raise NoAdmissibleWindows("no admissible forecast anchors for baseline")
    return np.concatenate(preds_blocks), np.concatenate(actual_blocks)


def evaluate(predictor, frame: TimeSeriesFrame, plan: FoldPlan, task: str,
             split: str = "test", scaler: Scaler | None = None,
             seed: int | None = None) -> EvalReport:
    """Score a TrainedModel or BaselineSpec on one split, original units."""
    if isinstance(predictor, TrainedModel):
        if predictor.spec.task != task:
            raise SpecMismatch(f"model trained for {predictor.spec.task}, asked {task}")
        scaler = scaler if scaler is not None else predictor.scaler
        preds, actual = _model_pairs(predictor, frame, _split_ranges(plan, split),
                                     scaler)
        model_id = predictor.spec.arch
        seed = predictor.spec.seed if seed is None else seed
    elif isinstance(predictor, BaselineSpec):
        preds, actual = _baseline_pairs(predictor, frame, plan, split, task)
        model_id = predictor.name
        seed = 0 if seed is None else seed
    else:
        raise SpecMismatch(f"cannot evaluate {type(predictor).__name__}")
    return EvalReport(model_id=model_id, task=task, split=split,
                      mse=mse(preds, actual), mae=mae(preds, actual),
                      n_points=len(preds), seed=seed)


def forecast_horizon_breakdown(model: TrainedModel, frame: TimeSeriesFrame,
                               plan: FoldPlan, split: str = "test",
                               scaler: Scaler | None = None) -> list[float]:
    """Per-step MSE over the same anchors the pooled forecast metric uses."""
    scaler = scaler if scaler is not None else model.scaler
    preds, actual = _model_pairs(model, frame, _split_ranges(plan, split), scaler)
    preds = preds.reshape(-1, FORECAST_HORIZON)
    actual = actual.reshape(-1, FORECAST_HORIZON)
    return [mse(preds[:, k], actual[:, k]) for k in range(FORECAST_HORIZON)]


def aggregate_seeds(reports: list[EvalReport]) -> SeedAggregate:
    """Mean and sample (n-1) standard deviation across seeds; std 0 for one."""
    if not reports:
        raise EmptyReports("nothing to aggregate")
    first = reports[0]
    for r in reports[1:]:
        if (r.model_id, r.task, r.split) != (first.model_id, first.task, first.split):
            raise MixedGroups(f"{r.model_id}/{r.task}/{r.split} mixed with "
                              f"{first.model_id}/{first.task}/{first.split}")
    mses = np.array([r.mse for r in reports])
    maes = np.array([r.mae for r in reports])
    n = len(reports)
    std_mse = float(mses.std(ddof=1)) if n > 1 else 0.0
    std_mae = float(maes.std(ddof=1)) if n > 1 else 0.0
    return SeedAggregate(model_id=first.model_id, task=first.task,
                         split=first.split,
                         mean_mse=float(mses.mean()), std_mse=std_mse,
                         mean_mae=float(maes.mean()), std_mae=std_mae,
                         n_seeds=n)
