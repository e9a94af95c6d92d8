"""Glue between frames, plans and model training.

Standardization is always fitted on the plan's training ranges only, then
applied to the whole frame; windows are built per range so they never span
a split boundary. Forecast models train on one-step-ahead windows and are
evaluated by six-step rollouts elsewhere.
"""

from __future__ import annotations

from .dataset import FoldPlan, Scaler, TimeSeriesFrame, apply_scaler, fit_scaler
from .errors import NoAdmissibleWindows
from .models import ModelSpec, TrainLog, TrainedModel, train_model
from .preprocess import CleaningMask, CleaningParams, WindowSet, build_windows, \
    detect_cleaning, interpolate_target


def prepare_frame(frame: TimeSeriesFrame,
                  params: CleaningParams = CleaningParams()
                  ) -> tuple[TimeSeriesFrame, CleaningMask]:
    """Detect cleaning episodes from pressure and interpolate the target across them."""
    mask = detect_cleaning(frame.col("pressure_bottom"), frame.col("pressure_top"),
                           params)
    return interpolate_target(frame, mask), mask


def spec_windows(spec: ModelSpec, scaled: TimeSeriesFrame, ranges,
                 training: bool = True) -> WindowSet:
    """Windows matching a spec: horizon 1 for forecast training, 0 for nowcast."""
    horizon = 1 if (spec.task == "forecast" and training) else 0
    return build_windows(scaled, spec.covariates, spec.h, horizon=horizon,
                         with_target_history=spec.uses_target_history,
                         plan_ranges=ranges)


def train_on_plan(spec: ModelSpec, frame: TimeSeriesFrame, plan: FoldPlan,
                  init: dict | None = None
                  ) -> tuple[TrainedModel, TrainLog, Scaler]:
    """Standardize on the plan's train ranges, window, and fit one model."""
    scaler = fit_scaler(frame, plan.train)
    scaled = apply_scaler(frame, scaler)
    train_ws = spec_windows(spec, scaled, plan.train)
    val_ws = None
    if spec.arch in ("recurrent", "tcn"):
        try:
            val_ws = spec_windows(spec, scaled, plan.validation)
        except NoAdmissibleWindows:
            raise NoAdmissibleWindows(
                f"validation ranges admit no windows for h={spec.h}") from None
    model, log = train_model(spec, train_ws, val_ws, scaler, init=init)
    return model, log, scaler
