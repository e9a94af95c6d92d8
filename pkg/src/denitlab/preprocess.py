"""Cleaning-period detection, target interpolation, and supervised window construction.

The reactor is backwashed roughly daily for about an hour; during that time
the sensors keep reporting but the readings are meaningless. We locate these
episodes from the pressure signals, replace the *target* inside them by a
straight line between the bracketing valid readings, and leave every
covariate untouched.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .dataset import TARGET, Range, TimeSeriesFrame
from .errors import BadParams, MaskTouchesBoundary, NoAdmissibleWindows

MERGE_DISTANCE = 3  # flagged runs closer than this many samples are merged


@dataclass(frozen=True)
class CleaningParams:
    window: int = 25            # centered rolling-median window (samples)
    deviation_threshold: float = 10.0
    min_run: int = 3
    use: str = "both"           # which pressure signal drives detection: both | bottom | top

    def __post_init__(self):
        if self.window < 1 or self.min_run < 1 or self.deviation_threshold <= 0:
            raise BadParams("window, min_run, deviation_threshold must be positive")
        if self.use not in ("both", "bottom", "top"):
            raise BadParams(f"use must be both|bottom|top, got {self.use!r}")


@dataclass(frozen=True)
class CleaningMask:
    """Sorted, disjoint half-open intervals flagged as cleaning."""

    intervals: tuple[Range, ...]
    length: int

    def __post_init__(self):
        prev_end = 0
        for s, e in self.intervals:
            if s < prev_end or e <= s or e > self.length:
                raise ValueError(f"bad interval [{s}, {e})")
            prev_end = e

    def indicator(self) -> np.ndarray:
        flags = np.zeros(self.length, dtype=bool)
        for s, e in self.intervals:
            flags[s:e] = True
        return flags

    def to_json(self) -> str:
        return json.dumps([{"start": int(s), "end": int(e)} for s, e in self.intervals])


@dataclass(frozen=True)
class WindowSample:
    """One supervised sample anchored at ``t``.

    ``X`` holds the covariate history rows t-h .. t (chronological order);
    ``y_hist`` the matching target history when forecasting; ``y`` is the
    target value at t (nowcast) or the length-``horizon`` future (forecast).
    """

    X: np.ndarray
    y: float | np.ndarray
    t: int
    y_hist: np.ndarray | None = None


def rolling_median(x: np.ndarray, window: int) -> np.ndarray:
    """Centered rolling median ignoring NaNs; windows shrink at the edges.

    Even window widths are widened by one so the window stays symmetric.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    width = window if window % 2 else window + 1
    half = width // 2

    def med(seg: np.ndarray) -> float:
        seg = seg[np.isfinite(seg)]
        return float(np.median(seg)) if seg.size else np.nan

    out = np.empty(n)
    if n >= width:
        sw = np.lib.stride_tricks.sliding_window_view(x, width)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)  # all-NaN windows
            out[half:n - half] = np.nanmedian(sw, axis=1)
        edge = half
    else:
        edge = n
    for i in range(min(edge, n)):
        out[i] = med(x[max(0, i - half):i + half + 1])
    for i in range(max(n - edge, 0), n):
        out[i] = med(x[max(0, i - half):i + half + 1])
    return out


def _flag_runs(flags: np.ndarray, min_run: int) -> list[Range]:
    runs: list[Range] = []
    start = None
    for i, f in enumerate(flags):
        if f and start is None:
            start = i
        elif not f and start is not None:
            runs.append((start, i))
            start = None
    if start is not None:
        runs.append((start, len(flags)))
    # merge runs separated by fewer than MERGE_DISTANCE samples, then length-filter
    merged: list[Range] = []
    for s, e in runs:
        if merged and s - merged[-1][1] < MERGE_DISTANCE:
            merged[-1] = (merged[-1][0], e)
        else:
            merged.append((s, e))
    return [(s, e) for s, e in merged if e - s >= min_run]


def detect_cleaning(pressure_bottom: np.ndarray,
                    pressure_top: np.ndarray,
                    params: CleaningParams = CleaningParams()) -> CleaningMask:
    """Flag samples where either pressure strays from its rolling median.

    A sample is flagged when |pressure - centered rolling median| exceeds the
    deviation threshold for any of the configured signals; maximal flagged
    runs shorter than ``min_run`` are dropped, near-adjacent runs merged.
    """
    pb = np.asarray(pressure_bottom, dtype=float)
    pt = np.asarray(pressure_top, dtype=float)
    if pb.shape != pt.shape or pb.ndim != 1:
        raise BadParams("pressure series must be 1-D and equally long")
    series = {"bottom": pb, "top": pt}
    if params.use != "both":
        series = {params.use: series[params.use]}
    flags = np.zeros(len(pb), dtype=bool)
    for x in series.values():
        dev = np.abs(x - rolling_median(x, params.window))
        flags |= np.nan_to_num(dev, nan=0.0) > params.deviation_threshold
    return CleaningMask(intervals=tuple(_flag_runs(flags, params.min_run)),
                        length=len(pb))


def interpolate_target(frame: TimeSeriesFrame, mask: CleaningMask) -> TimeSeriesFrame:
    """Replace target values inside masked intervals by a straight line.

    The line runs between the nearest valid target readings outside any
    masked interval; covariates pass through untouched. Idempotent for a
    fixed mask, since the bracketing points are never inside the mask.
    """
    if mask.length != len(frame):
        raise BadParams("mask length differs from frame length")
    if not mask.intervals:
        return frame
    values = np.array(frame.values)
    y = values[:, frame.col_index(TARGET)]
    masked = mask.indicator()
    usable = np.isfinite(y) & ~masked
    for s, e in mask.intervals:
        left = s - 1
        while left >= 0 and not usable[left]:
            left -= 1
        right = e
        while right < len(y) and not usable[right]:
            right += 1
        if left < 0 or right >= len(y):
            raise MaskTouchesBoundary(f"interval [{s}, {e}) has no bracketing valid value")
        span = right - left
        for i in range(s, e):
            w = (i - left) / span
            y[i] = (1 - w) * y[left] + w * y[right]
    return frame.with_values(values)


@dataclass
class WindowSet:
    """Emitted windows plus bookkeeping over the candidate anchors."""

    samples: list[WindowSample]
    skipped: int
    candidates: int
    covariates: tuple[str, ...]
    h: int
    horizon: int
    with_target_history: bool

    def __len__(self) -> int:
        return len(self.samples)


def build_windows(frame: TimeSeriesFrame,
                  covariates,
                  h: int,
                  horizon: int,
                  with_target_history: bool,
                  plan_ranges) -> WindowSet:
    """One sample per admissible anchor in ``plan_ranges``.

    An anchor t is admissible when the span [t-h, t+horizon] stays inside a
    single range, crosses no gap, and touches no missing value it needs:
    covariate history always, target history when ``with_target_history``,
    and the target at t (nowcast) or t+1..t+horizon (forecast).
    """
    if h < 0:
        raise BadParams("history length h must be >= 0")
    if horizon < 0:
        raise BadParams("horizon must be >= 0")
    covariates = tuple(covariates)
    for c in covariates:
        if c == TARGET:
            raise BadParams("target cannot be a covariate")
    cov_idx = [frame.col_index(c) for c in covariates]
    X_all = frame.values[:, cov_idx] if cov_idx else np.empty((len(frame), 0))
    y_all = frame.col(TARGET)
    breaks = sorted(frame.gap_break_indices())

    def crosses_gap(lo: int, hi: int) -> bool:
        # a break at b separates rows b and b+1; span [lo, hi] crosses it if lo <= b < hi
        return any(lo <= b < hi for b in breaks)

    samples: list[WindowSample] = []
    skipped = 0
    candidates = 0
    for rs, re_ in plan_ranges:
        for t in range(rs, re_):
            candidates += 1
            lo, hi = t - h, t + horizon
            if lo < rs or hi >= re_ or crosses_gap(lo, hi):
                skipped += 1
                continue
            X = X_all[lo:t + 1]
            if not np.all(np.isfinite(X)):
                skipped += 1
                continue
            y_hist = None
            if with_target_history:
                y_hist = y_all[lo:t + 1]
                if not np.all(np.isfinite(y_hist)):
                    skipped += 1
                    continue
            if horizon == 0:
                y = y_all[t]
                if not np.isfinite(y):
                    skipped += 1
                    continue
                y_out: float | np.ndarray = float(y)
            else:
                y = y_all[t + 1:t + horizon + 1]
                if not np.all(np.isfinite(y)):
                    skipped += 1
                    continue
                y_out = np.array(y)
            samples.append(WindowSample(X=np.array(X), y=y_out, t=t,
                                        y_hist=None if y_hist is None else np.array(y_hist)))
    if not samples:
        raise NoAdmissibleWindows(
            f"no admissible anchors among {candidates} candidates (h={h}, horizon={horizon})")
    return WindowSet(samples=samples, skipped=skipped, candidates=candidates,
                     covariates=covariates, h=h, horizon=horizon,
                     with_target_history=with_target_history)
