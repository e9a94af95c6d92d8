"""Detection of the three characteristic prediction-failure patterns.

Class 1: a notable peak in the measured series that the prediction misses.
Class 2: a predicted peak that never occurs (the mirror image of class 1).
Class 3: the prediction tracks the measured variations but carries a
sustained signed bias before readjusting.

Peaks are excursions above a centered rolling median, measured in rolling-MAD
units; bias runs require both a large rolling mean error and a decent rolling
correlation of first differences, which is what separates "right shape,
wrong level" from a missed peak. All statistics are translation invariant, so
shifting both series by a constant changes nothing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .dataset import Range
from .errors import BadParams, LengthMismatch, NonFinite
from .preprocess import rolling_median

MISSED_TARGET_PEAK = 1
SPURIOUS_PREDICTED_PEAK = 2
SUSTAINED_BIAS = 3

DIFF_CORR_MIN = 0.5


@dataclass(frozen=True)
class AnomalyParams:
    peak_window: int = 49        # rolling median/MAD window for peak excess
    peak_sigma: float = 5.0      # excess threshold in MAD units
    follow_ratio: float = 0.5    # other series must reach this fraction of the peak
    bias_window: int = 36        # rolling mean-error window; also min run length
    bias_threshold: float = 1.0  # mg/L

    def __post_init__(self):
        if min(self.peak_window, self.bias_window) < 2:
            raise BadParams("windows must be >= 2")
        if min(self.peak_sigma, self.follow_ratio, self.bias_threshold) <= 0:
            raise BadParams("thresholds must be positive")


@dataclass(frozen=True)
class AnomalyEvent:
    klass: int                # 1 missed peak, 2 spurious peak, 3 sustained bias
    start_index: int
    end_index: int            # half-open
    magnitude: float          # peak excess (1, 2) or mean signed error (3), mg/L

    def __post_init__(self):
        if self.end_index <= self.start_index:
            raise ValueError("empty event interval")
        if self.klass not in (1, 2, 3):
            raise ValueError(f"bad class {self.klass}")

    def interval(self) -> Range:
        return (self.start_index, self.end_index)


def _runs(flags: np.ndarray) -> list[Range]:
    runs = []
    start = None
    for i, f in enumerate(flags):
        if f and start is None:
            start = i
        elif not f and start is not None:
            runs.append((start, i))
            start = None
    if start is not None:
        runs.append((start, len(flags)))
    return runs


def _rolling_mean(x: np.ndarray, window: int) -> np.ndarray:
    n = len(x)
    width = window if window % 2 else window + 1
    half = width // 2
    cs = np.concatenate([[0.0], np.cumsum(x)])
    lo = np.maximum(np.arange(n) - half, 0)
    hi = np.minimum(np.arange(n) + half + 1, n)
    return (cs[hi] - cs[lo]) / (hi - lo)


def _peak_excess(x: np.ndarray, window: int):
    med = rolling_median(x, window)
    mad = rolling_median(np.abs(x - med), window)
    return x - med, mad


def _diff_corr(pred: np.ndarray, actual: np.ndarray, window: int) -> np.ndarray:
    """Rolling correlation of first differences, mapped back to sample indices.

    Degenerate windows score 1 when both difference windows are identical
    (flat but perfectly tracking) and 0 otherwise.
    """
    n = len(pred)
    dp = np.diff(pred)
    da = np.diff(actual)
    m = len(dp)
    width = window if window % 2 else window + 1
    half = width // 2
    corr_d = np.empty(m)
    for j in range(m):
        lo = max(0, j - half)
        hi = min(m, j + half + 1)
        p = dp[lo:hi]
        a = da[lo:hi]
        sp = p.std()
        sa = a.std()
        if sp == 0.0 or sa == 0.0:
            corr_d[j] = 1.0 if np.array_equal(p, a) else 0.0
        else:
            corr_d[j] = float(((p - p.mean()) * (a - a.mean())).mean() / (sp * sa))
    out = np.empty(n)
    out[0] = corr_d[0]
    out[1:] = corr_d
    return out


def detect_anomalies(pred, actual,
                     params: AnomalyParams = AnomalyParams()) -> list[AnomalyEvent]:
    """Classify anomalous stretches of a prediction series against the truth."""
    pred = np.asarray(pred, dtype=float)
    actual = np.asarray(actual, dtype=float)
    if pred.shape != actual.shape or pred.ndim != 1:
        raise LengthMismatch(f"{pred.shape} vs {actual.shape}")
    if len(pred) < 2:
        raise LengthMismatch("need at least 2 samples")
    if not (np.all(np.isfinite(pred)) and np.all(np.isfinite(actual))):
        raise NonFinite("series must be finite")

    exc_a, mad_a = _peak_excess(actual, params.peak_window)
    exc_p, mad_p = _peak_excess(pred, params.peak_window)
    peaks_a = exc_a > params.peak_sigma * mad_a
    peaks_p = exc_p > params.peak_sigma * mad_p

    events: list[AnomalyEvent] = []
    for s, e in _runs(peaks_a):
        a_height = float(exc_a[s:e].max())
        p_height = float(exc_p[s:e].max())
        if p_height < params.follow_ratio * a_height:
            events.append(AnomalyEvent(MISSED_TARGET_PEAK, s, e, a_height))
    for s, e in _runs(peaks_p):
        p_height = float(exc_p[s:e].max())
        a_height = float(exc_a[s:e].max())
        if a_height < params.follow_ratio * p_height:
            events.append(AnomalyEvent(SPURIOUS_PREDICTED_PEAK, s, e, p_height))

    err = pred - actual
    roll_err = _rolling_mean(err, params.bias_window)
    corr = _diff_corr(pred, actual, params.bias_window)
    biased = (np.abs(roll_err) > params.bias_threshold) & (corr >= DIFF_CORR_MIN)
    for s, e in _runs(biased):
        if e - s >= params.bias_window:
            events.append(AnomalyEvent(SUSTAINED_BIAS, s, e, float(err[s:e].mean())))

    events.sort(key=lambda ev: (ev.klass, ev.start_index))
    return events


def events_to_json(events: list[AnomalyEvent], timestamps=None) -> str:
    """JSON export for plot overlays; timestamps map indices to wall-clock."""
    payload = []
    for ev in events:
        item = {"class": ev.klass, "start": ev.start_index, "end": ev.end_index,
                "magnitude": ev.magnitude}
        if timestamps is not None:
            item["start_time"] = timestamps[ev.start_index].isoformat()
            item["end_time"] = timestamps[ev.end_index - 1].isoformat()
        payload.append(item)
    return json.dumps(payload, indent=2)
