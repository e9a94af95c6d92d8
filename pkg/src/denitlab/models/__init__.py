"""Four learned regressors behind one train/predict contract.

Tabular archs (elastic_net, gbt) consume the window flattened row-major:
one block of channels per time step, oldest step first, with the target
history (forecasting only) appended as the last channel of each block.
Sequence archs (recurrent, tcn) consume the same layout unflattened.
"""

from __future__ import annotations

import json

import numpy as np

from ..dataset import Scaler, TARGET, TimeSeriesFrame, invert_target
from ..errors import EmptyWindows, SpecMismatch, WindowCrossesGap
from ..preprocess import WindowSample, WindowSet
from . import elastic_net as _enet
from . import gbt as _gbt
from .networks import init_network_params, loss_and_grad, network_forward, train_network
from .spec import ARCHS, DEFAULT_HYPERPARAMS, ModelSpec, TASKS, TrainLog, TrainedModel

__all__ = [
    "ARCHS", "TASKS", "DEFAULT_HYPERPARAMS", "ModelSpec", "TrainLog",
    "TrainedModel", "train_model", "predict", "predict_batch",
    "rollout_forecast", "rollout_forecast_batch", "serialize", "deserialize",
    "save_model", "load_model", "init_network_params", "loss_and_grad",
    "network_forward",
]

MODEL_FORMAT = "denitlab-model"
MODEL_VERSION = 1


def _check_window_set(spec: ModelSpec, ws: WindowSet) -> None:
    if ws.covariates != spec.covariates or ws.h != spec.h \
            or ws.with_target_history != spec.uses_target_history:
        raise SpecMismatch(
            f"window set (covariates={ws.covariates}, h={ws.h}, "
            f"y_hist={ws.with_target_history}) does not match spec "
            f"(covariates={spec.covariates}, h={spec.h}, task={spec.task})")


def stack_inputs(spec: ModelSpec, samples: list[WindowSample]) -> np.ndarray:
    """Stack samples to (B, h+1, channels); target history is the last channel."""
    X3 = np.stack([s.X for s in samples]).astype(float)
    if spec.uses_target_history:
        yh = np.stack([s.y_hist for s in samples]).astype(float)
        X3 = np.concatenate([X3, yh[:, :, None]], axis=2)
    return X3


def training_targets(samples: list[WindowSample]) -> np.ndarray:
    """Next-step target for horizon windows, the anchor value for nowcasts."""
    return np.array([s.y if np.isscalar(s.y) else float(np.asarray(s.y)[0])
                     for s in samples])


def _tabular(X3: np.ndarray) -> np.ndarray:
    return X3.reshape(X3.shape[0], -1)


def train_model(spec: ModelSpec, train_windows: WindowSet,
                val_windows: WindowSet | None, scaler: Scaler,
                init: dict | None = None) -> tuple[TrainedModel, TrainLog]:
    """Fit one model on pre-scaled windows.

    Validation windows drive early stopping for the network archs and are
    ignored by the tabular ones.
    """
    _check_window_set(spec, train_windows)
    if len(train_windows) == 0:
        raise EmptyWindows("no training windows")
    X3 = stack_inputs(spec, train_windows.samples)
    y = training_targets(train_windows.samples)
    hp = spec.resolved()

    if spec.arch == "elastic_net":
        w, b, log, converged = _enet.fit_elastic_net(
            _tabular(X3), y, alpha=hp["alpha"], l1_ratio=hp["l1_ratio"],
            tol=hp["tol"], max_iter=hp["max_iter"])
        params = {"w": w, "b": b, "converged": converged}
    elif spec.arch == "gbt":
        params, log = _gbt.fit_gbt(
            _tabular(X3), y, n_trees=hp["n_trees"], max_depth=hp["max_depth"],
            learning_rate=hp["learning_rate"],
            min_samples_leaf=hp["min_samples_leaf"],
            subsample=hp["subsample"], seed=spec.seed)
    else:
        if val_windows is None or len(val_windows) == 0:
            raise EmptyWindows(f"{spec.arch} needs validation windows for early stopping")
        _check_window_set(spec, val_windows)
        Xv = stack_inputs(spec, val_windows.samples)
        yv = training_targets(val_windows.samples)
        params, log = train_network(spec, X3, y, Xv, yv, init=init)
    return TrainedModel(spec=spec, parameters=params, scaler=scaler), log


def _check_sample(spec: ModelSpec, sample: WindowSample) -> None:
    if sample.X.shape != (spec.window_length, len(spec.covariates)):
        raise SpecMismatch(
            f"sample X shape {sample.X.shape} vs expected "
            f"({spec.window_length}, {len(spec.covariates)})")
    if spec.uses_target_history and (sample.y_hist is None
                                     or len(sample.y_hist) != spec.window_length):
        raise SpecMismatch("forecast sample lacks a full target history")


def predict_batch(model: TrainedModel, samples: list[WindowSample]) -> np.ndarray:
    """Scaled-domain predictions, one per sample (deterministic)."""
    for s in samples:
        _check_sample(model.spec, s)
    X3 = stack_inputs(model.spec, samples)
    return _predict_stacked(model, X3)


def _predict_stacked(model: TrainedModel, X3: np.ndarray) -> np.ndarray:
    arch = model.spec.arch
    if arch == "elastic_net":
        return _enet.predict_linear(model.parameters["w"], model.parameters["b"],
                                    _tabular(X3))
    if arch == "gbt":
        return _gbt.predict_gbt(model.parameters, _tabular(X3))
    return network_forward(arch, model.parameters, X3)


def predict(model: TrainedModel, sample: WindowSample) -> float:
    """Scaled-domain prediction: y_t for nowcasts, y_{t+1} for forecasts."""
    return float(predict_batch(model, [sample])[0])


def _scaled_columns(frame: TimeSeriesFrame, scaler: Scaler, names) -> np.ndarray:
    cols = [scaler.transform_column(n, frame.col(n)) for n in names]
    return np.column_stack(cols) if cols else np.empty((len(frame), 0))


def rollout_forecast_batch(model: TrainedModel, frame: TimeSeriesFrame,
                           anchors: np.ndarray, steps: int = 6) -> np.ndarray:
    """Recursive multi-step forecasts at many anchors; original-scale output.

    Covariates over (t, t+steps] are treated as known measurements; the
    target history channel is fed the model's own scaled predictions. The
    caller must supply admissible anchors (validated spans).
    """
    spec = model.spec
    if spec.task != "forecast":
        raise SpecMismatch("rollout requires a forecast-task model")
    anchors = np.asarray(anchors, dtype=int)
    h = spec.h
    cov = _scaled_columns(frame, model.scaler, spec.covariates)
    y_scaled = model.scaler.transform_column(TARGET, frame.col(TARGET))

    hist_idx = anchors[:, None] + np.arange(-h, 1)
    y_buf = np.empty((len(anchors), h + steps + 1))
    y_buf[:, :h + 1] = y_scaled[hist_idx]
    for s in range(1, steps + 1):
        row_idx = hist_idx + s - 1
        inputs = np.concatenate([cov[row_idx], y_buf[:, s - 1:h + s, None]], axis=2)
        y_buf[:, h + s] = _predict_stacked(model, inputs)
    return invert_target(model.scaler, y_buf[:, h + 1:])


def rollout_forecast(model: TrainedModel, frame: TimeSeriesFrame,
                     t: int, steps: int = 6) -> np.ndarray:
    """Validated single-anchor rollout; raises WindowCrossesGap on bad spans."""
    spec = model.spec
    if spec.task != "forecast":
        raise SpecMismatch("rollout requires a forecast-task model")
    lo, hi = t - spec.h, t + steps
    if lo < 0 or hi >= len(frame):
        raise WindowCrossesGap(f"span [{lo}, {hi}] leaves the frame")
    if any(lo <= b < hi for b in frame.gap_break_indices()):
        raise WindowCrossesGap(f"span [{lo}, {hi}] crosses a gap")
    for name in spec.covariates:
        if not np.all(np.isfinite(frame.col(name)[lo:hi + 1])):
            raise WindowCrossesGap(f"covariate {name!r} missing inside span")
    if not np.all(np.isfinite(frame.col(TARGET)[lo:t + 1])):
        raise WindowCrossesGap("target history missing inside span")
    return rollout_forecast_batch(model, frame, np.array([t]), steps)[0]


# --- serialization ----------------------------------------------------------

def _encode_params(arch: str, params: dict) -> dict:
    if arch == "elastic_net":
        return {"w": params["w"].tolist(), "b": params["b"],
                "converged": bool(params["converged"])}
    if arch == "gbt":
        return {"init": params["init"], "learning_rate": params["learning_rate"],
                "trees": params["trees"]}
    return {k: v.tolist() for k, v in params.items()}


def _decode_params(arch: str, blob: dict) -> dict:
    if arch == "elastic_net":
        return {"w": np.array(blob["w"], dtype=float), "b": float(blob["b"]),
                "converged": bool(blob["converged"])}
    if arch == "gbt":
        return {"init": float(blob["init"]),
                "learning_rate": float(blob["learning_rate"]),
                "trees": blob["trees"]}
    return {k: np.array(v, dtype=float) for k, v in blob.items()}


def serialize(model: TrainedModel) -> str:
    """Versioned JSON container; float round-trip is bit-exact."""
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "spec": model.spec.to_dict(),
        "parameters": _encode_params(model.spec.arch, model.parameters),
        "scaler": {
            "names": list(model.scaler.names),
            "mean": model.scaler.mean.tolist(),
            "std": model.scaler.std.tolist(),
            "fitted_on": [list(r) for r in model.scaler.fitted_on],
            "target_index": model.scaler.target_index,
        },
    }
    return json.dumps(doc, indent=1)


def deserialize(text: str) -> TrainedModel:
    doc = json.loads(text)
    if doc.get("format") != MODEL_FORMAT:
        raise SpecMismatch(f"not a model artifact: format={doc.get('format')!r}")
    if doc.get("version") != MODEL_VERSION:
        raise SpecMismatch(f"unsupported artifact version {doc.get('version')!r}")
    spec = ModelSpec.from_dict(doc["spec"])
    sc = doc["scaler"]
    scaler = Scaler(names=tuple(sc["names"]),
                    mean=np.array(sc["mean"], dtype=float),
                    std=np.array(sc["std"], dtype=float),
                    fitted_on=tuple(tuple(r) for r in sc["fitted_on"]),
                    target_index=int(sc["target_index"]))
    return TrainedModel(spec=spec,
                        parameters=_decode_params(spec.arch, doc["parameters"]),
                        scaler=scaler)


def save_model(model: TrainedModel, path) -> None:
    with open(path, "w") as fh:
        fh.write(serialize(model))


def load_model(path) -> TrainedModel:
    with open(path) as fh:
        return deserialize(fh.read())
