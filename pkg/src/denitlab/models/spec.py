"""Model specification, trained-model container, and training log."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from ..dataset import Scaler
from ..errors import InvalidSpec

ARCHS = ("elastic_net", "gbt", "recurrent", "tcn")
TASKS = ("nowcast", "forecast")

#: Default hyperparameters per architecture. Ranges live in
#: :mod:`denitlab.config` as search-space defaults.
DEFAULT_HYPERPARAMS: dict[str, dict[str, Any]] = {
    "elastic_net": {
        "alpha": 1e-3,
        "l1_ratio": 0.5,
        "tol": 1e-6,
        "max_iter": 2000,
    },
    "gbt": {
        "n_trees": 100,
        "max_depth": 3,
        "learning_rate": 0.1,
        "min_samples_leaf": 5,
        "subsample": 1.0,
    },
    "recurrent": {
        "hidden": 16,
        "learning_rate": 1e-2,
        "batch_size": 32,
        "max_epochs": 100,
        "patience": 5,
        "momentum": 0.9,
    },
    "tcn": {
        "hidden": 16,
        "levels": 2,
        "kernel_size": 3,
        "learning_rate": 1e-2,
        "batch_size": 32,
        "max_epochs": 100,
        "patience": 5,
        "momentum": 0.9,
    },
}

_VALIDATORS = {
    "alpha": lambda v: v >= 0,
    "l1_ratio": lambda v: 0 <= v <= 1,
    "tol": lambda v: v > 0,
    "max_iter": lambda v: v >= 1,
    "n_trees": lambda v: v >= 0,
    "max_depth": lambda v: v >= 1,
    "learning_rate": lambda v: v > 0,
    "min_samples_leaf": lambda v: v >= 1,
    "subsample": lambda v: 0 < v <= 1,
    "hidden": lambda v: v >= 1,
    "levels": lambda v: v >= 1,
    "kernel_size": lambda v: v >= 1,
    "batch_size": lambda v: v >= 1,
    "max_epochs": lambda v: v >= 1,
    "patience": lambda v: v >= 1,
    "momentum": lambda v: 0 <= v < 1,
}


@dataclass(frozen=True)
class ModelSpec:
    """Architecture + hyperparameters + covariate subset + history length + seed.

    The unit of hyperparameter search and ablation enumeration; the seed
    fully determines every stochastic choice made while fitting.
    """

    arch: str
    covariates: tuple[str, ...]
    h: int
    task: str
    hyperparams: dict[str, Any] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.arch not in ARCHS:
            raise InvalidSpec(f"unknown arch {self.arch!r}")
        if self.task not in TASKS:
            raise InvalidSpec(f"unknown task {self.task!r}")
        if self.h < 0:
            raise InvalidSpec("history length h must be >= 0")
        if not self.covariates and self.task == "nowcast":
            raise InvalidSpec("nowcasting with zero covariates has no inputs")
        object.__setattr__(self, "covariates", tuple(self.covariates))
        allowed = DEFAULT_HYPERPARAMS[self.arch]
        for name, value in self.hyperparams.items():
            if name not in allowed:
                raise InvalidSpec(f"{self.arch} has no hyperparameter {name!r}")
            if not _VALIDATORS[name](value):
                raise InvalidSpec(f"hyperparameter {name}={value!r} out of range")

    def resolved(self) -> dict[str, Any]:
        """Hyperparameters with arch defaults filled in."""
        merged = dict(DEFAULT_HYPERPARAMS[self.arch])
        merged.update(self.hyperparams)
        return merged

    @property
    def window_length(self) -> int:
        return self.h + 1

    @property
    def uses_target_history(self) -> bool:
        return self.task == "forecast"

    def n_input_channels(self) -> int:
        return len(self.covariates) + (1 if self.uses_target_history else 0)

    def with_seed(self, seed: int) -> "ModelSpec":
        return replace(self, seed=seed)

    def to_dict(self) -> dict:
        return {
            "arch": self.arch,
            "covariates": list(self.covariates),
            "h": self.h,
            "task": self.task,
            "hyperparams": dict(self.hyperparams),
            "seed": self.seed,
        }

    @staticmethod
    def from_dict(d: dict) -> "ModelSpec":
        return ModelSpec(arch=d["arch"], covariates=tuple(d["covariates"]),
                         h=int(d["h"]), task=d["task"],
                         hyperparams=dict(d.get("hyperparams", {})),
                         seed=int(d.get("seed", 0)))


@dataclass(frozen=True)
class TrainLog:
    """Per-iteration training (and optional validation) losses.

    Entry 0 is the state before any update; iteration i appends entry i.
    """

    train_loss: tuple[float, ...]
    val_loss: tuple[float, ...]
    stopped_at: int
    stop_reason: str  # early_stop | max_iter | converged

    def __post_init__(self):
        if self.stop_reason not in ("early_stop", "max_iter", "converged"):
            raise ValueError(f"bad stop_reason {self.stop_reason!r}")
        if len(self.train_loss) != self.stopped_at + 1:
            raise ValueError("train_loss length inconsistent with stopped_at")
        if self.val_loss and len(self.val_loss) != self.stopped_at + 1:
            raise ValueError("val_loss length inconsistent with stopped_at")


@dataclass(frozen=True)
class TrainedModel:
    """Fitted state behind the common predict contract.

    ``parameters`` is arch-specific; predictions are a pure function of
    (parameters, input window). ``scaler`` is the standardizer the model was
    trained under; predictions live in its scaled domain until inverted.
    """

    spec: ModelSpec
    parameters: dict[str, Any]
    scaler: Scaler

    def param_array(self, name: str) -> np.ndarray:
        return self.parameters[name]
