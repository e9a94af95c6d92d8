"""Seeded random search over hyperparameters, scored by mean validation MSE
across the blocked cross-validation folds.

Random search keeps trials independent (hence trivially parallel) and makes
the whole procedure a pure function of (space, data, seed). Trials that
diverge score +inf instead of aborting the search. The winning spec is then
retrained once on the final 72/8 split, early-stopped on its validation
range; that model is what gets evaluated on test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .dataset import FoldPlan, TimeSeriesFrame, make_final_split
from .errors import AllTrialsFailed, EmptyWindows, InvalidConfig, \
    NoAdmissibleWindows, NonFiniteLoss
from .evaluation import evaluate
from .models import ModelSpec
from .pipeline import train_on_plan
from .utils import parallel_map


@dataclass(frozen=True)
class GridDim:
    values: tuple

    def __post_init__(self):
        if not self.values:
            raise InvalidConfig("empty grid dimension")

    def sample(self, rng: np.random.Generator):
        return self.values[int(rng.integers(len(self.values)))]


@dataclass(frozen=True)
class CategoricalDim:
    values: tuple

    def __post_init__(self):
        if not self.values:
            raise InvalidConfig("empty categorical dimension")

    def sample(self, rng: np.random.Generator):
        return self.values[int(rng.integers(len(self.values)))]


@dataclass(frozen=True)
class LogUniformDim:
    lo: float
    hi: float

    def __post_init__(self):
        if not 0 < self.lo <= self.hi:
            raise InvalidConfig(f"log-uniform range [{self.lo}, {self.hi}] invalid")

    def sample(self, rng: np.random.Generator):
        return float(np.exp(rng.uniform(math.log(self.lo), math.log(self.hi))))


@dataclass(frozen=True)
class SearchSpace:
    """Per-arch dimensions; must include ``h`` and ``covariates`` candidates."""

    arch: str
    dimensions: dict[str, Any]

    def __post_init__(self):
        for required in ("h", "covariates"):
            if required not in self.dimensions:
                raise InvalidConfig(f"search space lacks the {required!r} dimension")

    def sample_spec(self, rng: np.random.Generator, task: str) -> ModelSpec:
        drawn = {name: dim.sample(rng) for name, dim in self.dimensions.items()}
        h = int(drawn.pop("h"))
        covariates = tuple(drawn.pop("covariates"))
        seed = int(rng.integers(2 ** 63))
        return ModelSpec(arch=self.arch, covariates=covariates, h=h, task=task,
                         hyperparams=drawn, seed=seed)


@dataclass(frozen=True)
class Trial:
    index: int
    spec: ModelSpec
    fold_val_mse: tuple[float, ...]

    @property
    def mean_val_mse(self) -> float:
        return sum(self.fold_val_mse) / len(self.fold_val_mse)


def _score_fold(spec: ModelSpec, frame: TimeSeriesFrame, fold: FoldPlan) -> float:
    try:
        model, _, scaler = train_on_plan(spec, frame, fold)
        report = evaluate(model, frame, fold, spec.task, split="validation",
                          scaler=scaler)
        return report.mse
    except (NonFiniteLoss, NoAdmissibleWindows, EmptyWindows):
        return math.inf


def search(space: SearchSpace, frame: TimeSeriesFrame, folds: list[FoldPlan],
           task: str, budget: int = 50, search_seed: int = 0,
           jobs: int = 1) -> tuple[ModelSpec, list[Trial]]:
    """Sample ``budget`` specs, score each on every fold, return the winner.

    Ties break on the earliest trial index; identical (space, seed, data)
    reruns reproduce the identical trial list.
    """
    if budget < 1:
        raise InvalidConfig("budget must be >= 1")
    rng = np.random.default_rng(search_seed)
    specs = [space.sample_spec(rng, task) for _ in range(budget)]

    tasks = [(i, k) for i in range(budget) for k in range(len(folds))]
    scores = parallel_map(lambda ik: _score_fold(specs[ik[0]], frame, folds[ik[1]]),
                          tasks, jobs=jobs)
    trials = []
    for i in range(budget):
        fold_mses = tuple(scores[i * len(folds) + k] for k in range(len(folds)))
        trials.append(Trial(index=i, spec=specs[i], fold_val_mse=fold_mses))

    best = None
    for t in trials:
        if best is None or t.mean_val_mse < best.mean_val_mse:
            best = t
    if best is None or not math.isfinite(best.mean_val_mse):
        raise AllTrialsFailed(f"all {budget} trials diverged")
    return best.spec, trials


def finalize(best_spec: ModelSpec, frame: TimeSeriesFrame,
             plan: FoldPlan | None = None):
    """Single training on the final split, early-stopped on its validation range."""
    plan = make_final_split(frame) if plan is None else plan
    model, log, _ = train_on_plan(best_spec, frame, plan)
    return model, log
