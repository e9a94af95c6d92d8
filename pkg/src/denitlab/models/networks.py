"""Mini-batch gradient-descent trainer shared by the recurrent and tcn archs.

Plain SGD with momentum (no adaptive optimizer, keeping every gradient
auditable), seeded shuffling, and early stopping on validation loss: the
returned parameters are the snapshot with minimum validation MSE.
"""

from __future__ import annotations

import numpy as np

from ..errors import EmptyWindows, NonFiniteLoss
from . import recurrent, tcn
from .spec import ModelSpec, TrainLog

CONVERGE_TOL = 1e-12

_BACKENDS = {"recurrent": recurrent, "tcn": tcn}


def mse_loss(yhat: np.ndarray, y: np.ndarray) -> float:
    d = yhat - y
    return float((d @ d) / len(y))


def loss_and_grad(arch: str, params: dict, X: np.ndarray, y: np.ndarray):
    """MSE over the batch and its gradient w.r.t. every parameter array."""
    backend = _BACKENDS[arch]
    yhat, cache = backend.forward(params, X)
    loss = mse_loss(yhat, y)
    dyhat = 2.0 * (yhat - y) / len(y)
    return loss, backend.backward(params, cache, dyhat)


def network_forward(arch: str, params: dict, X: np.ndarray) -> np.ndarray:
    yhat, _ = _BACKENDS[arch].forward(params, X)
    return yhat


def init_network_params(spec: ModelSpec, n_in: int) -> dict:
    rng = np.random.default_rng(spec.seed)
    return _BACKENDS[spec.arch].init_params(n_in, spec.window_length,
                                            spec.resolved(), rng)


def _snapshot(params: dict) -> dict:
    return {k: v.copy() for k, v in params.items()}


def train_network(spec: ModelSpec,
                  X_train: np.ndarray, y_train: np.ndarray,
                  X_val: np.ndarray, y_val: np.ndarray,
                  init: dict | None = None):
    """Returns ``(best_params, log)``; raises NonFiniteLoss on divergence.

    One seeded generator drives weight init then every epoch's shuffle, so a
    fixed (spec, data) pair trains to bit-identical parameters. Entry 0 of the
    log is the pre-training state.
    """
    if len(X_train) == 0 or len(X_val) == 0:
        raise EmptyWindows("network training needs non-empty train and val windows")
    hp = spec.resolved()
    rng = np.random.default_rng(spec.seed)
    n_in = X_train.shape[2]
    backend = _BACKENDS[spec.arch]
    params = backend.init_params(n_in, spec.window_length, hp, rng)
    if init is not None:
        for k, v in init.items():
            params[k] = np.array(v, dtype=float)
    velocity = {k: np.zeros_like(v) for k, v in params.items()}

    def full_losses():
        return (mse_loss(network_forward(spec.arch, params, X_train), y_train),
                mse_loss(network_forward(spec.arch, params, X_val), y_val))

    tr, vl = full_losses()
    train_losses, val_losses = [tr], [vl]
    best_val = vl
    best_params = _snapshot(params)
    epochs_since_best = 0
    stop_reason = "max_iter"
    epoch = 0

    if tr <= CONVERGE_TOL:
        stop_reason = "converged"
    else:
        lr, momentum = hp["learning_rate"], hp["momentum"]
        for epoch in range(1, hp["max_epochs"] + 1):
            perm = rng.permutation(len(X_train))
            for lo in range(0, len(perm), hp["batch_size"]):
                batch = perm[lo:lo + hp["batch_size"]]
                loss, grads = loss_and_grad(spec.arch, params, X_train[batch], y_train[batch])
                if not np.isfinite(loss):
                    raise NonFiniteLoss(
                        f"training loss diverged in epoch {epoch}",
                        log=TrainLog(tuple(train_losses), tuple(val_losses),
                                     len(train_losses) - 1, "max_iter"))
                for k in params:
                    velocity[k] = momentum * velocity[k] - lr * grads[k]
                    params[k] += velocity[k]
            tr, vl = full_losses()
            if not (np.isfinite(tr) and np.isfinite(vl)):
                raise NonFiniteLoss(
                    f"loss non-finite after epoch {epoch}",
                    log=TrainLog(tuple(train_losses), tuple(val_losses),
                                 len(train_losses) - 1, "max_iter"))
            train_losses.append(tr)
            val_losses.append(vl)
            if vl < best_val:
                best_val = vl
                best_params = _snapshot(params)
                epochs_since_best = 0
            else:
                epochs_since_best += 1
            if tr <= CONVERGE_TOL:
                stop_reason = "converged"
                break
            if epochs_since_best >= hp["patience"]:
                stop_reason = "early_stop"
                break

    log = TrainLog(train_loss=tuple(train_losses), val_loss=tuple(val_losses),
                   stopped_at=len(train_losses) - 1, stop_reason=stop_reason)
    return best_params, log
