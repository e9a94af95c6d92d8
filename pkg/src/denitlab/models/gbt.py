"""Gradient-boosted regression trees on squared loss, built from scratch.

Stagewise boosting: start from the target mean, then repeatedly fit a
depth-limited regression tree to the current residuals (exact greedy splits
over sorted feature values, variance-reduction criterion) and add it with a
learning rate. Split ties break on lowest feature index, then lowest
threshold, so a fit is a deterministic function of (data, params, seed).
"""

from __future__ import annotations

import numpy as np

from ..errors import DimensionMismatch, EmptyWindows
from .spec import TrainLog


def _build_tree(X: np.ndarray, r: np.ndarray, max_depth: int,
                min_samples_leaf: int, depth: int = 0) -> dict:
    value = float(r.mean())
    n = len(r)
    if depth >= max_depth or n < 2 * min_samples_leaf or np.all(r == r[0]):
        return {"leaf": True, "value": value}

    parent_sse = float(((r - value) ** 2).sum())
    best_gain = 0.0
    best: tuple[int, float] | None = None
    positions = np.arange(1, n)
    for j in range(X.shape[1]):
        order = np.argsort(X[:, j], kind="stable")
        xs = X[order, j]
        rs = r[order]
        cs = np.cumsum(rs)
        css = np.cumsum(rs ** 2)
        total, total_sq = cs[-1], css[-1]
        # candidate split after position i-1 (left size i); thresholds ascend
        valid = (xs[:-1] != xs[1:]) \
            & (positions >= min_samples_leaf) \
            & (positions <= n - min_samples_leaf)
        if not valid.any():
            continue
        i = positions[valid]
        left_sse = css[i - 1] - cs[i - 1] ** 2 / i
        right_sse = (total_sq - css[i - 1]) - (total - cs[i - 1]) ** 2 / (n - i)
        gains = parent_sse - left_sse - right_sse
        k = int(np.argmax(gains))  # first maximum = lowest threshold
        if gains[k] > best_gain:
            thr = 0.5 * (xs[i[k] - 1] + xs[i[k]])
            if xs[i[k] - 1] < thr <= xs[i[k]]:  # guard fp-collapsed midpoints
                best_gain = float(gains[k])
                best = (j, float(thr))
    if best is None:
        return {"leaf": True, "value": value}

    feature, threshold = best
    mask = X[:, feature] < threshold
    return {
        "leaf": False,
        "value": value,
        "feature": feature,
        "threshold": threshold,
        "left": _build_tree(X[mask], r[mask], max_depth, min_samples_leaf, depth + 1),
        "right": _build_tree(X[~mask], r[~mask], max_depth, min_samples_leaf, depth + 1),
    }


def _tree_predict(node: dict, X: np.ndarray) -> np.ndarray:
    out = np.empty(len(X))
    stack = [(node, np.arange(len(X)))]
    while stack:
        nd, idx = stack.pop()
        if nd["leaf"] or idx.size == 0:
            out[idx] = nd["value"]
            continue
        mask = X[idx, nd["feature"]] < nd["threshold"]
        stack.append((nd["left"], idx[mask]))
        stack.append((nd["right"], idx[~mask]))
    return out


def fit_gbt(X: np.ndarray, y: np.ndarray, n_trees: int = 100, max_depth: int = 3,
            learning_rate: float = 0.1, min_samples_leaf: int = 5,
            subsample: float = 1.0, seed: int = 0):
    """Boost ``n_trees`` stages; returns ``(params, log)``.

    All-identical targets degenerate to a 0-tree ensemble predicting the
    constant. With ``subsample=1`` the training loss is non-increasing in the
    stage count (checked on every fit); row subsampling is driven by ``seed``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != len(y):
        raise DimensionMismatch(f"{X.shape} rows vs {len(y)} targets")
    if len(y) == 0:
        raise EmptyWindows("cannot fit on zero samples")

    init = float(y.mean())
    trees: list[dict] = []
    r = y - init
    losses = [float((r ** 2).mean())]
    degenerate = bool(np.all(y == y[0]))
    rng = np.random.default_rng(seed)
    n = len(y)

    if not degenerate:
        for _ in range(n_trees):
            if subsample < 1.0:
                rows = rng.choice(n, size=max(1, int(subsample * n)), replace=False)
            else:
                rows = np.arange(n)
            tree = _build_tree(X[rows], r[rows], max_depth, min_samples_leaf)
            r -= learning_rate * _tree_predict(tree, X)
            trees.append(tree)
            losses.append(float((r ** 2).mean()))
            if subsample == 1.0 and losses[-1] > losses[-2] + 1e-12:
                raise AssertionError(
                    f"training loss rose at stage {len(trees)}: "
                    f"{losses[-2]} -> {losses[-1]}")

    params = {"init": init, "trees": trees, "learning_rate": learning_rate}
    log = TrainLog(train_loss=tuple(losses), val_loss=(),
                   stopped_at=len(losses) - 1,
                   stop_reason="converged" if degenerate else "max_iter")
    return params, log


def predict_gbt(params: dict, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    out = np.full(len(X), params["init"])
    for tree in params["trees"]:
        out += params["learning_rate"] * _tree_predict(tree, X)
    return out
