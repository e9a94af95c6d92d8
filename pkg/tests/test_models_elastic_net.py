import numpy as np
import pytest

from denitlab.errors import DimensionMismatch
from denitlab.models.elastic_net import fit_elastic_net, predict_linear, \
    stationarity_gap


def test_unregularized_exact_fit():
    X = np.array([[1.0], [2.0], [3.0]])
    y = np.array([2.0, 4.0, 6.0])
    w, b, log, converged = fit_elastic_net(X, y, alpha=0.0, tol=1e-12,
                                           max_iter=20000)
    assert converged
    assert w[0] == pytest.approx(2.0, abs=1e-9)
    assert b == pytest.approx(0.0, abs=1e-9)


def test_full_l1_above_critical_alpha_zeroes_weights():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(40, 5))
    X -= X.mean(axis=0)
    y = rng.normal(size=40)
    y -= y.mean()
    # the subgradient condition at w=0 needs |X^T y|/N <= alpha for every j
    alpha_crit = np.abs(X.T @ y).max() / len(y)
    w, b, _, converged = fit_elastic_net(X, y, alpha=alpha_crit * 1.0001,
                                         l1_ratio=1.0, tol=1e-12, max_iter=500)
    assert converged
    assert np.all(w == 0.0)
    assert b == pytest.approx(0.0, abs=1e-12)


def test_matches_normal_equations_oracle():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(20, 3))
    y = rng.normal(size=20)
    w, b, _, _ = fit_elastic_net(X, y, alpha=0.0, tol=1e-13, max_iter=50000)
    A = np.column_stack([X, np.ones(len(y))])
    ref, *_ = np.linalg.lstsq(A, y, rcond=None)
    assert w == pytest.approx(ref[:3], abs=1e-6)
    assert b == pytest.approx(ref[3], abs=1e-6)


def test_stationarity_at_convergence():
    rng = np.random.default_rng(11)
    for alpha, l1_ratio in [(0.1, 0.5), (0.5, 1.0), (0.05, 0.0), (1.0, 0.3)]:
        X = rng.normal(size=(60, 6))
        y = X @ rng.normal(size=6) + rng.normal(0, 0.1, 60)
        w, b, _, converged = fit_elastic_net(X, y, alpha=alpha, l1_ratio=l1_ratio,
                                             tol=1e-12, max_iter=50000)
        assert converged
        assert stationarity_gap(X, y, w, b, alpha, l1_ratio) < 1e-8


def test_objective_non_increasing_over_sweeps():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(50, 8))
    y = rng.normal(size=50)
    _, _, log, _ = fit_elastic_net(X, y, alpha=0.2, l1_ratio=0.7)
    losses = np.array(log.train_loss)
    assert np.all(np.diff(losses) <= 1e-12)


def test_non_convergence_warns_and_flags():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(30, 4))
    y = rng.normal(size=30)
    with pytest.warns(RuntimeWarning):
        _, _, log, converged = fit_elastic_net(X, y, alpha=1e-6, tol=1e-14,
                                               max_iter=2)
    assert not converged
    assert log.stop_reason == "max_iter"


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        fit_elastic_net(np.ones((3, 2)), np.ones(4))


def test_predict_linear_shapes():
    out = predict_linear(np.array([1.0, -1.0]), 0.5,
                         np.array([[2.0, 1.0], [0.0, 0.0]]))
    assert out == pytest.approx([1.5, 0.5])
    with pytest.raises(DimensionMismatch):
        predict_linear(np.array([1.0]), 0.0, np.ones((2, 3)))
