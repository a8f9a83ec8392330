"""
Random forest and gradient-boosted trees, including split-count importance.
"""

from __future__ import annotations

import numpy as np
import pytest

from src.exceptions import ConfigError, EarlyStopWithoutValidError
from src.features.vector import FEATURE_NAMES
from src.models import (
    GbtConfig,
    GbtModel,
    RegressionTree,
    RfConfig,
    RfModel,
    feature_importance,
    fit_gbt,
    fit_rf,
    fit_tree,
    predict_gbt,
    predict_rf,
)


def _step(n=50):
    X = np.linspace(0, 1, n)[:, None]
    return X, (X[:, 0] > 0.5).astype(float)


def test_single_tree_forest_without_bootstrap_is_the_tree(rng):
    X = rng.uniform(size=(30, 3))
    y = X[:, 0] ** 2 + X[:, 1]
    forest = fit_rf(RfConfig(n_estimators=1, bootstrap=False), X, y)
    np.testing.assert_array_equal(forest.predict(X), fit_tree(X, y).predict(X))


def test_forest_is_deterministic_per_seed(rng):
    X = rng.uniform(size=(40, 3))
    y = X[:, 0] + rng.normal(scale=0.1, size=40)
    cfg = RfConfig(n_estimators=10, max_features=2, seed=5)
    first, second = fit_rf(cfg, X, y), fit_rf(cfg, X, y)
    np.testing.assert_array_equal(first.predict(X), second.predict(X))
    other = fit_rf(RfConfig(n_estimators=10, max_features=2, seed=6), X, y)
    assert not np.array_equal(first.predict(X), other.predict(X))


def test_forest_learns_a_step():
    X, y = _step()
    forest = fit_rf(RfConfig(n_estimators=30, seed=1), X, y)
    assert np.mean((forest.predict(X) - y) ** 2) < 1e-2


def test_forest_averages_trees():
    forest = RfModel([RegressionTree.constant(2.0, 1), RegressionTree.constant(4.0, 1)], RfConfig())
    assert predict_rf(forest, [0.0]) == 3.0
    assert forest.predict(np.zeros((2, 1))).tolist() == [3.0, 3.0]


def test_forest_row_and_batch_predictions_agree(rng):
    X = rng.uniform(size=(30, 2))
    forest = fit_rf(RfConfig(n_estimators=7, seed=2), X, X[:, 0] - X[:, 1])
    assert forest.predict(X).tolist() == [predict_rf(forest, row) for row in X]


def test_forest_config_checks():
    with pytest.raises(ConfigError):
        RfConfig(min_samples_split=2, min_samples_leaf=2)
    with pytest.raises(ConfigError):
        RfConfig(max_features=12)
    assert RfConfig(max_depth=-1).max_depth is None


def test_boosting_with_full_step_interpolates(rng):
    X = rng.uniform(size=(20, 2))
    y = rng.normal(size=20)
    model = fit_gbt(GbtConfig(n_rounds=1, learning_rate=1.0, max_depth=-1, lambda_reg=0.0), X, y)
    np.testing.assert_allclose(model.predict(X), y, atol=1e-12)


def test_depth_zero_boosting_predicts_the_mean(rng):
    X = rng.uniform(size=(15, 2))
    y = rng.uniform(1, 5, size=15)
    model = fit_gbt(GbtConfig(n_rounds=5, max_depth=0), X, y)
    np.testing.assert_allclose(model.predict(X), np.mean(y))


def test_boosted_prediction_by_hand():
    model = GbtModel(10.0, [RegressionTree.constant(-2.0, 1)], GbtConfig(learning_rate=0.5))
    assert predict_gbt(model, [0.0]) == 9.0


def test_early_stopping_keeps_best_round(rng):
    X = rng.uniform(size=(60, 2))
    y = X[:, 0] + rng.normal(scale=0.3, size=60)
    Xv = rng.uniform(size=(30, 2))
    yv = Xv[:, 0] + rng.normal(scale=0.3, size=30)
    cfg = GbtConfig(n_rounds=200, learning_rate=0.3, max_depth=4, lambda_reg=0.0, early_stopping_rounds=5)
    model = fit_gbt(cfg, X, y, valid=(Xv, yv))
    assert len(model.trees) == int(np.argmin(model.valid_curve)) + 1
    assert len(model.train_curve) == len(model.trees)


def test_early_stopping_needs_validation(rng):
    X = rng.uniform(size=(10, 2))
    with pytest.raises(EarlyStopWithoutValidError):
        fit_gbt(GbtConfig(early_stopping_rounds=3), X, X[:, 0])


def test_subsampled_boosting_is_deterministic(rng):
    X = rng.uniform(size=(40, 3))
    y = X[:, 1] * 3
    cfg = GbtConfig(n_rounds=20, subsample=0.5, seed=4)
    np.testing.assert_array_equal(fit_gbt(cfg, X, y).predict(X), fit_gbt(cfg, X, y).predict(X))


def test_compiled_walk_matches_reference(rng):
    X = rng.uniform(size=(50, 3))
    model = fit_gbt(GbtConfig(n_rounds=25), X, np.sin(4 * X[:, 0]) + X[:, 2])
    batch = model.predict(X)
    for row, value in zip(X, batch):
        assert predict_gbt(model, row) == model.predict_reference(row) == value


def test_payload_roundtrip(rng):
    X = rng.uniform(size=(30, 2))
    model = fit_gbt(GbtConfig(n_rounds=10), X, X[:, 0])
    restored = GbtModel.from_payload(model.to_payload())
    np.testing.assert_array_equal(restored.predict(X), model.predict(X))


def test_stump_importance():
    X = np.array([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0], [4.0, 5.0]])
    stump = fit_tree(X, [0.0, 0.0, 1.0, 1.0], max_depth=1)
    forest = RfModel([stump], RfConfig())
    assert feature_importance(forest) == {"x0": 1, "x1": 0}


def test_flops_only_target_ranks_flops_first(rng):
    X = rng.uniform(size=(80, len(FEATURE_NAMES)))
    y = 5 * X[:, 0] + 1
    model = fit_gbt(GbtConfig(n_rounds=30, max_depth=1), X, y)
    importance = feature_importance(model)
    assert list(importance) == list(FEATURE_NAMES)
    assert max(importance, key=importance.get) == "total_flops"
