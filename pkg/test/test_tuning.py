"""
K-fold splitting, grid expansion and cross-validated grid search.
"""

from __future__ import annotations

import numpy as np
import pytest

from src.exceptions import AllConfigsFailedError, ConfigError
from src.models import MODEL_KINDS
from src.tuning import DEFAULT_GRIDS, HyperGrid, grid_expand, grid_search, kfold_split, load_grid, train_predictor


@pytest.fixture
def regression_data(rng):
    X = rng.uniform(1, 100, size=(40, 11))
    y = 0.5 * X[:, 0] + 0.1 * X[:, 3] + 10
    return X, y


def test_kfold_equal_sizes():
    folds = kfold_split(10, 5, seed=0)
    assert [len(f) for f in folds] == [2] * 5
    assert sorted(np.concatenate(folds).tolist()) == list(range(10))


def test_kfold_uneven_sizes():
    folds = kfold_split(10, 3, seed=0)
    assert sorted(len(f) for f in folds) == [3, 3, 4]
    assert all(np.all(np.diff(f) > 0) for f in folds)


def test_kfold_is_deterministic():
    first, second = kfold_split(20, 4, seed=9), kfold_split(20, 4, seed=9)
    assert all(np.array_equal(a, b) for a, b in zip(first, second))


def test_kfold_bounds():
    with pytest.raises(ConfigError):
        kfold_split(10, 1, seed=0)
    with pytest.raises(ConfigError):
        kfold_split(3, 4, seed=0)


def test_grid_expand_orders_axes_by_name():
    grid = HyperGrid.build("gbt", {"max_depth": [2, 4], "learning_rate": [0.1]})
    assert grid.size == 2
    assert grid_expand(grid) == [{"learning_rate": 0.1, "max_depth": 2}, {"learning_rate": 0.1, "max_depth": 4}]


def test_grid_validation():
    with pytest.raises(ConfigError):
        HyperGrid.build("knn", {"k": [1]})
    with pytest.raises(ConfigError):
        HyperGrid.build("gbt", {"depth": [1]})
    with pytest.raises(ConfigError):
        HyperGrid.build("gbt", {"max_depth": []})


def test_default_grids_cover_every_kind():
    assert set(DEFAULT_GRIDS) == set(MODEL_KINDS)
    assert all(1 <= grid.size <= 300 for grid in DEFAULT_GRIDS.values())


def test_load_grid(tmp_path):
    path = tmp_path / "gbt.toml"
    path.write_text('model_kind = "gbt"\n[axes]\nlearning_rate = [0.1, 0.3]\nmax_depth = [2]\n', encoding="utf-8")
    grid = load_grid(path)
    assert grid.model_kind == "gbt"
    assert grid.axes == {"learning_rate": (0.1, 0.3), "max_depth": (2,)}


def test_load_grid_errors(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("model_kind = \n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_grid(bad)
    extra = tmp_path / "extra.toml"
    extra.write_text('model_kind = "ols"\nseed = 3\n[axes]\nstepwise = [true]\n', encoding="utf-8")
    with pytest.raises(ConfigError):
        load_grid(extra)


def test_single_config_search(regression_data):
    X, y = regression_data
    grid = HyperGrid.build("ols", {"stepwise": [False]})
    predictor, report = grid_search(grid, X, y, k=4, seed=1, jobs=1)
    assert report.total_configs == 1
    assert report.best_index == 0
    assert len(report.best.fold_mapes) == 4
    assert report.best.mean_mape == pytest.approx(0.0, abs=1e-8)
    np.testing.assert_allclose(predictor.predict(X), y, rtol=1e-9)


def test_ties_go_to_the_first_config(regression_data):
    X, y = regression_data
    grid = HyperGrid.build("ols", {"stop_delta": [0.0005, 0.002]})
    _, report = grid_search(grid, X, y, k=3, seed=1, jobs=1)
    assert report.results[0].mean_mape == report.results[1].mean_mape
    assert report.best_index == 0


def test_parallel_search_matches_serial(regression_data):
    X, y = regression_data
    grid = HyperGrid.build("gbt", {"n_rounds": [5, 10], "max_depth": [1, 2]})
    serial, serial_report = grid_search(grid, X, y, k=3, seed=11, jobs=1, pinned=True)
    parallel, parallel_report = grid_search(grid, X, y, k=3, seed=11, jobs=2, pinned=True)
    assert serial_report == parallel_report
    np.testing.assert_array_equal(serial.predict(X), parallel.predict(X))
    assert serial_report.tuning_time_s is None


def test_failing_configs_are_reported(regression_data):
    X, y = regression_data
    grid = HyperGrid.build("gbt", {"n_rounds": [3], "early_stopping_rounds": [0, 2]})
    # 每折只有 15 行训练数据，不足以切出内部验证集，早停配置失败
    _, report = grid_search(grid, X[:30], y[:30], k=2, seed=0, jobs=1)
    assert [r.status for r in report.results] == ["ok", "failed"]
    assert report.best_index == 0
    frame = report.to_frame()
    assert frame["status"].tolist() == ["ok", "failed"]


def test_all_configs_failing(regression_data):
    X, y = regression_data
    grid = HyperGrid.build("mlp", {"batch_size": [10_000]})
    with pytest.raises(AllConfigsFailedError):
        grid_search(grid, X, y, k=2, seed=0, jobs=1)


def test_train_predictor_records_seed_and_pinned_time(regression_data, pinned_epoch):
    X, y = regression_data
    predictor = train_predictor("rf", {"n_estimators": 3}, X, y, seed=3, device="agx", pinned=True)
    assert predictor.metadata.params["seed"] == 3
    assert predictor.metadata.created_at == "2023-11-14T22:13:20Z"
    assert predictor.metadata.training_time_s is None
    assert predictor.metadata.device == "agx"


def test_mlp_training_uses_a_holdout(regression_data):
    X, y = regression_data
    params = {"hidden_layers": [4], "epochs": 5, "batch_size": 8, "log_target": True}
    predictor = train_predictor("mlp", params, X, y, seed=0, valid_fraction=0.1)
    assert len(predictor.model.valid_curve) == 6
    assert predictor.standardizer is not None
    assert predictor.transform == "log1p"
