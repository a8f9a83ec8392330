"""
Least-squares fitting and forward stepwise feature selection.
"""

from __future__ import annotations

import numpy as np
import pytest

from src.exceptions import ConfigError, PreconditionError, RankDeficientError, UnknownFeatureError
from src.features.vector import FEATURE_NAMES
from src.models import OlsConfig, OlsModel, fit_ols, predict_ols, stepwise_select


def test_fits_a_line_exactly():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    model = fit_ols(X, 3 * X[:, 0] + 1)
    assert model.coefficients[0] == pytest.approx(3.0, abs=1e-12)
    assert model.intercept == pytest.approx(1.0, abs=1e-12)


def test_fits_a_plane(rng):
    X = rng.uniform(0, 10, size=(30, 2))
    y = 2 * X[:, 0] - 0.5 * X[:, 1] + 4
    model = fit_ols(X, y, names=["a", "b"])
    np.testing.assert_allclose(model.coefficients, [2.0, -0.5], atol=1e-10)
    assert model.intercept == pytest.approx(4.0, abs=1e-9)
    assert model.selected_features == ("a", "b")


def test_large_feature_scales_stay_accurate(rng):
    X = np.column_stack([rng.uniform(1e8, 1e10, 40), rng.uniform(1, 100, 40)])
    y = 1e-9 * X[:, 0] + 0.2 * X[:, 1] + 3
    model = fit_ols(X, y)
    np.testing.assert_allclose(model.predict_raw(X), y, rtol=1e-9)


def test_duplicated_column_is_rank_deficient(rng):
    a = rng.normal(size=20)
    X = np.column_stack([a, rng.normal(size=20), a])
    with pytest.raises(RankDeficientError) as info:
        fit_ols(X, a + 1)
    assert info.value.column == "x2"


def test_predict_ols_without_features():
    model = OlsModel([], 7.0, [], [])
    assert predict_ols(model, [1.0, 2.0, 3.0]) == 7.0


def test_predict_ols_single_feature():
    model = OlsModel([3.0], 1.0, ["total_flops"], [0])
    assert predict_ols(model, [2.0] + [0.0] * 10) == 7.0


def _full_matrix(rng, n=60):
    return rng.uniform(0, 1, size=(n, len(FEATURE_NAMES)))


def test_stepwise_stops_after_the_only_informative_feature(rng):
    X = _full_matrix(rng)
    y = 3 * X[:, 0] + 1
    model, report = stepwise_select(X, y, FEATURE_NAMES, stop_delta=0.0005)
    assert report.chosen_k == 1
    assert model.selected_features == ("total_flops",)
    assert len(report.steps) == len(FEATURE_NAMES)
    assert report.steps[0].adjusted_r2 == pytest.approx(1.0)


def test_stepwise_on_noise_keeps_first_step(rng):
    X = _full_matrix(rng)
    noise = rng.normal(size=X.shape[0])
    # 去掉噪声在 [1, X] 上的投影
    A = np.hstack([np.ones((X.shape[0], 1)), X])
    y = noise - A @ np.linalg.lstsq(A, noise, rcond=None)[0]
    _, report = stepwise_select(X, y, FEATURE_NAMES)
    assert report.chosen_k == 1
    assert abs(report.steps[0].adjusted_r2) < 0.2


def test_stepwise_skips_collinear_feature(rng):
    X = _full_matrix(rng)
    # weighted_sum_neurons 与 total_flops 完全相同
    X[:, 2] = X[:, 0]
    y = 2 * X[:, 0] + 0.5 * X[:, 3] + 1
    order = ("total_flops", "weighted_sum_neurons", "conv_params", *FEATURE_NAMES[1:2], *FEATURE_NAMES[4:])
    model, report = stepwise_select(X, y, order)
    assert report.steps[1].skipped
    assert report.steps[1].adjusted_r2 is None
    assert report.chosen_k == 3
    assert model.selected_features == ("total_flops", "conv_params")
    statuses = [row["status"] for row in report.as_rows()]
    assert statuses[:4] == ["kept", "skipped", "kept", "dropped"]


def test_stepwise_with_one_row_per_coefficient_stops_at_the_last_feature(rng):
    X = _full_matrix(rng, n=len(FEATURE_NAMES) + 1)
    y = 3 * X[:, 0] + 1 + 0.1 * rng.normal(size=X.shape[0])
    model, report = stepwise_select(X, y, FEATURE_NAMES, stop_delta=0.0)
    assert len(report.steps) == len(FEATURE_NAMES)
    last = report.steps[-1]
    assert last.adjusted_r2 is None
    assert last.r2 == pytest.approx(1.0)
    assert report.as_rows()[-1]["status"] == "dropped"
    assert report.chosen_k < len(FEATURE_NAMES)
    assert len(model.selected_features) == report.chosen_k


def test_stepwise_order_validation(rng):
    X = _full_matrix(rng)
    y = X[:, 0]
    with pytest.raises(UnknownFeatureError):
        stepwise_select(X, y, ["depth", *FEATURE_NAMES[1:]])
    with pytest.raises(PreconditionError):
        stepwise_select(X, y, FEATURE_NAMES[:5])
    with pytest.raises(PreconditionError):
        stepwise_select(X, y, FEATURE_NAMES, stop_delta=-1)


def test_config_fit_dispatches_to_stepwise(rng):
    X = _full_matrix(rng)
    y = 5 * X[:, 1] + 2
    model = OlsModel.fit(OlsConfig(stepwise=True), X, y)
    assert model.selected_features[0] == "total_flops"
    assert model.predict(X) == pytest.approx(y)


def test_log_target_predicts_in_milliseconds(rng):
    X = _full_matrix(rng)
    y = np.exp(0.5 * X[:, 0] + 1)
    model = OlsModel.fit(OlsConfig(log_target=True), X, y)
    np.testing.assert_allclose(model.predict(X), y, rtol=1e-9)
    assert model.predict_one(X[0]) == pytest.approx(y[0], rel=1e-9)


def test_negative_stop_delta_is_a_config_error():
    with pytest.raises(ConfigError):
        OlsConfig(stop_delta=-0.1)
