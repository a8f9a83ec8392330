"""
多元线性回归（OLS）与逐步回归

求解使用列缩放后的 QR 分解，不构造 XᵀX。OLS 直接使用原始特征，系数保持可解释。
"""

from collections.abc import Sequence
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.evaluation.metrics import adjusted_r2, r2
from src.exceptions import DegenerateError, DimensionError, PreconditionError, RankDeficientError, UnknownFeatureError
from src.features.vector import FEATURE_NAMES, FeatureVector
from src.models.base import Regressor, RegressorConfig, as_training_arrays, target_space
from src.utils import logger

# |R_ii| 相对最大对角元低于该值视为线性相关
RANK_TOL = 1e-10


class OlsConfig(RegressorConfig):
    stepwise: bool = False
    stop_delta: float = Field(default=0.0005, ge=0)
    # 逐步回归的特征顺序，缺省为规范顺序
    order: tuple[str, ...] | None = None


class OlsModel(Regressor):
    kind = "ols"
    config_cls = OlsConfig

    def __init__(
        self,
        coefficients: Sequence[float],
        intercept: float,
        selected_features: Sequence[str],
        columns: Sequence[int],
        log_target: bool = False,
    ):
        if len(coefficients) != len(selected_features) or len(columns) != len(selected_features):
            raise DimensionError("coefficients, selected_features and columns must have equal length")
        self.coefficients = tuple(float(c) for c in coefficients)
        self.intercept = float(intercept)
        self.selected_features = tuple(selected_features)
        self.columns = tuple(int(c) for c in columns)
        self.log_target = log_target
        # 单行预测走纯 Python 累加
        self._terms = tuple(zip(self.columns, self.coefficients))

    @classmethod
    def fit(cls, cfg: OlsConfig, X, y, valid=None) -> "OlsModel":
        X, y = as_training_arrays(X, y)
        target = target_space(y, cfg.log_target)
        if cfg.stepwise:
            order = cfg.order or FEATURE_NAMES
            model, _ = stepwise_select(X, target, order, cfg.stop_delta)
        else:
            model = fit_ols(X, target, FEATURE_NAMES if X.shape[1] == len(FEATURE_NAMES) else None)
        model.log_target = cfg.log_target
        return model

    def predict_raw(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if not self.columns:
            return np.full(X.shape[0], self.intercept)
        return self.intercept + X[:, list(self.columns)] @ np.asarray(self.coefficients)

    def predict_one(self, x: Sequence[float]) -> float:
        total = self.intercept
        for column, coef in self._terms:
            total += coef * x[column]
        return float(np.exp(total)) if self.log_target else total

    def to_payload(self) -> dict[str, Any]:
        return {
            "coefficients": list(self.coefficients),
            "intercept": self.intercept,
            "selected_features": list(self.selected_features),
            "columns": list(self.columns),
            "log_target": self.log_target,
        }

    @classmethod
    def from_payload(cls, payload: dict[str, Any]) -> "OlsModel":
        return cls(
            payload["coefficients"],
            payload["intercept"],
            payload["selected_features"],
            payload["columns"],
            payload.get("log_target", False),
        )


class StepRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    feature: str
    adjusted_r2: float | None
    r2: float | None
    skipped: bool = False


class StepwiseReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    steps: tuple[StepRecord, ...]
    chosen_k: int
    selected_features: tuple[str, ...]
    stop_delta: float

    def as_rows(self) -> list[dict[str, Any]]:
        return [
            {
                "step": i + 1,
                "feature": s.feature,
                "adjusted_r2": s.adjusted_r2,
                "r2": s.r2,
                "status": "skipped" if s.skipped else ("kept" if i < self.chosen_k else "dropped"),
            }
            for i, s in enumerate(self.steps)
        ]


def fit_ols(X, y, names: Sequence[str] | None = None, columns: Sequence[int] | None = None) -> OlsModel:
    """带截距的最小二乘拟合，X 为 n×p"""
    X, y = as_training_arrays(X, y)
    n, p = X.shape
    names = tuple(names) if names is not None else tuple(f"x{i}" for i in range(p))
    columns = tuple(columns) if columns is not None else tuple(range(p))
    if len(names) != p:
        raise DimensionError(f"Got {len(names)} column names for {p} columns")
    if n < p + 1:
        raise DimensionError(f"OLS needs at least p + 1 = {p + 1} rows, got {n}")

    scale = np.max(np.abs(X), axis=0) if p else np.ones(0)
    scale = np.where(scale > 0, scale, 1.0)
    A = np.hstack([np.ones((n, 1)), X / scale])
    Q, R = np.linalg.qr(A)

    diag = np.abs(np.diag(R))
    limit = RANK_TOL * diag.max()
    for i in range(p + 1):
        if diag[i] <= limit:
            column = "intercept" if i == 0 else names[i - 1]
            raise RankDeficientError(f"Design matrix is rank deficient at column '{column}'", column=column)

    beta = np.linalg.solve(R, Q.T @ y)
    coefficients = beta[1:] / scale
    return OlsModel(coefficients, float(beta[0]), names, columns)


def predict_ols(m: OlsModel, x: FeatureVector | Sequence[float]) -> float:
    """β + Σ α_i·x_i，不做截断"""
    values = x.as_tuple() if isinstance(x, FeatureVector) else x
    return m.predict_one(values)


def _check_order(order: Sequence[str], n_columns: int) -> list[int]:
    unknown = [name for name in order if name not in FEATURE_NAMES]
    if unknown:
        raise UnknownFeatureError(f"Unknown features in stepwise order: {', '.join(unknown)}")
    if len(set(order)) != len(order) or len(order) != len(FEATURE_NAMES):
        raise PreconditionError("Stepwise order must be a permutation of the 11 features")
    if n_columns != len(FEATURE_NAMES):
        raise DimensionError(f"Stepwise selection expects {len(FEATURE_NAMES)} columns, got {n_columns}")
    return [FEATURE_NAMES.index(name) for name in order]


def stepwise_select(X_full, y, order: Sequence[str], stop_delta: float = 0.0005) -> tuple[OlsModel, StepwiseReport]:
    """按给定顺序逐个加入特征，记录每一步的调整 R²

    与已选特征线性相关的特征记为 skipped 并跳过；chosen_k 为最后一个调整 R² 增益超过
    stop_delta 的步骤（第一步总是保留）。行数恰为特征数 + 1 的那一步调整 R² 无定义，
    记为未改进，后续特征不再尝试。
    """
    if stop_delta < 0:
        raise PreconditionError(f"stop_delta must be >= 0, got {stop_delta}")
    X_full, y = as_training_arrays(X_full, y)
    positions = _check_order(order, X_full.shape[1])

    steps: list[StepRecord] = []
    kept: list[int] = []
    chosen_step = -1
    previous = None
    for step, (name, column) in enumerate(zip(order, positions)):
        trial = [*kept, column]
        try:
            model = fit_ols(X_full[:, trial], y, [FEATURE_NAMES[c] for c in trial], trial)
        except RankDeficientError:
            logger.debug(f"Stepwise: '{name}' is collinear with the selected features, skipped")
            steps.append(StepRecord(feature=name, adjusted_r2=None, r2=None, skipped=True))
            continue
        kept = trial
        y_hat = model.predict_raw(X_full)
        try:
            adj = adjusted_r2(y, y_hat, len(kept))
        except DegenerateError:
            logger.warning(f"Stepwise: {len(y)} rows cannot score {len(kept)} features, stopping at '{name}'")
            steps.append(StepRecord(feature=name, adjusted_r2=None, r2=r2(y, y_hat)))
            break
        steps.append(StepRecord(feature=name, adjusted_r2=adj, r2=r2(y, y_hat)))
        if previous is None or adj - previous > stop_delta:
            chosen_step = step
        previous = adj

    if chosen_step < 0:
        raise DegenerateError("Stepwise selection could not fit any single feature")

    selected = [positions[i] for i in range(chosen_step + 1) if not steps[i].skipped]
    model = fit_ols(X_full[:, selected], y, [FEATURE_NAMES[c] for c in selected], selected)
    report = StepwiseReport(
        steps=tuple(steps),
        chosen_k=chosen_step + 1,
        selected_features=model.selected_features,
        stop_delta=stop_delta,
    )
    logger.info(f"Stepwise selection kept {len(selected)} features: {list(model.selected_features)}")
    return model, report
