"""
树集成：随机森林（bagging）与梯度提升树（boosting）

RF 预测为各树输出的算术平均；GBT 预测为 base + Σ lr·tree(x)，树的顺序是模型的一部分。
"""

import math
from collections.abc import Sequence
from typing import Any

import numpy as np
from pydantic import Field, field_validator, model_validator

from src.exceptions import EarlyStopWithoutValidError, PreconditionError
from src.features.vector import FEATURE_NAMES, N_FEATURES
from src.models import tree_kernels
from src.models.base import Regressor, RegressorConfig, as_training_arrays, target_space
from src.models.trees import RegressionTree, fit_tree
from src.utils import derive_rng, logger


def _unbounded_depth(value: int | None) -> int | None:
    # 网格文件中用 -1 表示不限深度
    return None if value is None or value < 0 else value


class RfConfig(RegressorConfig):
    n_estimators: int = Field(default=100, ge=1)
    max_depth: int | None = Field(default=None, ge=-1)
    min_samples_split: int = Field(default=2, ge=2)
    min_samples_leaf: int = Field(default=1, ge=1)
    max_features: int | None = Field(default=None, ge=1, le=N_FEATURES)
    seed: int = 0
    bootstrap: bool = True

    @field_validator("max_depth")
    @classmethod
    def _depth(cls, value: int | None) -> int | None:
        return _unbounded_depth(value)

    @model_validator(mode="after")
    def _check_split(self):
        if self.min_samples_split < 2 * self.min_samples_leaf:
            raise ValueError("min_samples_split must be >= 2 * min_samples_leaf")
        return self


class GbtConfig(RegressorConfig):
    n_rounds: int = Field(default=100, ge=1)
    learning_rate: float = Field(default=0.1, gt=0, le=1)
    max_depth: int | None = Field(default=3, ge=-1)
    min_samples_leaf: int = Field(default=1, ge=1)
    lambda_reg: float = Field(default=1.0, ge=0)
    subsample: float = Field(default=1.0, gt=0, le=1)
    early_stopping_rounds: int = Field(default=0, ge=0)
    seed: int = 0

    @field_validator("max_depth")
    @classmethod
    def _depth(cls, value: int | None) -> int | None:
        return _unbounded_depth(value)


def _feature_names(n_features: int) -> tuple[str, ...]:
    return FEATURE_NAMES if n_features == N_FEATURES else tuple(f"x{i}" for i in range(n_features))


class RfModel(Regressor):
    kind = "rf"
    config_cls = RfConfig

    def __init__(self, trees: Sequence[RegressionTree], config: RfConfig, log_target: bool | None = None):
        if not trees:
            raise PreconditionError("A forest needs at least one tree")
        self.trees = tuple(trees)
        self.config = config
        self.log_target = config.log_target if log_target is None else log_target
        self.requires_standardized = False

    @property
    def n_features(self) -> int:
        return self.trees[0].n_features

    @classmethod
    def fit(cls, cfg: RfConfig, X, y, valid=None) -> "RfModel":
        return fit_rf(cfg, X, y)

    def predict_raw(self, X) -> np.ndarray:
        per_tree = np.stack([tree.predict(X) for tree in self.trees])
        # fsum 精确求和，与单行预测逐位一致
        return np.array([math.fsum(column) for column in per_tree.T]) / len(self.trees)

    def predict_one(self, x: Sequence[float]) -> float:
        mean = math.fsum(tree.predict_one(x) for tree in self.trees) / len(self.trees)
        return math.exp(mean) if self.log_target else mean

    def to_payload(self) -> dict[str, Any]:
        return {
            "config": self.config.model_dump(mode="json"),
            "trees": [tree.to_payload() for tree in self.trees],
            "log_target": self.log_target,
        }

    @classmethod
    def from_payload(cls, payload: dict[str, Any]) -> "RfModel":
        trees = [RegressionTree.from_payload(t) for t in payload["trees"]]
        return cls(trees, RfConfig(**payload["config"]), payload.get("log_target"))


class GbtModel(Regressor):
    kind = "gbt"
    config_cls = GbtConfig

    def __init__(
        self,
        base_prediction: float,
        trees: Sequence[RegressionTree],
        config: GbtConfig,
        train_curve: Sequence[float] = (),
        valid_curve: Sequence[float] = (),
        log_target: bool | None = None,
    ):
        if not trees:
            raise PreconditionError("A boosted ensemble needs at least one tree")
        self.base_prediction = float(base_prediction)
        self.trees = tuple(trees)
        self.learning_rate = config.learning_rate
        self.config = config
        self.train_curve = list(train_curve)
        self.valid_curve = list(valid_curve)
        self.log_target = config.log_target if log_target is None else log_target
        self.requires_standardized = False
        self._flatten()

    def _flatten(self):
        """把所有树拼成一张节点表，子节点下标改为全局下标"""
        offsets = np.cumsum([0, *(tree.n_nodes for tree in self.trees[:-1])]).astype(np.int64)
        lefts, rights = [], []
        for tree, offset in zip(self.trees, offsets):
            lefts.append(np.where(tree.left >= 0, tree.left + offset, tree_kernels.LEAF))
            rights.append(np.where(tree.right >= 0, tree.right + offset, tree_kernels.LEAF))
        self._flat = (
            np.concatenate([tree.feature for tree in self.trees]),
            np.concatenate([tree.threshold for tree in self.trees]),
            np.concatenate(lefts).astype(np.int64),
            np.concatenate(rights).astype(np.int64),
            np.concatenate([tree.value for tree in self.trees]),
            offsets,
        )

    @property
    def n_features(self) -> int:
        return self.trees[0].n_features

    @classmethod
    def fit(cls, cfg: GbtConfig, X, y, valid=None) -> "GbtModel":
        return fit_gbt(cfg, X, y, valid)

    def predict_raw(self, X) -> np.ndarray:
        X = np.ascontiguousarray(np.atleast_2d(np.asarray(X, dtype=np.float64)))
        return tree_kernels.boosted_batch(X, self.base_prediction, self.learning_rate, *self._flat)

    def predict_one(self, x: Sequence[float]) -> float:
        row = np.asarray(x, dtype=np.float64)
        raw = tree_kernels.boosted_one(row, self.base_prediction, self.learning_rate, *self._flat)
        return math.exp(raw) if self.log_target else raw

    def predict_reference(self, x: Sequence[float]) -> float:
        """纯 Python 逐树遍历，作为编译内核的参照实现"""
        s = self.base_prediction
        for tree in self.trees:
            s += self.learning_rate * tree.predict_one(x)
        return s

    def to_payload(self) -> dict[str, Any]:
        return {
            "config": self.config.model_dump(mode="json"),
            "base_prediction": self.base_prediction,
            "trees": [tree.to_payload() for tree in self.trees],
            "train_curve": self.train_curve,
            "valid_curve": self.valid_curve,
            "log_target": self.log_target,
        }

    @classmethod
    def from_payload(cls, payload: dict[str, Any]) -> "GbtModel":
        return cls(
            payload["base_prediction"],
            [RegressionTree.from_payload(t) for t in payload["trees"]],
            GbtConfig(**payload["config"]),
            payload.get("train_curve", ()),
            payload.get("valid_curve", ()),
            payload.get("log_target"),
        )


def fit_rf(cfg: RfConfig, X, y) -> RfModel:
    """每棵树使用 (seed, 树序号) 派生的随机流做自助采样与逐节点特征抽样"""
    X, y = as_training_arrays(X, y)
    n = X.shape[0]
    if n < 2:
        raise PreconditionError(f"Random forest needs at least 2 samples, got {n}")
    target = target_space(y, cfg.log_target)

    trees = []
    for t in range(cfg.n_estimators):
        rng = derive_rng(cfg.seed, t)
        rows = rng.integers(0, n, size=n) if cfg.bootstrap else None
        trees.append(
            fit_tree(
                X,
                target,
                max_depth=cfg.max_depth,
                min_samples_split=cfg.min_samples_split,
                min_samples_leaf=cfg.min_samples_leaf,
                max_features=cfg.max_features,
                rng=rng,
                rows=rows,
            )
        )
    logger.debug(f"Random forest: {len(trees)} trees, mean depth {np.mean([t.depth for t in trees]):.1f}")
    return RfModel(trees, cfg)


def _mse(target: np.ndarray, prediction: np.ndarray) -> float:
    residual = target - prediction
    return float(np.mean(residual * residual))


def fit_gbt(cfg: GbtConfig, X, y, valid=None) -> GbtModel:
    """逐轮拟合残差（平方损失下即负梯度）

    开启早停时必须提供 valid，返回验证损失最低的轮次之前的树（至少一棵）。
    """
    X, y = as_training_arrays(X, y)
    n = X.shape[0]
    if n < 2:
        raise PreconditionError(f"Gradient boosting needs at least 2 samples, got {n}")
    if cfg.early_stopping_rounds and valid is None:
        raise EarlyStopWithoutValidError("early_stopping_rounds > 0 requires a validation set")
    target = target_space(y, cfg.log_target)

    Xv = yv = None
    if valid is not None:
        Xv, yv = as_training_arrays(*valid)
        Xv = np.ascontiguousarray(Xv)
        yv = target_space(yv, cfg.log_target)

    base = float(np.mean(target))
    F = np.full(n, base)
    Fv = np.full(Xv.shape[0], base) if Xv is not None else None
    min_split = max(2, 2 * cfg.min_samples_leaf)
    n_sub = max(1, round(cfg.subsample * n))

    trees: list[RegressionTree] = []
    train_curve: list[float] = []
    valid_curve: list[float] = []
    best_loss, best_round = np.inf, 0
    for round_ in range(cfg.n_rounds):
        residual = target - F
        rows = None
        if n_sub < n:
            rows = np.sort(derive_rng(cfg.seed, round_).choice(n, size=n_sub, replace=False))
        tree = fit_tree(
            X,
            residual,
            max_depth=cfg.max_depth,
            min_samples_split=min_split,
            min_samples_leaf=cfg.min_samples_leaf,
            lambda_reg=cfg.lambda_reg,
            rows=rows,
        )
        trees.append(tree)
        F += cfg.learning_rate * tree.predict(X)
        train_curve.append(_mse(target, F))

        if Fv is None:
            continue
        Fv += cfg.learning_rate * tree.predict(Xv)
        valid_loss = _mse(yv, Fv)
        valid_curve.append(valid_loss)
        if valid_loss < best_loss:
            best_loss, best_round = valid_loss, len(trees)
        elif cfg.early_stopping_rounds and len(trees) - best_round >= cfg.early_stopping_rounds:
            break

    if cfg.early_stopping_rounds:
        logger.debug(f"GBT early stopping kept {best_round} of {len(trees)} rounds (valid MSE {best_loss:.6g})")
        best_round = max(best_round, 1)
        trees = trees[:best_round]
        train_curve = train_curve[:best_round]
    return GbtModel(base, trees, cfg, train_curve, valid_curve)


def predict_rf(m: RfModel, x: Sequence[float]) -> float:
    return m.predict_one(x)


def predict_gbt(m: GbtModel, x: Sequence[float]) -> float:
    return m.predict_one(x)


def feature_importance(m: GbtModel | RfModel) -> dict[str, int]:
    """F-score：各特征作为内部节点切分特征的次数，跨所有树求和"""
    counts = np.zeros(m.n_features, dtype=np.int64)
    for tree in m.trees:
        counts += tree.split_counts()
    return {name: int(count) for name, count in zip(_feature_names(m.n_features), counts)}
