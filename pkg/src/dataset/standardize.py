"""
特征标准化

统计量只来自训练行，使用总体标准差；常数特征的标准差记为 1 并记录在 constant_features 中。
"""

from collections.abc import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict

from src.dataset.records import Dataset
from src.exceptions import DimensionError, EmptyTrainError
from src.features.vector import FEATURE_NAMES, FeatureVector
from src.utils import logger


class Standardizer(BaseModel):
    model_config = ConfigDict(frozen=True)

    mean: tuple[float, ...]
    std: tuple[float, ...]
    names: tuple[str, ...] = FEATURE_NAMES
    constant_features: tuple[str, ...] = ()

    @classmethod
    def fit(cls, X: np.ndarray, names: Sequence[str] = FEATURE_NAMES) -> "Standardizer":
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] == 0:
            raise EmptyTrainError("Cannot fit a standardizer on zero training rows")
        if X.shape[1] != len(names):
            raise DimensionError(f"Expected {len(names)} columns, got {X.shape[1]}")

        mean = X.mean(axis=0)
        std = X.std(axis=0)
        flat = np.ptp(X, axis=0) == 0
        # 常数列的均值取原值本身，标准化后恰为 0
        mean = np.where(flat, X[0], mean)
        std = np.where(flat, 0.0, std)
        constant = [name for name, is_flat in zip(names, flat) if is_flat]
        if constant:
            logger.warning(f"Constant features in training rows, std clamped to 1: {constant}")
        std = np.where(std > 0, std, 1.0)
        return cls(
            mean=tuple(float(v) for v in mean),
            std=tuple(float(v) for v in std),
            names=tuple(names),
            constant_features=tuple(constant),
        )

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != len(self.mean):
            raise DimensionError(f"Expected {len(self.mean)} features, got {X.shape[-1]}")
        return (X - np.asarray(self.mean)) / np.asarray(self.std)

    def invert(self, Z: np.ndarray) -> np.ndarray:
        Z = np.asarray(Z, dtype=np.float64)
        return Z * np.asarray(self.std) + np.asarray(self.mean)


def fit_standardizer(ds: Dataset, train: Sequence[int]) -> Standardizer:
    if len(train) == 0:
        raise EmptyTrainError("Training index list is empty")
    return Standardizer.fit(np.vstack([ds.feature_row(i) for i in train]))


def apply(st: Standardizer, fv: FeatureVector | np.ndarray) -> np.ndarray:
    values = fv.as_array() if isinstance(fv, FeatureVector) else fv
    return st.transform(values)
