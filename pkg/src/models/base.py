from abc import ABC, abstractmethod
from collections.abc import Sequence
from typing import Any, ClassVar, Self

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError

from src.exceptions import ConfigError, DimensionError, NonPositiveTargetError


class RegressorConfig(BaseModel):
    """回归模型超参数基类，非法取值统一抛出 ConfigError"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    log_target: bool = False

    def __init__(self, **data):
        try:
            super().__init__(**data)
        except ValidationError as e:
            problems = "; ".join(
                f"{'.'.join(map(str, err['loc'])) or 'config'}: {err['msg']}" for err in e.errors()
            )
            raise ConfigError(f"Invalid {type(self).__name__}: {problems}") from None


class Regressor(ABC):
    """回归模型统一接口

    predict_raw 在模型空间（可能是 log 时延）输出，predict 负责还原到毫秒。
    拟合后的模型不可变，可并发读取。
    """

    kind: ClassVar[str]
    config_cls: ClassVar[type[RegressorConfig]]

    log_target: bool = False

    @classmethod
    @abstractmethod
    def fit(cls, cfg: RegressorConfig, X: np.ndarray, y: np.ndarray, valid=None) -> Self: ...

    @abstractmethod
    def predict_raw(self, X: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def to_payload(self) -> dict[str, Any]: ...

    @classmethod
    @abstractmethod
    def from_payload(cls, payload: dict[str, Any]) -> Self: ...

    def predict(self, X: np.ndarray) -> np.ndarray:
        raw = self.predict_raw(np.atleast_2d(np.asarray(X, dtype=np.float64)))
        return np.exp(raw) if self.log_target else raw

    def predict_one(self, x: Sequence[float]) -> float:
        """单行预测，子类可覆盖为更快的实现"""
        return float(self.predict(np.asarray(x, dtype=np.float64)[None, :])[0])


def as_training_arrays(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise DimensionError(f"X has shape {X.shape} but y has {y.shape[0]} entries")
    return X, y


def target_space(y: np.ndarray, log_target: bool) -> np.ndarray:
    """log_target 时在 ln(latency) 空间训练"""
    if not log_target:
        return y
    if np.any(y <= 0):
        raise NonPositiveTargetError("log_target requires strictly positive latencies")
    return np.log(y)


def array_payload(arr: np.ndarray) -> list:
    # JSON 中的 float 以 repr 形式写出，可精确还原
    return np.asarray(arr).tolist()
