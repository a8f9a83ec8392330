"""
评估指标

MAPE 只对预测值设下限（1e-6 ms），真实值必须为正。95% 置信区间基于单样本 APE 的正态近似。
"""

import math

import numpy as np

from src.exceptions import DegenerateError, DimensionError, NonPositiveTargetError

MAPE_FLOOR_MS = 1e-6
Z_95 = 1.96


def _pair(y, y_hat) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=np.float64).ravel()
    y_hat = np.asarray(y_hat, dtype=np.float64).ravel()
    if y.shape != y_hat.shape or y.size == 0:
        raise DimensionError(f"Targets ({y.size}) and predictions ({y_hat.size}) must be equal-sized and non-empty")
    return y, y_hat


def ape(y, y_hat, floor: float = MAPE_FLOOR_MS) -> np.ndarray:
    """逐样本绝对百分比误差"""
    y, y_hat = _pair(y, y_hat)
    if np.any(y <= 0):
        raise NonPositiveTargetError("MAPE needs strictly positive targets")
    return 100.0 * np.abs(y - np.maximum(y_hat, floor)) / y


def mape(y, y_hat, floor: float = MAPE_FLOOR_MS) -> float:
    return float(np.mean(ape(y, y_hat, floor)))


def r2(y, y_hat) -> float:
    y, y_hat = _pair(y, y_hat)
    sst = float(np.sum((y - y.mean()) ** 2))
    if sst == 0:
        raise DegenerateError("R² is undefined for constant targets")
    sse = float(np.sum((y - y_hat) ** 2))
    return 1.0 - sse / sst


def adjusted_r2(y, y_hat, p: int) -> float:
    y, y_hat = _pair(y, y_hat)
    n = y.size
    if n <= p + 1:
        raise DegenerateError(f"Adjusted R² needs n > p + 1 (n={n}, p={p})")
    return 1.0 - (1.0 - r2(y, y_hat)) * (n - 1) / (n - p - 1)


def mape_ci95(apes) -> tuple[float, float]:
    """返回 (均值, 95% 置信区间半宽)，样本标准差"""
    apes = np.asarray(apes, dtype=np.float64).ravel()
    n = apes.size
    if n < 2:
        raise DegenerateError(f"A confidence interval needs at least 2 samples, got {n}")
    return float(apes.mean()), Z_95 * float(apes.std(ddof=1)) / math.sqrt(n)
