"""
ε-SVR

对偶问题写成 2n 个变量 [α; α*] 的标准形式，用二阶工作集选择的 SMO 求解，
停止条件为 m(α) - M(α) < tolerance。只保存非零的对偶系数 α - α*。
"""

import warnings
from typing import Any, Literal

import numpy as np
from pydantic import Field

from src.exceptions import DegenerateError, DimensionError, NoConvergenceWarning
from src.models.base import Regressor, RegressorConfig, array_payload, as_training_arrays, target_space
from src.utils import logger

TAU = 1e-12


class SvrConfig(RegressorConfig):
    kernel: Literal["linear", "polynomial", "sigmoid", "rbf"] = "rbf"
    gamma: float = Field(default=0.1, gt=0)
    degree: int = Field(default=3, ge=1)
    coef0: float = 0.0
    cost_C: float = Field(default=1.0, gt=0)
    epsilon: float = Field(default=0.1, ge=0)
    tolerance: float = Field(default=1e-3, gt=0)
    max_iterations: int = Field(default=100_000, ge=1)


def kernel_matrix(cfg: SvrConfig, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    if A.shape[1] != B.shape[1]:
        raise DimensionError(f"Kernel inputs have {A.shape[1]} and {B.shape[1]} dimensions")
    if cfg.kernel == "rbf":
        sq = np.sum(A * A, axis=1)[:, None] + np.sum(B * B, axis=1)[None, :] - 2.0 * (A @ B.T)
        return np.exp(-cfg.gamma * np.maximum(sq, 0.0))
    dot = A @ B.T
    if cfg.kernel == "linear":
        return dot
    if cfg.kernel == "polynomial":
        return (cfg.gamma * dot + cfg.coef0) ** cfg.degree
    return np.tanh(cfg.gamma * dot + cfg.coef0)


def kernel_eval(cfg: SvrConfig, u, v) -> float:
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    if u.shape != v.shape:
        raise DimensionError(f"Kernel inputs have {u.size} and {v.size} dimensions")
    if cfg.kernel == "rbf":
        diff = u - v
        return float(np.exp(-cfg.gamma * float(diff @ diff)))
    dot = float(u @ v)
    if cfg.kernel == "linear":
        return dot
    if cfg.kernel == "polynomial":
        return float((cfg.gamma * dot + cfg.coef0) ** cfg.degree)
    return float(np.tanh(cfg.gamma * dot + cfg.coef0))


class SvrModel(Regressor):
    kind = "svr"
    config_cls = SvrConfig

    def __init__(
        self,
        support_vectors: np.ndarray,
        dual_coef: np.ndarray,
        bias: float,
        config: SvrConfig,
        iterations: int = 0,
        converged: bool = True,
        support_indices=None,
    ):
        self.support_vectors = np.atleast_2d(np.asarray(support_vectors, dtype=np.float64))
        self.dual_coef = np.asarray(dual_coef, dtype=np.float64).ravel()
        if self.support_vectors.shape[0] != self.dual_coef.shape[0]:
            raise DimensionError("support_vectors and dual_coef must have the same length")
        self.bias = float(bias)
        self.config = config
        self.log_target = config.log_target
        self.iterations = iterations
        self.converged = converged
        # 支持向量在训练集中的行号，用于 KKT 检查
        self.support_indices = np.asarray(
            support_indices if support_indices is not None else np.arange(self.dual_coef.shape[0]), dtype=np.int64
        )
        self.requires_standardized = True

    @property
    def n_support(self) -> int:
        return int(self.dual_coef.shape[0])

    @classmethod
    def fit(cls, cfg: SvrConfig, X, y, valid=None) -> "SvrModel":
        X, y = as_training_arrays(X, y)
        return fit_svr(cfg, X, target_space(y, cfg.log_target))

    def predict_raw(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if self.n_support == 0:
            return np.full(X.shape[0], self.bias)
        return kernel_matrix(self.config, X, self.support_vectors) @ self.dual_coef + self.bias

    def to_payload(self) -> dict[str, Any]:
        return {
            "config": self.config.model_dump(mode="json"),
            "support_vectors": array_payload(self.support_vectors),
            "n_features": int(self.support_vectors.shape[1]),
            "dual_coef": array_payload(self.dual_coef),
            "bias": self.bias,
            "iterations": self.iterations,
            "converged": self.converged,
            "support_indices": array_payload(self.support_indices),
            "log_target": self.log_target,
        }

    @classmethod
    def from_payload(cls, payload: dict[str, Any]) -> "SvrModel":
        support = np.array(payload["support_vectors"], dtype=np.float64).reshape(-1, payload["n_features"])
        return cls(
            support,
            payload["dual_coef"],
            payload["bias"],
            SvrConfig(**payload["config"]),
            payload.get("iterations", 0),
            payload.get("converged", True),
            payload.get("support_indices"),
        )


def _select_working_set(alpha, G, y_sign, QD, K, n, C, tolerance):
    """二阶工作集选择，返回 (i, j, gap)，已满足停止条件时 j 为 -1"""
    up = np.where(y_sign > 0, alpha < C, alpha > 0)
    low = np.where(y_sign > 0, alpha > 0, alpha < C)
    minus_yG = -y_sign * G

    cand = np.where(up, minus_yG, -np.inf)
    i = int(np.argmax(cand))
    g_max = cand[i]
    if not np.isfinite(g_max):
        return -1, -1, 0.0

    low_vals = np.where(low, minus_yG, np.inf)
    g_min = float(low_vals.min()) if low.any() else np.inf
    gap = g_max - g_min
    if gap < tolerance:
        return i, -1, gap

    K_i = K[i % n]
    K_it = np.concatenate([K_i, K_i])
    grad_diff = g_max - minus_yG
    quad = QD[i] + QD - 2.0 * K_it
    quad = np.where(quad > 0, quad, TAU)
    obj = np.where(low & (grad_diff > 0), -(grad_diff * grad_diff) / quad, np.inf)
    j = int(np.argmin(obj))
    if not np.isfinite(obj[j]):
        return i, -1, gap
    return i, j, gap


def fit_svr(cfg: SvrConfig, X, y) -> SvrModel:
    """求解 ε-不敏感对偶问题，未在 max_iterations 内收敛时发出 NoConvergenceWarning"""
    X, y = as_training_arrays(X, y)
    n = X.shape[0]
    if n < 2:
        raise DegenerateError(f"SVR needs at least 2 samples, got {n}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise DegenerateError("SVR training data must be finite")

    C = cfg.cost_C
    K = kernel_matrix(cfg, X, X)
    diag = np.diag(K).copy()
    QD = np.concatenate([diag, diag])
    y_sign = np.concatenate([np.ones(n), -np.ones(n)])
    alpha = np.zeros(2 * n)
    # 梯度初值等于线性项 p = [ε - y; ε + y]
    G = np.concatenate([cfg.epsilon - y, cfg.epsilon + y])

    iterations = 0
    negative_curvature = 0
    converged = False
    while iterations < cfg.max_iterations:
        i, j, _ = _select_working_set(alpha, G, y_sign, QD, K, n, C, cfg.tolerance)
        if j < 0:
            converged = True
            break
        iterations += 1

        K_i = K[i % n]
        K_j = K[j % n]
        Q_i = y_sign[i] * y_sign * np.concatenate([K_i, K_i])
        Q_j = y_sign[j] * y_sign * np.concatenate([K_j, K_j])
        old_ai, old_aj = alpha[i], alpha[j]

        if y_sign[i] != y_sign[j]:
            quad = QD[i] + QD[j] + 2.0 * Q_i[j]
            if quad < 0:
                negative_curvature += 1
            if quad <= 0:
                quad = TAU
            delta = (-G[i] - G[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            elif alpha[i] < 0:
                alpha[i] = 0.0
                alpha[j] = -diff
            if diff > 0:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - diff
            elif alpha[j] > C:
                alpha[j] = C
                alpha[i] = C + diff
        else:
            quad = QD[i] + QD[j] - 2.0 * Q_i[j]
            if quad < 0:
                negative_curvature += 1
            if quad <= 0:
                quad = TAU
            delta = (G[i] - G[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = total - C
            elif alpha[j] < 0:
                alpha[j] = 0.0
                alpha[i] = total
            if total > C:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = total - C
            elif alpha[i] < 0:
                alpha[i] = 0.0
                alpha[j] = total

        G += Q_i * (alpha[i] - old_ai) + Q_j * (alpha[j] - old_aj)

    if negative_curvature:
        logger.warning(
            f"SVR ({cfg.kernel} kernel) met {negative_curvature} pair updates with negative curvature; "
            f"regularized with tau={TAU}"
        )
    if not converged:
        warnings.warn(
            NoConvergenceWarning(f"SVR stopped after {iterations} iterations without reaching tolerance"),
            stacklevel=2,
        )

    bias = _bias(alpha, G, y_sign, C)
    dual = alpha[:n] - alpha[n:]
    support = np.flatnonzero(dual != 0)
    logger.debug(f"SVR fit: {iterations} iterations, {support.size} support vectors, converged={converged}")
    return SvrModel(X[support], dual[support], bias, cfg, iterations, converged, support)


def _bias(alpha, G, y_sign, C) -> float:
    """自由变量上 -yG 的均值；没有自由变量时取上下界中点"""
    yG = y_sign * G
    at_upper = alpha >= C
    at_lower = alpha <= 0
    free = ~(at_upper | at_lower)
    if free.any():
        return float(-np.mean(yG[free]))
    ub_mask = (at_upper & (y_sign < 0)) | (at_lower & (y_sign > 0))
    lb_mask = (at_upper & (y_sign > 0)) | (at_lower & (y_sign < 0))
    ub = float(yG[ub_mask].min()) if ub_mask.any() else np.inf
    lb = float(yG[lb_mask].max()) if lb_mask.any() else -np.inf
    return -(ub + lb) / 2.0


def predict_svr(m: SvrModel, x) -> float:
    """Σ dual_i·K(sv_i, x) + b，按 log_target 还原"""
    return m.predict_one(np.asarray(x, dtype=np.float64).ravel())


def kkt_violations(m: SvrModel, X, y) -> np.ndarray:
    """逐样本的 ε-KKT 违反量（在模型空间，即 log_target 时为 ln 时延）

    X 必须是训练时的原始行顺序，非支持向量的对偶系数为 0。
    """
    X, y = as_training_arrays(X, y)
    y = target_space(y, m.log_target)
    C = m.config.cost_C
    eps = m.config.epsilon
    residual = y - m.predict_raw(X)

    dual = np.zeros(X.shape[0])
    dual[m.support_indices] = m.dual_coef

    bound = C * (1 - 1e-12)
    violation = np.maximum(np.abs(residual) - eps, 0.0)
    upper = dual >= bound
    lower = dual <= -bound
    pos_free = (dual > 0) & ~upper
    neg_free = (dual < 0) & ~lower
    violation = np.where(upper, np.maximum(eps - residual, 0.0), violation)
    violation = np.where(lower, np.maximum(residual + eps, 0.0), violation)
    violation = np.where(pos_free, np.abs(residual - eps), violation)
    violation = np.where(neg_free, np.abs(residual + eps), violation)
    return violation
