"""
多层感知机回归

隐藏层 ẑ = θ(W·x + b)，输出层为仿射变换。损失为 MSE，小批量 SGD + 动量。
所有随机性来自 seed 派生的生成器，同一平台上训练结果逐位可复现。
"""

from typing import Any, Literal

import numpy as np
from pydantic import Field, field_validator

from src.exceptions import ConfigError, DimensionError, DivergenceError, PreconditionError
from src.features.vector import N_FEATURES
from src.models.base import Regressor, RegressorConfig, array_payload, as_training_arrays, target_space
from src.utils import derive_rng, logger


class MlpConfig(RegressorConfig):
    hidden_layers: tuple[int, ...] = (32, 32)
    activation: Literal["relu", "tanh", "sigmoid"] = "relu"
    learning_rate: float = Field(default=0.01, gt=0)
    epochs: int = Field(default=300, ge=1)
    batch_size: int = Field(default=32, ge=1)
    seed: int = 0
    momentum: float = Field(default=0.9, ge=0, lt=1)
    n_inputs: int = Field(default=N_FEATURES, ge=1)

    @field_validator("hidden_layers")
    @classmethod
    def _check_hidden(cls, value: tuple[int, ...]) -> tuple[int, ...]:
        if not value or any(units < 1 for units in value):
            raise ValueError("hidden_layers needs at least one layer and every layer needs >= 1 neuron")
        return value


def _activate(z: np.ndarray, fn: str) -> np.ndarray:
    if fn == "relu":
        return np.maximum(z, 0.0)
    if fn == "tanh":
        return np.tanh(z)
    return 1.0 / (1.0 + np.exp(-z))


def _activate_grad(z: np.ndarray, a: np.ndarray, fn: str) -> np.ndarray:
    if fn == "relu":
        return (z > 0).astype(np.float64)
    if fn == "tanh":
        return 1.0 - a * a
    return a * (1.0 - a)


class MlpModel(Regressor):
    kind = "mlp"
    config_cls = MlpConfig

    def __init__(
        self,
        weights: list[np.ndarray],
        biases: list[np.ndarray],
        config: MlpConfig,
        loss_curve: list[float] | None = None,
        valid_curve: list[float] | None = None,
    ):
        self.weights = [np.array(w, dtype=np.float64) for w in weights]
        self.biases = [np.array(b, dtype=np.float64) for b in biases]
        self.config = config
        self.log_target = config.log_target
        self.loss_curve = list(loss_curve or [])
        self.valid_curve = list(valid_curve or [])
        # 输入须事先标准化（由 TrainedPredictor 负责）
        self.requires_standardized = True

    @property
    def layer_shapes(self) -> list[tuple[int, int]]:
        return [tuple(w.shape) for w in self.weights]

    def parameters(self) -> list[np.ndarray]:
        return [*self.weights, *self.biases]

    @classmethod
    def fit(cls, cfg: MlpConfig, X, y, valid=None) -> "MlpModel":
        return train_mlp(cfg, X, y, valid)

    def predict_raw(self, X: np.ndarray) -> np.ndarray:
        prediction, _ = forward(self, X)
        return np.atleast_1d(prediction)

    def to_payload(self) -> dict[str, Any]:
        return {
            "config": self.config.model_dump(mode="json"),
            "layer_shapes": [list(shape) for shape in self.layer_shapes],
            "weights": [array_payload(w) for w in self.weights],
            "biases": [array_payload(b) for b in self.biases],
            "loss_curve": self.loss_curve,
            "valid_curve": self.valid_curve,
            "log_target": self.log_target,
        }

    @classmethod
    def from_payload(cls, payload: dict[str, Any]) -> "MlpModel":
        config = MlpConfig(**payload["config"])
        shapes = payload["layer_shapes"]
        weights = [np.array(w, dtype=np.float64).reshape(shape) for w, shape in zip(payload["weights"], shapes)]
        return cls(weights, payload["biases"], config, payload.get("loss_curve"), payload.get("valid_curve"))


def init_mlp(cfg: MlpConfig) -> MlpModel:
    """权重取自 U(-√3/√fan_in, √3/√fan_in)，偏置为 0"""
    if not isinstance(cfg, MlpConfig):
        raise ConfigError(f"init_mlp expects an MlpConfig, got {type(cfg).__name__}")
    rng = derive_rng(cfg.seed)
    sizes = [cfg.n_inputs, *cfg.hidden_layers, 1]
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(3.0) / np.sqrt(fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(weights, biases, cfg)


def forward(m: MlpModel, x: np.ndarray) -> tuple[np.ndarray | float, list[tuple[np.ndarray, np.ndarray]]]:
    """前向计算，返回 (预测, 每层 (pre-activation, post-activation) 缓存)

    x 为单个向量时返回标量预测，为矩阵时返回向量。
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    a = x[None, :] if single else x
    if a.shape[1] != m.weights[0].shape[0]:
        raise DimensionError(f"MLP expects {m.weights[0].shape[0]} inputs, got {a.shape[1]}")

    cache = [(a, a)]
    n_hidden = len(m.weights) - 1
    for layer, (w, b) in enumerate(zip(m.weights, m.biases)):
        z = a @ w + b
        a = _activate(z, m.config.activation) if layer < n_hidden else z
        cache.append((z, a))

    out = a[:, 0]
    return (float(out[0]) if single else out), cache


def loss_and_gradients(m: MlpModel, X: np.ndarray, y: np.ndarray) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """MSE 损失及其对每层权重、偏置的解析梯度"""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    prediction, cache = forward(m, X)
    n = y.shape[0]
    residual = prediction - y
    loss = float(np.mean(residual * residual))

    grad_w: list[np.ndarray] = [np.empty(0)] * len(m.weights)
    grad_b: list[np.ndarray] = [np.empty(0)] * len(m.biases)
    delta = (2.0 / n) * residual[:, None]
    for layer in range(len(m.weights) - 1, -1, -1):
        a_prev = cache[layer][1]
        grad_w[layer] = a_prev.T @ delta
        grad_b[layer] = delta.sum(axis=0)
        if layer > 0:
            z_prev, a_prev_post = cache[layer]
            delta = (delta @ m.weights[layer].T) * _activate_grad(z_prev, a_prev_post, m.config.activation)
    return loss, grad_w, grad_b


def _mse(m: MlpModel, X: np.ndarray, y: np.ndarray) -> float:
    prediction, _ = forward(m, X)
    residual = prediction - y
    return float(np.mean(residual * residual))


def train_mlp(cfg: MlpConfig, X, y, valid=None) -> MlpModel:
    """小批量梯度下降训练

    loss_curve[0] 为训练前的损失，之后每个 epoch 一项。
    给定 valid 时返回验证损失最低的 epoch 的参数。
    """
    X, y = as_training_arrays(X, y)
    if X.shape[0] < cfg.batch_size:
        raise PreconditionError(f"Need at least batch_size={cfg.batch_size} rows, got {X.shape[0]}")
    if X.shape[1] != cfg.n_inputs:
        raise DimensionError(f"MlpConfig.n_inputs={cfg.n_inputs} but X has {X.shape[1]} columns")
    target = target_space(y, cfg.log_target)

    Xv = yv = None
    if valid is not None:
        Xv, yv = as_training_arrays(*valid)
        yv = target_space(yv, cfg.log_target)

    model = init_mlp(cfg)
    params = model.parameters()
    velocity = [np.zeros_like(p) for p in params]
    shuffler = derive_rng(cfg.seed, 1)
    n = X.shape[0]
    n_layers = len(model.weights)

    loss_curve = [_mse(model, X, target)]
    valid_curve: list[float] = []
    best = (np.inf, 0, [p.copy() for p in params])
    if Xv is not None:
        valid_curve.append(_mse(model, Xv, yv))
        best = (valid_curve[0], 0, [p.copy() for p in params])

    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(1, cfg.epochs + 1):
            order = shuffler.permutation(n)
            for start in range(0, n, cfg.batch_size):
                batch = order[start : start + cfg.batch_size]
                _, grad_w, grad_b = loss_and_gradients(model, X[batch], target[batch])
                for p, v, g in zip(params, velocity, [*grad_w, *grad_b]):
                    v *= cfg.momentum
                    v -= cfg.learning_rate * g
                    p += v

            loss = _mse(model, X, target)
            if not np.isfinite(loss):
                raise DivergenceError(f"Training loss became non-finite at epoch {epoch}", epoch=epoch)
            loss_curve.append(loss)

            if Xv is not None:
                valid_loss = _mse(model, Xv, yv)
                valid_curve.append(valid_loss)
                if valid_loss < best[0]:
                    best = (valid_loss, epoch, [p.copy() for p in params])

    if Xv is not None:
        for p, saved in zip(params, best[2]):
            p[...] = saved
        logger.debug(f"MLP restored epoch {best[1]} with valid MSE {best[0]:.6g}")

    return MlpModel(params[:n_layers], params[n_layers:], cfg, loss_curve, valid_curve)
