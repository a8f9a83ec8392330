from typing import Any, Literal

import numpy as np

from src.exceptions import ConfigError
from src.models.base import Regressor, RegressorConfig
from src.utils import logger

InputTransform = Literal["raw", "log1p"]


class PredictorFactory:
    """预测模型工厂类，负责按 kind 创建配置、拟合模型与还原模型"""

    # 注册的模型类型映射 {kind: model_class}
    _model_types: dict[str, type[Regressor]] = {}

    # 每种类型的输入预处理方式与说明
    _transforms: dict[str, InputTransform] = {}
    _descriptions: dict[str, str] = {}

    @classmethod
    def register(
        cls, kind: str, model_class: type[Regressor], transform: InputTransform = "raw", description: str = ""
    ):
        """
        注册模型类型

        Args:
            kind: 模型类型标识
            model_class: 实现 Regressor 接口的模型类
            transform: 输入预处理方式，log1p 表示先 log1p 压缩再标准化
            description: 说明
        """
        if not issubclass(model_class, Regressor):
            raise ValueError("Model class must inherit from Regressor")
        cls._model_types[kind] = model_class
        cls._transforms[kind] = transform
        cls._descriptions[kind] = description

    @classmethod
    def model_class(cls, kind: str) -> type[Regressor]:
        if kind not in cls._model_types:
            raise ConfigError(f"Unknown model kind: {kind}. Available kinds: {cls.kinds()}")
        return cls._model_types[kind]

    @classmethod
    def make_config(cls, kind: str, params: dict[str, Any] | None = None) -> RegressorConfig:
        """由参数字典构造配置，非法参数抛出 ConfigError"""
        return cls.model_class(kind).config_cls(**(params or {}))

    @classmethod
    def fit(cls, kind: str, cfg: RegressorConfig, X: np.ndarray, y: np.ndarray, valid=None) -> Regressor:
        model_class = cls.model_class(kind)
        if not isinstance(cfg, model_class.config_cls):
            raise ConfigError(f"{kind} expects {model_class.config_cls.__name__}, got {type(cfg).__name__}")
        logger.debug(f"Fitting {kind} on {X.shape[0]} rows with {cfg.model_dump()}")
        return model_class.fit(cfg, X, y, valid)

    @classmethod
    def from_payload(cls, kind: str, payload: dict[str, Any]) -> Regressor:
        return cls.model_class(kind).from_payload(payload)

    @classmethod
    def input_transform(cls, kind: str) -> InputTransform:
        cls.model_class(kind)
        return cls._transforms[kind]

    @classmethod
    def kinds(cls) -> list[str]:
        return list(cls._model_types)

    @classmethod
    def get_available_types(cls) -> dict[str, dict]:
        return {
            kind: {
                "class_name": model_class.__name__,
                "config": model_class.config_cls.__name__,
                "transform": cls._transforms[kind],
                "description": cls._descriptions[kind],
            }
            for kind, model_class in cls._model_types.items()
        }
