"""
特征向量

11 个架构特征，顺序固定（按重要性从高到低），CSV 列、模型输入与序列化都依赖这一顺序。
"""

from collections.abc import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

FEATURE_NAMES: tuple[str, ...] = (
    "total_flops",
    "sum_activations",
    "weighted_sum_neurons",
    "conv_params",
    "total_layers",
    "input_image_size",
    "fc_params",
    "bn_params",
    "bn_layers",
    "conv_layers",
    "fc_layers",
)
N_FEATURES = len(FEATURE_NAMES)


class FeatureVector(BaseModel):
    model_config = ConfigDict(frozen=True)

    total_flops: float = Field(ge=0)
    sum_activations: float = Field(ge=0)
    weighted_sum_neurons: float = Field(ge=0)
    conv_params: float = Field(ge=0)
    total_layers: float = Field(ge=0)
    input_image_size: float = Field(ge=1)
    fc_params: float = Field(ge=0)
    bn_params: float = Field(ge=0)
    bn_layers: float = Field(ge=0)
    conv_layers: float = Field(ge=0)
    fc_layers: float = Field(ge=0)

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(getattr(self, name) for name in FEATURE_NAMES)

    def as_array(self) -> np.ndarray:
        return np.array(self.as_tuple(), dtype=np.float64)

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "FeatureVector":
        if len(values) != N_FEATURES:
            raise ValueError(f"Expected {N_FEATURES} feature values, got {len(values)}")
        return cls(**{name: float(v) for name, v in zip(FEATURE_NAMES, values)})
