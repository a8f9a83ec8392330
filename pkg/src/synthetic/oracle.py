"""
合成时延规律

    base = c1·flops + c2·activations + c3·weighted_neurons + c4·(conv_params + fc_params)
           + c5·total_layers + c6·√(flops·activations)

交叉项让时延对特征呈非线性，线性模型无法达到零误差。结果乘以 (1 + ε)，
ε ~ N(0, noise_cv²) 截断到 ±3·noise_cv，最后下限为 1e-6 ms。
"""

import math
from collections.abc import Sequence
from pathlib import Path

import tomli
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from src.config.static.profiles import DEFAULT_DEVICE_PROFILES
from src.exceptions import ConfigError, DataIOError
from src.features.vector import FeatureVector
from src.utils import derive_rng

LATENCY_FLOOR_MS = 1e-6
COEFFICIENTS = ("flops_coef", "activation_coef", "neuron_coef", "param_coef", "layer_coef", "cross_coef")


class DeviceProfile(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = Field(min_length=1)
    flops_coef: float = Field(default=0.0, ge=0)
    activation_coef: float = Field(default=0.0, ge=0)
    neuron_coef: float = Field(default=0.0, ge=0)
    param_coef: float = Field(default=0.0, ge=0)
    layer_coef: float = Field(default=0.0, ge=0)
    cross_coef: float = Field(default=0.0, ge=0)
    noise_cv: float = Field(default=0.0, ge=0, le=0.5)
    # 硬件参数仅作记录
    hardware: dict[str, str] = {}

    @model_validator(mode="after")
    def _some_coefficient(self):
        if not any(getattr(self, name) > 0 for name in COEFFICIENTS):
            raise ValueError("at least one latency coefficient must be positive")
        return self

    @classmethod
    def build(cls, **data) -> "DeviceProfile":
        try:
            return cls(**data)
        except ValidationError as e:
            raise ConfigError(f"Invalid device profile '{data.get('name')}': {e.errors()[0]['msg']}") from None


def base_latency(fv: FeatureVector, dp: DeviceProfile) -> float:
    return (
        dp.flops_coef * fv.total_flops
        + dp.activation_coef * fv.sum_activations
        + dp.neuron_coef * fv.weighted_sum_neurons
        + dp.param_coef * (fv.conv_params + fv.fc_params)
        + dp.layer_coef * fv.total_layers
        + dp.cross_coef * math.sqrt(fv.total_flops * fv.sum_activations)
    )


def synth_latency(fv: FeatureVector, dp: DeviceProfile, noise_seed: int | Sequence[int]) -> float:
    """同一 (特征, 画像, noise_seed) 总是得到同一时延"""
    value = base_latency(fv, dp)
    if dp.noise_cv > 0:
        keys = (noise_seed,) if isinstance(noise_seed, int) else tuple(noise_seed)
        eps = derive_rng(*keys).normal(0.0, dp.noise_cv)
        eps = min(max(eps, -3 * dp.noise_cv), 3 * dp.noise_cv)
        value *= 1.0 + eps
    return max(value, LATENCY_FLOOR_MS)


def default_profiles() -> list[DeviceProfile]:
    return [DeviceProfile.build(**data) for data in DEFAULT_DEVICE_PROFILES.values()]


def load_profiles(path: str | Path) -> list[DeviceProfile]:
    """TOML 中每个顶层表是一个画像，表名即画像名"""
    path = Path(path)
    try:
        with open(path, "rb") as f:
            data = tomli.load(f)
    except OSError as e:
        raise DataIOError(f"Cannot read profile file: {e}", path=str(path)) from e
    except tomli.TOMLDecodeError as e:
        raise ConfigError(f"Profile file is not valid TOML: {e}", path=str(path)) from None

    profiles = []
    for name, table in data.items():
        if not isinstance(table, dict):
            raise ConfigError(f"Profile '{name}' must be a table", path=str(path))
        profiles.append(DeviceProfile.build(**{"name": name, **table}))
    if not profiles:
        raise ConfigError("Profile file defines no profiles", path=str(path))
    return profiles
