"""
超参数网格

网格文件为 TOML：
    model_kind = "gbt"
    [axes]
    learning_rate = [0.1, 0.3]
    max_depth = [2, 4]
"""

import itertools
from pathlib import Path
from typing import Any

import tomli
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator

from src.config.static.grids import DEFAULT_GRID_AXES
from src.exceptions import ConfigError, DataIOError
from src.models import MODEL_KINDS, PredictorFactory


class HyperGrid(BaseModel):
    model_config = ConfigDict(frozen=True)

    model_kind: str
    axes: dict[str, tuple[Any, ...]]

    @field_validator("model_kind")
    @classmethod
    def _known_kind(cls, value: str) -> str:
        if value not in MODEL_KINDS:
            raise ValueError(f"unknown model kind '{value}', expected one of {list(MODEL_KINDS)}")
        return value

    @model_validator(mode="after")
    def _check_axes(self):
        fields = PredictorFactory.model_class(self.model_kind).config_cls.model_fields
        for name, values in self.axes.items():
            if name not in fields:
                raise ValueError(f"'{name}' is not a {self.model_kind} hyperparameter")
            if not values:
                raise ValueError(f"axis '{name}' has no candidate values")
        return self

    @property
    def size(self) -> int:
        total = 1
        for values in self.axes.values():
            total *= len(values)
        return total

    @classmethod
    def build(cls, model_kind: str, axes: dict[str, Any]) -> "HyperGrid":
        """校验失败统一抛出 ConfigError"""
        try:
            return cls(model_kind=model_kind, axes={name: tuple(values) for name, values in axes.items()})
        except (ValidationError, TypeError) as e:
            raise ConfigError(f"Invalid grid for '{model_kind}': {e}") from None


def grid_expand(g: HyperGrid) -> list[dict[str, Any]]:
    """按 axis 名字典序做笛卡尔积，第一个 axis 变化最慢"""
    names = sorted(g.axes)
    return [dict(zip(names, combo)) for combo in itertools.product(*(g.axes[name] for name in names))]


def load_grid(path: str | Path) -> HyperGrid:
    path = Path(path)
    try:
        with open(path, "rb") as f:
            data = tomli.load(f)
    except OSError as e:
        raise DataIOError(f"Cannot read grid file: {e}", path=str(path)) from e
    except tomli.TOMLDecodeError as e:
        raise ConfigError(f"Grid file is not valid TOML: {e}", path=str(path)) from None

    unknown = set(data) - {"model_kind", "axes"}
    if unknown or "model_kind" not in data or not isinstance(data.get("axes"), dict):
        raise ConfigError("Grid file needs 'model_kind' and an [axes] table and nothing else", path=str(path))
    return HyperGrid.build(data["model_kind"], data["axes"])


DEFAULT_GRIDS: dict[str, HyperGrid] = {kind: HyperGrid.build(kind, axes) for kind, axes in DEFAULT_GRID_AXES.items()}
