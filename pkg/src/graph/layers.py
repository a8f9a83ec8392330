"""
层定义

每个 LayerSpec 由 id、kind、inputs 与按 kind 区分的参数记录组成。参数模型全部冻结，
extra 字段一律拒绝，以便模型描述文档中的拼写错误能尽早暴露。
"""

from enum import StrEnum
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class LayerKind(StrEnum):
    INPUT = "Input"
    CONV2D = "Conv2D"
    DENSE = "Dense"
    POOL = "Pool"
    BATCHNORM = "BatchNorm"
    ACTIVATION = "Activation"
    ADD = "Add"
    CONCAT = "Concat"
    FLATTEN = "Flatten"
    GLOBALPOOL = "GlobalPool"


# 只接受一个输入的层类型
SINGLE_INPUT_KINDS = frozenset(
    {
        LayerKind.CONV2D,
        LayerKind.DENSE,
        LayerKind.POOL,
        LayerKind.BATCHNORM,
        LayerKind.ACTIVATION,
        LayerKind.FLATTEN,
        LayerKind.GLOBALPOOL,
    }
)
MERGE_KINDS = frozenset({LayerKind.ADD, LayerKind.CONCAT})

Padding = Literal["same", "valid"]
PoolMode = Literal["max", "avg"]


def _expand_pair(data: Any, name: str) -> Any:
    """把 kernel: 3 / kernel: [3, 5] 形式的简写展开为 kernel_h / kernel_w"""
    if not isinstance(data, dict) or name not in data:
        return data
    data = dict(data)
    value = data.pop(name)
    if isinstance(value, list | tuple):
        if len(value) != 2:
            raise ValueError(f"'{name}' must be an integer or a [height, width] pair")
        h, w = value
    else:
        h = w = value
    data.setdefault(f"{name}_h", h)
    data.setdefault(f"{name}_w", w)
    return data


class _Params(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class EmptyParams(_Params):
    """Input / BatchNorm / Add / Flatten 没有参数"""


class Conv2DParams(_Params):
    filters: int = Field(ge=1)
    kernel_h: int = Field(ge=1)
    kernel_w: int = Field(ge=1)
    stride_h: int = Field(default=1, ge=1)
    stride_w: int = Field(default=1, ge=1)
    padding: Padding = "same"
    groups: int = Field(default=1, ge=1)
    use_bias: bool = True

    @model_validator(mode="before")
    @classmethod
    def _shorthand(cls, data: Any) -> Any:
        return _expand_pair(_expand_pair(data, "kernel"), "stride")

    @model_validator(mode="after")
    def _groups_divide_filters(self):
        if self.filters % self.groups:
            raise ValueError(f"groups={self.groups} does not divide filters={self.filters}")
        return self


class DenseParams(_Params):
    units: int = Field(ge=1)
    use_bias: bool = True


class PoolParams(_Params):
    mode: PoolMode = "max"
    kernel_h: int = Field(ge=1)
    kernel_w: int = Field(ge=1)
    stride_h: int = Field(ge=1)
    stride_w: int = Field(ge=1)
    padding: Padding = "valid"

    @model_validator(mode="before")
    @classmethod
    def _shorthand(cls, data: Any) -> Any:
        data = _expand_pair(_expand_pair(data, "kernel"), "stride")
        # 未给出步长时与核大小一致
        if isinstance(data, dict):
            data = dict(data)
            data.setdefault("stride_h", data.get("kernel_h"))
            data.setdefault("stride_w", data.get("kernel_w"))
        return data


class ActivationParams(_Params):
    fn: Literal["relu", "relu6", "sigmoid", "tanh", "swish"] = "relu"


class ConcatParams(_Params):
    # 仅支持通道维拼接
    axis: Literal["channel"] = "channel"


class GlobalPoolParams(_Params):
    mode: PoolMode = "avg"


PARAMS_BY_KIND: dict[LayerKind, type[_Params]] = {
    LayerKind.INPUT: EmptyParams,
    LayerKind.CONV2D: Conv2DParams,
    LayerKind.DENSE: DenseParams,
    LayerKind.POOL: PoolParams,
    LayerKind.BATCHNORM: EmptyParams,
    LayerKind.ACTIVATION: ActivationParams,
    LayerKind.ADD: EmptyParams,
    LayerKind.CONCAT: ConcatParams,
    LayerKind.FLATTEN: EmptyParams,
    LayerKind.GLOBALPOOL: GlobalPoolParams,
}

LayerParams = (
    Conv2DParams | DenseParams | PoolParams | ActivationParams | ConcatParams | GlobalPoolParams | EmptyParams
)


class LayerSpec(BaseModel):
    """计算图中的一层"""

    model_config = ConfigDict(frozen=True)

    id: str = Field(min_length=1)
    kind: LayerKind
    inputs: tuple[str, ...] = ()
    params: LayerParams = Field(default_factory=EmptyParams)

    @field_validator("id", mode="before")
    @classmethod
    def _id_as_text(cls, value: Any) -> Any:
        # YAML 会把 1 解析成整数
        return str(value).strip() if isinstance(value, int | str) else value

    @field_validator("inputs", mode="before")
    @classmethod
    def _inputs_as_text(cls, value: Any) -> Any:
        if value is None:
            return ()
        if isinstance(value, str | int):
            value = [value]
        return tuple(str(v) for v in value)

    @model_validator(mode="before")
    @classmethod
    def _coerce_params(cls, data: Any) -> Any:
        """按 kind 选择参数模型，避免联合类型按顺序误匹配"""
        if not isinstance(data, dict):
            return data
        kind = data.get("kind")
        try:
            kind = LayerKind(kind)
        except ValueError:
            return data  # 交给字段校验报错
        params = data.get("params")
        params_cls = PARAMS_BY_KIND[kind]
        if params is None:
            params = {}
        if isinstance(params, dict):
            data = {**data, "params": params_cls.model_validate(params)}
        return data

    @model_validator(mode="after")
    def _params_match_kind(self):
        expected = PARAMS_BY_KIND[self.kind]
        if type(self.params) is not expected:
            raise ValueError(f"{self.kind} layer needs {expected.__name__}, got {type(self.params).__name__}")
        return self
