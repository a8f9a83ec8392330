from src.graph.layers import (
    ActivationParams,
    ConcatParams,
    Conv2DParams,
    DenseParams,
    EmptyParams,
    GlobalPoolParams,
    LayerKind,
    LayerSpec,
    PoolParams,
)
from src.graph.model_graph import ModelGraph, build_model


def _pair(value: int | tuple[int, int]) -> tuple[int, int]:
    return (value, value) if isinstance(value, int) else (int(value[0]), int(value[1]))


class GraphBuilder:
    """逐层构造模型图，层 id 按 "前缀 + 序号" 自动生成

    参考架构与合成生成器都通过它组装图，每个方法返回新层的 id。
    """

    def __init__(self, name: str, family: str, variant: str | int):
        self.name = name
        self.family = family
        self.variant = str(variant)
        self.layers: list[LayerSpec] = []
        self._counters: dict[str, int] = {}

    def _next_id(self, prefix: str) -> str:
        count = self._counters.get(prefix, 0) + 1
        self._counters[prefix] = count
        return f"{prefix}{count}"

    def _add(self, kind: LayerKind, inputs: list[str], params, prefix: str) -> str:
        layer_id = self._next_id(prefix)
        self.layers.append(LayerSpec(id=layer_id, kind=kind, inputs=tuple(inputs), params=params))
        return layer_id

    def input(self) -> str:
        self.layers.append(LayerSpec(id="input", kind=LayerKind.INPUT))
        return "input"

    def conv(
        self,
        x: str,
        filters: int,
        kernel: int | tuple[int, int],
        stride: int | tuple[int, int] = 1,
        padding: str = "same",
        groups: int = 1,
        use_bias: bool = True,
        prefix: str = "conv",
    ) -> str:
        kh, kw = _pair(kernel)
        sh, sw = _pair(stride)
        params = Conv2DParams(
            filters=filters,
            kernel_h=kh,
            kernel_w=kw,
            stride_h=sh,
            stride_w=sw,
            padding=padding,
            groups=groups,
            use_bias=use_bias,
        )
        return self._add(LayerKind.CONV2D, [x], params, prefix)

    def depthwise(self, x: str, channels: int, kernel: int = 3, stride: int = 1, use_bias: bool = False) -> str:
        return self.conv(x, channels, kernel, stride, groups=channels, use_bias=use_bias, prefix="dwconv")

    def dense(self, x: str, units: int, use_bias: bool = True) -> str:
        return self._add(LayerKind.DENSE, [x], DenseParams(units=units, use_bias=use_bias), "fc")

    def pool(self, x: str, mode: str, kernel: int | tuple[int, int], stride=None, padding: str = "valid") -> str:
        kh, kw = _pair(kernel)
        sh, sw = _pair(stride) if stride is not None else (kh, kw)
        params = PoolParams(mode=mode, kernel_h=kh, kernel_w=kw, stride_h=sh, stride_w=sw, padding=padding)
        return self._add(LayerKind.POOL, [x], params, f"{mode}pool")

    def global_pool(self, x: str, mode: str = "avg") -> str:
        return self._add(LayerKind.GLOBALPOOL, [x], GlobalPoolParams(mode=mode), "gpool")

    def bn(self, x: str) -> str:
        return self._add(LayerKind.BATCHNORM, [x], EmptyParams(), "bn")

    def act(self, x: str, fn: str = "relu") -> str:
        return self._add(LayerKind.ACTIVATION, [x], ActivationParams(fn=fn), fn)

    def add(self, inputs: list[str]) -> str:
        return self._add(LayerKind.ADD, inputs, EmptyParams(), "add")

    def concat(self, inputs: list[str]) -> str:
        return self._add(LayerKind.CONCAT, inputs, ConcatParams(), "concat")

    def flatten(self, x: str) -> str:
        return self._add(LayerKind.FLATTEN, [x], EmptyParams(), "flatten")

    def conv_bn_act(self, x: str, filters: int, kernel, stride=1, fn: str = "relu", use_bias: bool = False) -> str:
        """常见的 Conv -> BN -> Activation 组合"""
        return self.act(self.bn(self.conv(x, filters, kernel, stride, use_bias=use_bias)), fn)

    def build(self) -> ModelGraph:
        return build_model(self.name, self.family, self.variant, self.layers)
