"""
FLOPs 统计

一次乘加记为 2 FLOPs，batch size 固定为 1。分类与 Profiler 的 Conv2D / Add / Mul / Pooling
一致，另加 Dense。所有计数使用 Python 整数，超过 int64 范围时抛出 OverflowError。
"""

from dataclasses import dataclass, fields

from src.graph.layers import LayerKind, LayerSpec
from src.graph.shapes import Shape, ShapedGraph

INT64_MAX = 2**63 - 1
CATEGORIES = ("conv2d", "add", "mul", "pooling", "dense")


@dataclass(frozen=True)
class FlopBreakdown:
    conv2d: int = 0
    add: int = 0
    mul: int = 0
    pooling: int = 0
    dense: int = 0

    @property
    def total(self) -> int:
        return self.conv2d + self.add + self.mul + self.pooling + self.dense

    def __add__(self, other: "FlopBreakdown") -> "FlopBreakdown":
        return FlopBreakdown(**{f.name: getattr(self, f.name) + getattr(other, f.name) for f in fields(self)})

    def as_dict(self) -> dict[str, int]:
        return {**{name: getattr(self, name) for name in CATEGORIES}, "total": self.total}


def _elements(shape: Shape) -> int:
    n = 1
    for dim in shape:
        n *= dim
    return n


def layer_flops(spec: LayerSpec, in_shapes: list[Shape], out_shape: Shape) -> FlopBreakdown:
    """单层的 FLOPs，只依赖该层的输入输出形状"""
    kind = spec.kind
    p = spec.params
    out = _elements(out_shape)

    if kind == LayerKind.CONV2D:
        c_in = in_shapes[0][2]
        macs = p.kernel_h * p.kernel_w * (c_in // p.groups) * out
        return FlopBreakdown(conv2d=2 * macs + (out if p.use_bias else 0))

    if kind == LayerKind.DENSE:
        n_in = in_shapes[0][0]
        return FlopBreakdown(dense=2 * n_in * p.units + (p.units if p.use_bias else 0))

    if kind == LayerKind.ADD:
        return FlopBreakdown(add=out * (len(in_shapes) - 1))

    if kind == LayerKind.BATCHNORM:
        # 推理时折算为一次乘一次加
        return FlopBreakdown(add=out, mul=out)

    if kind == LayerKind.ACTIVATION:
        return FlopBreakdown(mul=out)

    if kind == LayerKind.POOL:
        area = p.kernel_h * p.kernel_w
        return FlopBreakdown(pooling=(area if p.mode == "avg" else area - 1) * out)

    if kind == LayerKind.GLOBALPOOL:
        h, w, _ = in_shapes[0]
        area = h * w
        return FlopBreakdown(pooling=(area if p.mode == "avg" else area - 1) * out)

    # Input / Concat / Flatten 不计算
    return FlopBreakdown()


def count_flops(sg: ShapedGraph) -> FlopBreakdown:
    total = FlopBreakdown()
    for spec in sg.ordered_layers():
        total = total + layer_flops(spec, sg.input_shapes(spec), sg.shape(spec.id))

    for name, value in total.as_dict().items():
        if value > INT64_MAX:
            raise OverflowError(f"{name} FLOP count {value} of '{sg.graph.name}' exceeds the int64 range")
    return total
