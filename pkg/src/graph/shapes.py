"""
形状推断

张量形状采用通道在后的 (H, W, C)，Flatten / GlobalPool / Dense 之后为 (units,)。
"same" 填充保持 ceil(in / stride)，"valid" 为 floor((in - k) / stride) + 1。
"""

from typing import Any

from pydantic import BaseModel, ConfigDict

from src.exceptions import PreconditionError, ShapeError
from src.graph.layers import Conv2DParams, LayerKind, LayerSpec, PoolParams
from src.graph.model_graph import ModelGraph

Shape = tuple[int, ...]


class ShapedGraph(BaseModel):
    """完成形状推断的模型图"""

    model_config = ConfigDict(frozen=True)

    graph: ModelGraph
    input_size: int
    input_channels: int = 3
    # 按拓扑序排列
    tensor_shapes: dict[str, Shape]

    def shape(self, layer_id: str) -> Shape:
        return self.tensor_shapes[layer_id]

    def input_shapes(self, spec: LayerSpec) -> list[Shape]:
        return [self.tensor_shapes[ref] for ref in spec.inputs]

    def ordered_layers(self) -> list[LayerSpec]:
        return [self.graph.layer(layer_id) for layer_id in self.tensor_shapes]

    def __hash__(self) -> int:
        return hash((self.graph, self.input_size, self.input_channels))


def padding_total(size: int, kernel: int, stride: int, padding: str) -> int:
    """"same" 时补齐到 ceil(in / stride) 所需的总填充量"""
    if padding == "valid":
        return 0
    out = -(-size // stride)
    return max((out - 1) * stride + kernel - size, 0)


def window_output(size: int, kernel: int, stride: int, padding: str) -> int | None:
    """单个空间维度的输出尺寸，核大于填充后的输入时返回 None"""
    padded = size + padding_total(size, kernel, stride, padding)
    if kernel > padded:
        return None
    return (padded - kernel) // stride + 1


def _spatial(spec: LayerSpec, params: Conv2DParams | PoolParams, shape: Shape) -> tuple[int, int]:
    if len(shape) != 3:
        raise ShapeError(f"{spec.kind} layer '{spec.id}' expects an (H, W, C) tensor", spec.id, (shape,))
    h = window_output(shape[0], params.kernel_h, params.stride_h, params.padding)
    w = window_output(shape[1], params.kernel_w, params.stride_w, params.padding)
    if h is None or w is None:
        kernel = (params.kernel_h, params.kernel_w)
        raise ShapeError(f"Kernel {kernel} of layer '{spec.id}' is larger than its padded input", spec.id, (shape,))
    return h, w


def _layer_shape(spec: LayerSpec, in_shapes: list[Shape], input_size: int, input_channels: int) -> Shape:
    kind = spec.kind
    params: Any = spec.params

    if kind == LayerKind.INPUT:
        return (input_size, input_size, input_channels)

    if kind == LayerKind.CONV2D:
        shape = in_shapes[0]
        h, w = _spatial(spec, params, shape)
        if shape[2] % params.groups:
            raise ShapeError(
                f"groups={params.groups} of layer '{spec.id}' does not divide {shape[2]} input channels",
                spec.id,
                (shape,),
            )
        return (h, w, params.filters)

    if kind == LayerKind.POOL:
        shape = in_shapes[0]
        h, w = _spatial(spec, params, shape)
        return (h, w, shape[2])

    if kind == LayerKind.DENSE:
        shape = in_shapes[0]
        if len(shape) != 1:
            raise ShapeError(f"Dense layer '{spec.id}' is fed a non-flattened tensor", spec.id, (shape,))
        return (params.units,)

    if kind == LayerKind.FLATTEN:
        size = 1
        for dim in in_shapes[0]:
            size *= dim
        return (size,)

    if kind == LayerKind.GLOBALPOOL:
        shape = in_shapes[0]
        if len(shape) != 3:
            raise ShapeError(f"GlobalPool layer '{spec.id}' expects an (H, W, C) tensor", spec.id, (shape,))
        return (shape[2],)

    if kind in (LayerKind.BATCHNORM, LayerKind.ACTIVATION):
        return in_shapes[0]

    if kind == LayerKind.ADD:
        first = in_shapes[0]
        for other in in_shapes[1:]:
            if other != first:
                raise ShapeError(f"Add layer '{spec.id}' has mismatched input shapes", spec.id, (first, other))
        return first

    if kind == LayerKind.CONCAT:
        first = in_shapes[0]
        for other in in_shapes[1:]:
            if len(other) != len(first) or other[:-1] != first[:-1]:
                raise ShapeError(f"Concat layer '{spec.id}' inputs differ in height/width", spec.id, (first, other))
        return (*first[:-1], sum(shape[-1] for shape in in_shapes))

    raise ShapeError(f"Unsupported layer kind {kind}", spec.id)


def infer_shapes(graph: ModelGraph, input_size: int, input_channels: int = 3) -> ShapedGraph:
    """为给定输入尺寸推断每一层的输出形状"""
    if input_size < 1 or input_channels < 1:
        raise PreconditionError(
            "input_size and input_channels must be >= 1", input_size=input_size, input_channels=input_channels
        )

    shapes: dict[str, Shape] = {}
    for spec in graph.topological_order():
        shape = _layer_shape(spec, [shapes[ref] for ref in spec.inputs], input_size, input_channels)
        if any(dim < 1 for dim in shape):
            raise ShapeError(f"Layer '{spec.id}' produces an empty tensor", spec.id, (shape,))
        shapes[spec.id] = shape

    return ShapedGraph(graph=graph, input_size=input_size, input_channels=input_channels, tensor_shapes=shapes)
