"""
特征提取

卷积层的"神经元"指输出特征图元素 H*W*C，并按卷积核体积加权；全连接层的神经元直接按 units 计入。
BatchNorm 每通道 4 个参数（scale、shift、running mean、running variance）。
"""

from collections.abc import Iterable, Mapping

import pandas as pd

from src.exceptions import PreconditionError, UnknownFeatureError
from src.features.flops import CATEGORIES, FlopBreakdown, count_flops
from src.features.vector import FEATURE_NAMES, FeatureVector
from src.graph.layers import LayerKind
from src.graph.model_graph import ModelGraph
from src.graph.shapes import ShapedGraph, infer_shapes

FEATURE_TABLE_COLUMNS = [
    "name",
    "family",
    "variant",
    "input_size",
    *FEATURE_NAMES,
    *(f"flops_{c}" for c in CATEGORIES),
]


def extract_features(sg: ShapedGraph, flops: FlopBreakdown | None = None) -> FeatureVector:
    sum_activations = 0
    weighted_neurons = 0
    conv_params = fc_params = bn_params = 0
    conv_layers = fc_layers = bn_layers = total_layers = 0

    for spec in sg.ordered_layers():
        if spec.kind == LayerKind.INPUT:
            continue
        total_layers += 1
        out_shape = sg.shape(spec.id)
        out_elements = 1
        for dim in out_shape:
            out_elements *= dim
        sum_activations += out_elements
        p = spec.params

        if spec.kind == LayerKind.CONV2D:
            conv_layers += 1
            c_in = sg.input_shapes(spec)[0][2]
            filter_volume = p.kernel_h * p.kernel_w * (c_in // p.groups)
            weighted_neurons += out_elements * filter_volume
            conv_params += filter_volume * p.filters + (p.filters if p.use_bias else 0)
        elif spec.kind == LayerKind.DENSE:
            fc_layers += 1
            n_in = sg.input_shapes(spec)[0][0]
            weighted_neurons += p.units
            fc_params += n_in * p.units + (p.units if p.use_bias else 0)
        elif spec.kind == LayerKind.BATCHNORM:
            bn_layers += 1
            bn_params += 4 * out_shape[-1]

    return FeatureVector(
        total_flops=float((flops or count_flops(sg)).total),
        sum_activations=float(sum_activations),
        weighted_sum_neurons=float(weighted_neurons),
        conv_params=float(conv_params),
        total_layers=float(total_layers),
        input_image_size=float(sg.input_size),
        fc_params=float(fc_params),
        bn_params=float(bn_params),
        bn_layers=float(bn_layers),
        conv_layers=float(conv_layers),
        fc_layers=float(fc_layers),
    )


def graph_features(graph: ModelGraph, input_size: int, input_channels: int = 3) -> tuple[FeatureVector, FlopBreakdown]:
    """形状推断 + 特征提取 + FLOPs 分类统计"""
    sg = infer_shapes(graph, input_size, input_channels)
    flops = count_flops(sg)
    return extract_features(sg, flops), flops


def rank_features(importance: Mapping[str, float]) -> list[str]:
    """按 F-score 降序排列特征

    未出现的特征按规范顺序排在最后，并列时同样按规范顺序。
    """
    unknown = sorted(set(importance) - set(FEATURE_NAMES))
    if unknown:
        raise UnknownFeatureError(f"Unknown features: {', '.join(unknown)}")
    negative = [name for name, score in importance.items() if score < 0]
    if negative:
        raise PreconditionError(f"F-scores must be non-negative: {', '.join(negative)}")

    position = {name: i for i, name in enumerate(FEATURE_NAMES)}
    scored = sorted(importance, key=lambda name: (-importance[name], position[name]))
    return scored + [name for name in FEATURE_NAMES if name not in importance]


def features_table(graphs: Iterable[ModelGraph], sizes: Iterable[int], input_channels: int = 3) -> pd.DataFrame:
    """每个 (图, 输入尺寸) 一行：标识列、11 个特征、5 个 FLOPs 分类"""
    sizes = list(sizes)
    rows = []
    for graph in graphs:
        for size in sizes:
            fv, flops = graph_features(graph, size, input_channels)
            row = {"name": graph.name, "family": graph.family, "variant": graph.variant, "input_size": size}
            row.update(zip(FEATURE_NAMES, fv.as_tuple()))
            row.update({f"flops_{c}": getattr(flops, c) for c in CATEGORIES})
            rows.append(row)
    return pd.DataFrame(rows, columns=FEATURE_TABLE_COLUMNS)
