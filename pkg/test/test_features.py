"""
FLOP counting, feature extraction and feature ranking.
"""

from __future__ import annotations

import pytest

from src.exceptions import PreconditionError, UnknownFeatureError
from src.features.extract import FEATURE_TABLE_COLUMNS, extract_features, features_table, graph_features, rank_features
from src.features.flops import count_flops
from src.features.vector import FEATURE_NAMES, FeatureVector
from src.graph.builder import GraphBuilder
from src.graph.shapes import infer_shapes
from src.graph.zoo import zoo_model


def _conv_graph(use_bias: bool = False):
    b = GraphBuilder("one", "toy", "a")
    b.conv(b.input(), 16, 3, 1, padding="same", use_bias=use_bias)
    return b.build()


def test_conv_flops_by_hand():
    flops = count_flops(infer_shapes(_conv_graph(), 8))
    assert flops.conv2d == 2 * 3 * 3 * 3 * 8 * 8 * 16 == 55_296
    assert flops.total == flops.conv2d


def test_conv_bias_adds_one_flop_per_output():
    with_bias = count_flops(infer_shapes(_conv_graph(use_bias=True), 8))
    assert with_bias.conv2d == 55_296 + 8 * 8 * 16


def test_input_only_graph():
    b = GraphBuilder("empty", "toy", "a")
    b.input()
    fv, flops = graph_features(b.build(), 32)
    assert flops.total == 0
    values = dict(zip(FEATURE_NAMES, fv.as_tuple()))
    assert values.pop("input_image_size") == 32
    assert all(v == 0 for v in values.values())


def test_conv_features_by_hand():
    fv = extract_features(infer_shapes(_conv_graph(), 8))
    assert fv.sum_activations == 1024
    assert fv.weighted_sum_neurons == 1024 * 27 == 27_648
    assert fv.conv_params == 432
    assert fv.conv_layers == 1
    assert fv.total_layers == 1


def test_dense_features_by_hand():
    b = GraphBuilder("fc", "toy", "a")
    b.dense(b.flatten(b.input()), 10)
    fv, flops = graph_features(b.build(), 2, input_channels=1)
    assert fv.fc_params == 50
    assert fv.fc_layers == 1
    assert fv.conv_layers == 0
    assert fv.weighted_sum_neurons == 10
    assert flops.dense == 2 * 4 * 10 + 10


def test_batchnorm_counts_four_parameters_per_channel(tiny_graph):
    fv, flops = graph_features(tiny_graph, 16)
    assert fv.bn_layers == 1
    assert fv.bn_params == 4 * 8
    # BN 折算为一次乘一次加，ReLU 计一次乘
    assert flops.add == 16 * 16 * 8
    assert flops.mul == 2 * 16 * 16 * 8


def test_depthwise_conv_uses_group_channels():
    b = GraphBuilder("dw", "toy", "a")
    b.depthwise(b.conv(b.input(), 8, 1, use_bias=False), 8, 3)
    sg = infer_shapes(b.build(), 10)
    fv = extract_features(sg)
    # 1x1 卷积 3*8 个参数，深度卷积 3*3*1*8 个参数
    assert fv.conv_params == 3 * 8 + 9 * 8


def test_resnet50_conv_flops_close_to_reference():
    flops = count_flops(infer_shapes(zoo_model("resnet_v1", "50"), 224))
    assert flops.conv2d == pytest.approx(7.71e9, rel=0.05)


def test_features_grow_with_input_size():
    graph = zoo_model("mobilenet_v1", "1.0")
    small, _ = graph_features(graph, 128)
    large, _ = graph_features(graph, 224)
    assert large.total_flops > small.total_flops
    assert large.sum_activations > small.sum_activations
    assert large.conv_params == small.conv_params


def test_features_table_columns(tiny_graph):
    frame = features_table([tiny_graph], [16, 32])
    assert list(frame.columns) == FEATURE_TABLE_COLUMNS
    assert frame["input_size"].tolist() == [16, 32]
    assert (frame["flops_conv2d"] > 0).all()


def test_feature_vector_from_array_checks_length():
    with pytest.raises(ValueError):
        FeatureVector.from_array([1.0, 2.0])


def test_rank_features_two_keys():
    order = rank_features({"total_flops": 100, "sum_activations": 250})
    assert order[:2] == ["sum_activations", "total_flops"]
    assert order[2:] == [name for name in FEATURE_NAMES if name not in ("total_flops", "sum_activations")]


def test_rank_features_ties_follow_canonical_order():
    assert rank_features({name: 3 for name in FEATURE_NAMES}) == list(FEATURE_NAMES)


def test_rank_features_rejects_unknown_and_negative():
    with pytest.raises(UnknownFeatureError):
        rank_features({"depth": 1})
    with pytest.raises(PreconditionError):
        rank_features({"total_flops": -1})
