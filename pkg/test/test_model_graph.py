"""
Model description parsing, graph validation and shape inference.
"""

from __future__ import annotations

from pathlib import Path

import pytest

from src.exceptions import GraphSyntaxError, GraphValidationError, PreconditionError, ShapeError
from src.graph.builder import GraphBuilder
from src.graph.layers import LayerKind
from src.graph.model_graph import load_model, parse_model, save_model, serialize_model
from src.graph.shapes import infer_shapes, window_output
from src.graph.zoo import ZOO, zoo_model

EXAMPLES = sorted((Path(__file__).resolve().parents[1] / "docs" / "examples").glob("*.cnn.yaml"))

MINIMAL = """
name: minimal
family: toy
variant: a
layers:
  - {id: input, kind: Input}
  - {id: c1, kind: Conv2D, inputs: [input], params: {filters: 16, kernel: 3, stride: 1, padding: same}}
  - {id: gp, kind: GlobalPool, inputs: [c1], params: {mode: avg}}
  - {id: fc, kind: Dense, inputs: [gp], params: {units: 10}}
"""

RESIDUAL = """
name: block
family: toy
variant: res
layers:
  - {id: input, kind: Input}
  - {id: stem, kind: Conv2D, inputs: input, params: {filters: 16, kernel: 3}}
  - {id: a1, kind: Conv2D, inputs: stem, params: {filters: 16, kernel: 3}}
  - {id: a2, kind: Conv2D, inputs: a1, params: {filters: 16, kernel: 3}}
  - {id: b1, kind: Conv2D, inputs: stem, params: {filters: 16, kernel: 1}}
  - {id: sum, kind: Add, inputs: [a2, b1]}
  - {id: relu, kind: Activation, inputs: sum, params: {fn: relu}}
"""


def _single_conv(**conv) -> GraphBuilder:
    b = GraphBuilder("one", "toy", "a")
    b.conv(b.input(), **conv)
    return b


def test_parse_minimal_graph():
    graph = parse_model(MINIMAL)
    assert len(graph.layers) == 4
    assert [spec.kind for spec in graph.layers].count(LayerKind.INPUT) == 1
    conv = graph.layer("c1").params
    assert (conv.kernel_h, conv.kernel_w, conv.stride_h, conv.stride_w) == (3, 3, 1, 1)


def test_parse_residual_block_topology():
    graph = parse_model(RESIDUAL)
    assert graph.layer("sum").inputs == ("a2", "b1")
    order = [spec.id for spec in graph.topological_order()]
    assert order.index("sum") > max(order.index("a2"), order.index("b1"))


def test_dangling_reference_names_missing_layer():
    text = MINIMAL.replace("inputs: [c1]", "inputs: [cX]")
    with pytest.raises(GraphValidationError) as info:
        parse_model(text)
    assert "cX" in str(info.value)
    assert info.value.layer_id == "gp"


def test_malformed_document_reports_line():
    with pytest.raises(GraphSyntaxError) as info:
        parse_model("name: x\nlayers: [\n  {id: 1\n")
    assert info.value.line is not None


def test_missing_top_level_key():
    with pytest.raises(GraphSyntaxError, match="variant"):
        parse_model("name: x\nfamily: y\nlayers: []\n")


def test_duplicate_layer_id():
    text = MINIMAL.replace("id: gp", "id: c1")
    with pytest.raises(GraphValidationError) as info:
        parse_model(text)
    assert info.value.layer_id == "c1"


def test_cycle_is_rejected():
    text = """
name: loop
family: toy
variant: a
layers:
  - {id: input, kind: Input}
  - {id: a, kind: Add, inputs: [input, b]}
  - {id: b, kind: Activation, inputs: a}
"""
    with pytest.raises(GraphValidationError, match="cycle"):
        parse_model(text)


def test_second_input_layer_is_rejected():
    text = MINIMAL + "  - {id: input2, kind: Input}\n"
    with pytest.raises(GraphValidationError, match="exactly one Input"):
        parse_model(text)


def test_single_input_arity():
    text = MINIMAL.replace("inputs: [gp]", "inputs: [gp, c1]")
    with pytest.raises(GraphValidationError, match="exactly one input"):
        parse_model(text)


def test_unknown_param_is_rejected():
    text = MINIMAL.replace("units: 10", "units: 10, activation: relu")
    with pytest.raises(GraphValidationError):
        parse_model(text)


def test_serialize_parse_roundtrip(tmp_path):
    graph = parse_model(RESIDUAL)
    assert parse_model(serialize_model(graph)) == graph
    path = save_model(graph, tmp_path / "block.cnn.yaml")
    assert load_model(path) == graph


def test_conv_same_padding_keeps_size():
    sg = infer_shapes(_single_conv(filters=16, kernel=3, stride=1, padding="same").build(), 8)
    assert sg.shape("conv1") == (8, 8, 16)


def test_conv_valid_stride_two():
    sg = infer_shapes(_single_conv(filters=16, kernel=3, stride=2, padding="valid").build(), 8)
    assert sg.shape("conv1") == (3, 3, 16)


def test_kernel_larger_than_input():
    graph = _single_conv(filters=4, kernel=9, padding="valid").build()
    with pytest.raises(ShapeError) as info:
        infer_shapes(graph, 8)
    assert info.value.layer_id == "conv1"


def test_add_with_mismatched_channels():
    b = GraphBuilder("bad", "toy", "a")
    x = b.input()
    b.add([b.conv(x, 16, 3), b.conv(x, 32, 3)])
    with pytest.raises(ShapeError, match="mismatched"):
        infer_shapes(b.build(), 8)


def test_concat_sums_channels():
    b = GraphBuilder("cat", "toy", "a")
    x = b.input()
    out = b.concat([b.conv(x, 16, 3), b.conv(x, 8, 1)])
    assert infer_shapes(b.build(), 8).shape(out) == (8, 8, 24)


def test_dense_needs_flattened_input():
    b = GraphBuilder("flat", "toy", "a")
    b.dense(b.conv(b.input(), 4, 3), 10)
    with pytest.raises(ShapeError, match="non-flattened"):
        infer_shapes(b.build(), 8)


def test_flatten_then_dense():
    b = GraphBuilder("flat", "toy", "a")
    fc = b.dense(b.flatten(b.conv(b.input(), 4, 3)), 10)
    sg = infer_shapes(b.build(), 8)
    assert sg.shape("flatten1") == (256,)
    assert sg.shape(fc) == (10,)


def test_invalid_input_size():
    with pytest.raises(PreconditionError):
        infer_shapes(_single_conv(filters=4, kernel=3).build(), 0)


def test_window_output_same_rounds_up():
    assert window_output(7, 3, 2, "same") == 4
    assert window_output(7, 3, 2, "valid") == 3


@pytest.mark.parametrize("family", sorted(ZOO))
def test_zoo_graphs_end_in_classifier(family):
    for variant in ZOO[family][1]:
        graph = zoo_model(family, variant)
        sg = infer_shapes(graph, 224)
        assert sg.shape(graph.layers[-1].id) == (1000,)


def test_unknown_zoo_variant():
    with pytest.raises(KeyError):
        zoo_model("vgg", "7")


@pytest.mark.parametrize("path", EXAMPLES, ids=lambda p: p.name)
def test_documented_examples_are_valid(path):
    graph = load_model(path)
    for size in (32, 224):
        assert infer_shapes(graph, size).shape(graph.layers[-1].id) == (10,)
