from src.graph.builder import GraphBuilder
from src.graph.layers import LayerKind, LayerSpec
from src.graph.model_graph import (
    ModelGraph,
    build_model,
    load_model,
    parse_model,
    save_model,
    serialize_model,
    validate_graph,
)
from src.graph.shapes import ShapedGraph, infer_shapes
from src.graph.zoo import ZOO, zoo_model

__all__ = [
    "GraphBuilder",
    "LayerKind",
    "LayerSpec",
    "ModelGraph",
    "ShapedGraph",
    "ZOO",
    "build_model",
    "infer_shapes",
    "load_model",
    "parse_model",
    "save_model",
    "serialize_model",
    "validate_graph",
    "zoo_model",
]
