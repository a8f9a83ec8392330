"""
模型图解析与校验

模型描述文档为 YAML，每个文档一张图：name / family / variant / layers[]。
层的声明顺序即拓扑排序时的优先级，解析与序列化都是纯函数。
"""

from functools import cached_property
from pathlib import Path
from typing import Any

import networkx as nx
import yaml
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator

from src.exceptions import DataIOError, GraphSyntaxError, GraphValidationError
from src.graph.layers import MERGE_KINDS, SINGLE_INPUT_KINDS, LayerKind, LayerSpec

REQUIRED_KEYS = ("name", "family", "variant", "layers")


class ModelGraph(BaseModel):
    """CNN 架构：按声明顺序排列的层 DAG"""

    model_config = ConfigDict(frozen=True)

    name: str
    family: str
    variant: str
    layers: tuple[LayerSpec, ...]

    @field_validator("name", "family", "variant", mode="before")
    @classmethod
    def _as_text(cls, value: Any) -> Any:
        return str(value) if isinstance(value, int | float) else value

    @cached_property
    def layer_index(self) -> dict[str, LayerSpec]:
        return {spec.id: spec for spec in self.layers}

    def layer(self, layer_id: str) -> LayerSpec:
        return self.layer_index[layer_id]

    @property
    def input_layer(self) -> LayerSpec:
        return next(spec for spec in self.layers if spec.kind == LayerKind.INPUT)

    def to_networkx(self) -> nx.DiGraph:
        g = nx.DiGraph()
        for index, spec in enumerate(self.layers):
            g.add_node(spec.id, index=index)
        for spec in self.layers:
            for src in spec.inputs:
                g.add_edge(src, spec.id)
        return g

    def topological_order(self) -> list[LayerSpec]:
        """拓扑序，并列时按声明顺序"""
        g = self.to_networkx()
        index = {spec.id: i for i, spec in enumerate(self.layers)}
        by_id = {spec.id: spec for spec in self.layers}
        return [by_id[i] for i in nx.lexicographical_topological_sort(g, key=index.__getitem__)]


def validate_graph(graph: ModelGraph) -> ModelGraph:
    """检查图的结构不变量，失败时抛出 GraphValidationError 并指明层 id"""
    seen: set[str] = set()
    for spec in graph.layers:
        if spec.id in seen:
            raise GraphValidationError(f"Duplicate layer id '{spec.id}'", layer_id=spec.id)
        seen.add(spec.id)

    for spec in graph.layers:
        for ref in spec.inputs:
            if ref not in seen:
                raise GraphValidationError(
                    f"Layer '{spec.id}' references undefined input '{ref}'", layer_id=spec.id, missing=ref
                )
        if len(set(spec.inputs)) != len(spec.inputs):
            raise GraphValidationError(f"Layer '{spec.id}' lists the same input twice", layer_id=spec.id)

        n_inputs = len(spec.inputs)
        if spec.kind == LayerKind.INPUT and n_inputs:
            raise GraphValidationError(f"Input layer '{spec.id}' must not have inputs", layer_id=spec.id)
        if spec.kind in SINGLE_INPUT_KINDS and n_inputs != 1:
            raise GraphValidationError(
                f"{spec.kind} layer '{spec.id}' needs exactly one input, got {n_inputs}", layer_id=spec.id
            )
        if spec.kind in MERGE_KINDS and n_inputs < 2:
            raise GraphValidationError(
                f"{spec.kind} layer '{spec.id}' needs at least two inputs, got {n_inputs}", layer_id=spec.id
            )

    inputs = [spec.id for spec in graph.layers if spec.kind == LayerKind.INPUT]
    if len(inputs) != 1:
        raise GraphValidationError(
            f"Graph must have exactly one Input layer, found {len(inputs)}",
            layer_id=inputs[1] if len(inputs) > 1 else None,
        )

    g = graph.to_networkx()
    if not nx.is_directed_acyclic_graph(g):
        cycle = nx.find_cycle(g)
        raise GraphValidationError(
            "Graph contains a cycle: " + " -> ".join(edge[0] for edge in cycle), layer_id=cycle[0][0]
        )

    reachable = nx.descendants(g, inputs[0]) | {inputs[0]}
    for spec in graph.layers:
        if spec.id not in reachable:
            raise GraphValidationError(f"Layer '{spec.id}' is not reachable from Input", layer_id=spec.id)

    return graph


def build_model(name: str, family: str, variant: str, layers: list[LayerSpec | dict]) -> ModelGraph:
    """由层列表构造并校验 ModelGraph"""
    specs = []
    for position, layer in enumerate(layers):
        if isinstance(layer, LayerSpec):
            specs.append(layer)
            continue
        layer_id = layer.get("id") if isinstance(layer, dict) else None
        try:
            specs.append(LayerSpec.model_validate(layer))
        except ValidationError as e:
            detail = "; ".join(f"{'.'.join(map(str, err['loc'])) or 'layer'}: {err['msg']}" for err in e.errors())
            raise GraphValidationError(
                f"Invalid layer #{position}: {detail}", layer_id=str(layer_id) if layer_id is not None else None
            ) from None
    try:
        graph = ModelGraph(name=name, family=family, variant=variant, layers=tuple(specs))
    except ValidationError as e:
        raise GraphValidationError(f"Invalid graph header: {e.errors()[0]['msg']}") from None
    return validate_graph(graph)


def parse_model(text: str) -> ModelGraph:
    """解析模型描述文档"""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        line = mark.line + 1 if mark else None
        column = mark.column + 1 if mark else None
        problem = getattr(e, "problem", None) or str(e)
        raise GraphSyntaxError(f"Malformed model description: {problem}", line=line, column=column) from None

    if not isinstance(doc, dict):
        raise GraphSyntaxError("Model description must be a mapping with name, family, variant and layers")
    missing = [key for key in REQUIRED_KEYS if key not in doc]
    if missing:
        raise GraphSyntaxError(f"Model description is missing keys: {', '.join(missing)}")
    unknown = sorted(set(doc) - set(REQUIRED_KEYS))
    if unknown:
        raise GraphSyntaxError(f"Unknown top-level keys: {', '.join(map(str, unknown))}")
    if not isinstance(doc["layers"], list) or not all(isinstance(layer, dict) for layer in doc["layers"]):
        raise GraphSyntaxError("'layers' must be a list of layer objects")

    return build_model(doc["name"], doc["family"], doc["variant"], doc["layers"])


def graph_to_dict(graph: ModelGraph) -> dict:
    layers = []
    for spec in graph.layers:
        entry: dict[str, Any] = {"id": spec.id, "kind": str(spec.kind), "inputs": list(spec.inputs)}
        params = spec.params.model_dump(mode="json")
        if params:
            entry["params"] = params
        layers.append(entry)
    return {"name": graph.name, "family": graph.family, "variant": graph.variant, "layers": layers}


def serialize_model(graph: ModelGraph) -> str:
    """parse_model 的逆操作"""
    return yaml.safe_dump(graph_to_dict(graph), sort_keys=False, allow_unicode=True, default_flow_style=None)


def load_model(path: str | Path) -> ModelGraph:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise DataIOError(f"Cannot read model description: {e.strerror}", path=str(path)) from e
    return parse_model(text)


def save_model(graph: ModelGraph, path: str | Path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(serialize_model(graph), encoding="utf-8", newline="\n")
    except OSError as e:
        raise DataIOError(f"Cannot write model description: {e.strerror}", path=str(path)) from e
    return path
