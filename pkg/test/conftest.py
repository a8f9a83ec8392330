"""
Shared pytest fixtures: tiny graphs, a small multi-family dataset and its split plan.
"""

from __future__ import annotations

import numpy as np
import pytest

from src.dataset import Dataset, SplitPlan, make_split
from src.graph.builder import GraphBuilder
from src.graph.model_graph import ModelGraph
from src.synthetic import SIZES_27, CorpusConfig, SynthConfig, build_synth_corpus, default_profiles

# 6 sizes per reference variant keep the corpus small but leave room for NIS hold-outs
SMALL_SIZES = SIZES_27[2:8]


@pytest.fixture
def tiny_graph() -> ModelGraph:
    """Input -> Conv2D(8, 3x3) -> BN -> ReLU -> GlobalPool -> Dense(10)"""
    b = GraphBuilder("tiny", "toy", "a")
    x = b.input()
    x = b.act(b.bn(b.conv(x, 8, 3)))
    b.dense(b.global_pool(x), 10)
    return b.build()


@pytest.fixture(scope="session")
def small_corpus_config() -> CorpusConfig:
    styles = (
        SynthConfig(
            seed=1, n_models=3, family="synth_bn", sizes_per_model=4, depth_range=(3, 6), filter_range=(16, 64)
        ),
        SynthConfig(
            seed=2,
            n_models=3,
            family="synth_residual",
            residual=True,
            sizes_per_model=4,
            depth_range=(3, 6),
            filter_range=(16, 64),
        ),
    )
    return CorpusConfig(seed=7, zoo_sizes={"vgg": SMALL_SIZES, "mobilenet_v1": SMALL_SIZES}, styles=styles)


@pytest.fixture(scope="session")
def small_dataset(small_corpus_config) -> Dataset:
    """72 records over 4 families on the agx-like profile"""
    return build_synth_corpus(small_corpus_config, default_profiles()[:1])["agx-like"]


@pytest.fixture(scope="session")
def small_plan(small_dataset) -> SplitPlan:
    return make_split(small_dataset, 0.7, seed=3)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240601)


@pytest.fixture
def pinned_epoch(monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
    return 1700000000
