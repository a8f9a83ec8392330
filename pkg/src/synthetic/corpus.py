"""
合成语料

结构与基准表一致：参考架构家族 × 变体 × 各自的输入尺寸列表，加上若干合成风格家族。
每个 (模型, 尺寸) 的特征只计算一次，所有设备画像共享同一特征列。
"""

from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field

from src.dataset.records import Dataset, MeasurementRecord, save_measurements
from src.exceptions import DataIOError, PreconditionError
from src.features.extract import graph_features
from src.features.vector import FeatureVector
from src.graph.model_graph import ModelGraph, save_model
from src.graph.zoo import ZOO
from src.synthetic.generator import SIZES_23, SIZES_25, SIZES_27, SynthConfig, generate_cnn, measured_sizes
from src.synthetic.oracle import DeviceProfile, synth_latency
from src.utils import logger

# 时延噪声的随机流编号
NOISE_STREAM = 3

DEFAULT_ZOO_SIZES: dict[str, tuple[int, ...]] = {
    "resnet_v1": SIZES_27,
    "mobilenet_v1": SIZES_27,
    "densenet": SIZES_23,
    "vgg": SIZES_25,
}


def default_styles(seed: int = 0) -> tuple[SynthConfig, ...]:
    """八个合成风格家族，每个 25 个模型"""
    styles = {
        "synth_plain": {"batchnorm": False},
        "synth_bn": {},
        "synth_pool": {"pooling": True},
        "synth_residual": {"residual": True},
        "synth_depthwise": {"depthwise": True},
        "synth_dense": {"concat": True, "filter_range": (16, 128)},
        "synth_mixed": {"residual": True, "depthwise": True, "pooling": True, "concat": True},
        "synth_wide": {"pooling": True, "depth_range": (3, 8), "filter_range": (64, 512)},
    }
    return tuple(
        SynthConfig(seed=seed + i, family=family, **overrides) for i, (family, overrides) in enumerate(styles.items())
    )


class CorpusConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    seed: int = 42
    zoo_sizes: dict[str, tuple[int, ...]] = Field(default_factory=lambda: dict(DEFAULT_ZOO_SIZES))
    styles: tuple[SynthConfig, ...] = Field(default_factory=default_styles)
    replicates: int = Field(default=1, ge=1)


class CorpusEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    graph: ModelGraph
    input_size: int
    features: FeatureVector


def corpus_graphs(cfg: CorpusConfig) -> list[tuple[ModelGraph, tuple[int, ...]]]:
    """按固定顺序列出 (模型图, 输入尺寸列表)：先参考架构，再各合成风格"""
    graphs = []
    for family, sizes in cfg.zoo_sizes.items():
        if family not in ZOO:
            raise PreconditionError(f"Unknown reference family '{family}'. Available: {sorted(ZOO)}")
        builder, variants = ZOO[family]
        graphs.extend((builder(variant), tuple(sizes)) for variant in variants)
    for style in cfg.styles:
        graphs.extend((generate_cnn(style, i), measured_sizes(style, i)) for i in range(style.n_models))
    return graphs


def corpus_entries(cfg: CorpusConfig) -> list[CorpusEntry]:
    entries = []
    for graph, sizes in corpus_graphs(cfg):
        for size in sizes:
            fv, _ = graph_features(graph, size)
            entries.append(CorpusEntry(graph=graph, input_size=size, features=fv))
    return entries


def _measure(entries: list[CorpusEntry], profile: DeviceProfile, cfg: CorpusConfig) -> Dataset:
    records = []
    for row, entry in enumerate(entries):
        keys = [(cfg.seed, NOISE_STREAM, row, r) for r in range(cfg.replicates)]
        draws = [synth_latency(entry.features, profile, key) for key in keys]
        mean = sum(draws) / len(draws)
        std = (sum((d - mean) ** 2 for d in draws) / (len(draws) - 1)) ** 0.5 if len(draws) > 1 else 0.0
        records.append(
            MeasurementRecord(
                model_name=entry.graph.name,
                family=entry.graph.family,
                variant=entry.graph.variant,
                input_size=entry.input_size,
                device=profile.name,
                features=entry.features,
                latency_ms=mean,
                latency_std_ms=std,
                replicates=cfg.replicates,
            )
        )
    return Dataset(device=profile.name, records=tuple(records))


def build_synth_corpus(cfg: CorpusConfig, profiles: list[DeviceProfile]) -> dict[str, Dataset]:
    """每个设备画像一个数据集，特征列完全相同"""
    if not profiles:
        raise PreconditionError("At least one device profile is required")
    names = [p.name for p in profiles]
    if len(set(names)) != len(names):
        raise PreconditionError(f"Device profile names must be unique: {names}")
    entries = corpus_entries(cfg)
    logger.info(f"Synthetic corpus: {len(entries)} (model, size) records for profiles {names}")
    return {profile.name: _measure(entries, profile, cfg) for profile in profiles}


def write_corpus(cfg: CorpusConfig, profiles: list[DeviceProfile], out_dir: str | Path) -> dict[str, Path]:
    """写出 graphs/<模型名>.cnn.yaml 与每个画像的 <画像名>.csv"""
    out_dir = Path(out_dir)
    graph_dir = out_dir / "graphs"
    try:
        graph_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise DataIOError(f"Cannot create corpus directory: {e}", path=str(out_dir)) from e

    entries = corpus_entries(cfg)
    written: dict[str, Path] = {}
    for entry in entries:
        if entry.graph.name not in written:
            written[entry.graph.name] = save_model(entry.graph, graph_dir / f"{entry.graph.name}.cnn.yaml")

    outputs = {}
    for profile in profiles:
        outputs[profile.name] = save_measurements(_measure(entries, profile, cfg), out_dir / f"{profile.name}.csv")
    logger.info(f"Wrote {len(written)} graphs and {len(outputs)} measurement files to {out_dir}")
    return outputs
