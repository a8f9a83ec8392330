"""
合成 CNN 架构生成器

构造式生成：逐层组装、全部使用 "same" 填充，下采样次数受最小输入尺寸约束，
因此生成的图在所有配置的输入尺寸上都能通过形状推断。
"""

import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from tenacity import RetryError, Retrying, retry_if_exception_type, stop_after_attempt

from src.exceptions import ConfigError, GenerationRetryExceeded, PreconditionError, ShapeError
from src.graph.builder import GraphBuilder
from src.graph.model_graph import ModelGraph
from src.graph.shapes import infer_shapes
from src.utils import derive_rng, logger

# 基准表中的三组输入尺寸
SIZES_27 = (32, 56, 64, 75, 90, 112, 128, 150, 224, 240, 256, 299, 320, 331, 448, 480, 512, 568, 600, 720, 800, 896,
            1024, 1200, 1600, 1792, 2400)
SIZES_25 = SIZES_27[:25]
SIZES_23 = SIZES_27[:23]

MAX_ATTEMPTS = 100
# 尺寸抽样的随机流编号，不与生成尝试序号 0..MAX_ATTEMPTS-1 重叠
SIZE_STREAM = 1_000
CLASSES = 1000


class SynthConfig(BaseModel):
    """一个合成架构家族的生成参数"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    seed: int = 0
    n_models: int = Field(default=25, ge=1)
    family: str = Field(default="synthetic", min_length=1)
    depth_range: tuple[int, int] = (4, 14)
    filter_range: tuple[int, int] = (16, 256)
    kernel_set: tuple[int, ...] = (1, 3, 5, 7)
    stride_set: tuple[int, ...] = (1, 2)
    residual: bool = False
    depthwise: bool = False
    batchnorm: bool = True
    pooling: bool = False
    concat: bool = False
    input_sizes: tuple[int, ...] = SIZES_23
    # 每个模型测量的输入尺寸个数，None 表示全部
    sizes_per_model: int | None = Field(default=8, ge=1)
    fc_layers_range: tuple[int, int] = (0, 2)
    fc_width_range: tuple[int, int] = (64, 1024)

    def __init__(self, **data):
        try:
            super().__init__(**data)
        except ValidationError as e:
            raise ConfigError(f"Invalid SynthConfig: {e.errors()[0]['msg']}") from None

    @field_validator("depth_range", "filter_range", "fc_width_range")
    @classmethod
    def _positive_range(cls, value: tuple[int, int]) -> tuple[int, int]:
        if value[0] < 1 or value[0] > value[1]:
            raise ValueError(f"range {value} must be ordered and start at >= 1")
        return value

    @field_validator("fc_layers_range")
    @classmethod
    def _fc_range(cls, value: tuple[int, int]) -> tuple[int, int]:
        if value[0] < 0 or value[0] > value[1]:
            raise ValueError(f"range {value} must be ordered and non-negative")
        return value

    @field_validator("kernel_set", "stride_set", "input_sizes")
    @classmethod
    def _non_empty(cls, value: tuple[int, ...]) -> tuple[int, ...]:
        if not value or min(value) < 1:
            raise ValueError("sets must be non-empty and hold positive integers")
        return tuple(sorted(set(value)))

    @model_validator(mode="after")
    def _check_sizes(self):
        if self.sizes_per_model is not None and self.sizes_per_model > len(self.input_sizes):
            raise ValueError("sizes_per_model exceeds the number of input sizes")
        return self

    @property
    def downsample_budget(self) -> int:
        """最多允许的步长 2 次数，保证最小输入尺寸下特征图不小于 2x2"""
        return max(int(math.log2(min(self.input_sizes))) - 1, 0)


def _draw_filters(rng: np.random.Generator, low: int, high: int) -> int:
    # 对数均匀分布，取 8 的倍数
    value = math.exp(rng.uniform(math.log(low), math.log(high)))
    return int(min(max(8, round(value / 8) * 8), max(high, 8)))


class _Assembler:
    """单次生成尝试的状态"""

    def __init__(self, cfg: SynthConfig, index: int, rng: np.random.Generator):
        self.cfg = cfg
        self.rng = rng
        self.b = GraphBuilder(f"{cfg.family}_{index}", cfg.family, index)
        self.x = self.b.input()
        self.channels = 3
        self.budget = cfg.downsample_budget

    def _stride(self) -> int:
        stride = int(self.rng.choice(self.cfg.stride_set))
        if stride > 1 and self.budget > 0:
            self.budget -= 1
            return stride
        return 1

    def _finish(self, x: str) -> str:
        if self.cfg.batchnorm:
            x = self.b.bn(x)
        return self.b.act(x, "relu")

    def plain(self):
        filters = _draw_filters(self.rng, *self.cfg.filter_range)
        kernel = int(self.rng.choice(self.cfg.kernel_set))
        x = self.b.conv(self.x, filters, kernel, self._stride(), use_bias=not self.cfg.batchnorm)
        self.x = self._finish(x)
        self.channels = filters

    def residual(self):
        kernel = int(self.rng.choice([k for k in self.cfg.kernel_set if k > 1] or self.cfg.kernel_set))
        y = self._finish(self.b.conv(self.x, self.channels, kernel, use_bias=not self.cfg.batchnorm))
        y = self.b.conv(y, self.channels, kernel, use_bias=not self.cfg.batchnorm)
        if self.cfg.batchnorm:
            y = self.b.bn(y)
        self.x = self.b.act(self.b.add([y, self.x]), "relu")

    def depthwise(self):
        kernel = int(self.rng.choice([k for k in self.cfg.kernel_set if k > 1] or (3,)))
        x = self._finish(self.b.depthwise(self.x, self.channels, kernel, self._stride()))
        filters = _draw_filters(self.rng, *self.cfg.filter_range)
        self.x = self._finish(self.b.conv(x, filters, 1, use_bias=not self.cfg.batchnorm))
        self.channels = filters

    def concat(self):
        growth = _draw_filters(self.rng, 8, max(8, self.cfg.filter_range[0] * 2))
        y = self.b.conv(self._finish(self.x), growth, 3, use_bias=not self.cfg.batchnorm)
        self.x = self.b.concat([self.x, y])
        self.channels += growth

    def pool(self):
        if self.budget <= 0:
            return
        self.budget -= 1
        mode = "max" if self.rng.random() < 0.5 else "avg"
        self.x = self.b.pool(self.x, mode, int(self.rng.choice((2, 3))), 2, padding="same")

    def head(self):
        x = self.b.global_pool(self.x, "avg")
        low, high = self.cfg.fc_layers_range
        for _ in range(int(self.rng.integers(low, high + 1))):
            x = self.b.act(self.b.dense(x, _draw_filters(self.rng, *self.cfg.fc_width_range)), "relu")
        self.b.dense(x, CLASSES)


def _assemble(cfg: SynthConfig, index: int, attempt: int) -> ModelGraph:
    rng = derive_rng(cfg.seed, index, attempt)
    a = _Assembler(cfg, index, rng)
    depth = int(rng.integers(cfg.depth_range[0], cfg.depth_range[1] + 1))

    blocks = [a.plain]
    if cfg.residual:
        blocks.append(a.residual)
    if cfg.depthwise:
        blocks.append(a.depthwise)
    if cfg.concat:
        blocks.append(a.concat)

    for step in range(depth):
        # 第一个块总是普通卷积，把 3 通道输入变换到特征空间
        block = a.plain if step == 0 else blocks[int(rng.integers(len(blocks)))]
        block()
        if cfg.pooling and step > 0 and rng.random() < 0.3:
            a.pool()
    a.head()
    graph = a.b.build()

    for size in cfg.input_sizes:
        infer_shapes(graph, size)
    return graph


def generate_cnn(cfg: SynthConfig, index: int) -> ModelGraph:
    """由 (seed, index) 确定地生成一个合法的模型图"""
    if not 0 <= index < cfg.n_models:
        raise PreconditionError(f"index must lie in [0, {cfg.n_models}), got {index}")
    try:
        for attempt in Retrying(
            stop=stop_after_attempt(MAX_ATTEMPTS), retry=retry_if_exception_type(ShapeError), reraise=False
        ):
            with attempt:
                number = attempt.retry_state.attempt_number - 1
                if number:
                    logger.warning(f"Regenerating {cfg.family}_{index} (attempt {number + 1})")
                graph = _assemble(cfg, index, number)
    except RetryError as e:
        raise GenerationRetryExceeded(
            f"No shape-valid graph for {cfg.family}_{index} after {MAX_ATTEMPTS} attempts"
        ) from e
    return graph


def measured_sizes(cfg: SynthConfig, index: int) -> tuple[int, ...]:
    """每个合成模型参与测量的输入尺寸（升序）"""
    if cfg.sizes_per_model is None:
        return cfg.input_sizes
    rng = derive_rng(cfg.seed, index, SIZE_STREAM)
    picked = rng.choice(len(cfg.input_sizes), size=cfg.sizes_per_model, replace=False)
    return tuple(cfg.input_sizes[i] for i in sorted(picked))
