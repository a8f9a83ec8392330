"""
参考架构

按常见 Keras 实现复现的几类经典 CNN，用作 FLOPs 校验基准以及语料中的真实架构家族。
只描述结构，不含权重。
"""

from collections.abc import Callable

from src.graph.builder import GraphBuilder
from src.graph.model_graph import ModelGraph

RESNET_STAGES = {
    "18": ("basic", (2, 2, 2, 2)),
    "34": ("basic", (3, 4, 6, 3)),
    "50": ("bottleneck", (3, 4, 6, 3)),
    "101": ("bottleneck", (3, 4, 23, 3)),
    "152": ("bottleneck", (3, 8, 36, 3)),
}
MOBILENET_ALPHAS = ("0.25", "0.5", "0.75", "1.0")
DENSENET_BLOCKS = {"121": (6, 12, 24, 16), "169": (6, 12, 32, 32), "201": (6, 12, 48, 32)}
VGG_STAGES = {"11": (1, 1, 2, 2, 2), "13": (2, 2, 2, 2, 2), "16": (2, 2, 3, 3, 3), "19": (2, 2, 4, 4, 4)}


def resnet_v1(variant: str = "50", classes: int = 1000) -> ModelGraph:
    """ResNet v1，瓶颈块的下采样放在第一个 1x1 卷积上"""
    block, repeats = RESNET_STAGES[str(variant)]
    b = GraphBuilder(f"resnet{variant}_v1", "resnet_v1", variant)
    x = b.input()
    x = b.act(b.bn(b.conv(x, 64, 7, 2)))
    x = b.pool(x, "max", 3, 2, padding="same")

    channels = 64
    for stage, count in enumerate(repeats):
        filters = 64 * 2**stage
        for i in range(count):
            stride = 2 if stage > 0 and i == 0 else 1
            out_channels = filters * 4 if block == "bottleneck" else filters
            shortcut = x
            if stride != 1 or channels != out_channels:
                shortcut = b.bn(b.conv(x, out_channels, 1, stride))
            if block == "bottleneck":
                y = b.act(b.bn(b.conv(x, filters, 1, stride)))
                y = b.act(b.bn(b.conv(y, filters, 3)))
                y = b.bn(b.conv(y, out_channels, 1))
            else:
                y = b.act(b.bn(b.conv(x, filters, 3, stride)))
                y = b.bn(b.conv(y, filters, 3))
            x = b.act(b.add([y, shortcut]))
            channels = out_channels

    x = b.global_pool(x, "avg")
    b.dense(x, classes)
    return b.build()


def mobilenet_v1(alpha: str = "1.0", classes: int = 1000) -> ModelGraph:
    """MobileNet v1，深度可分离卷积由 groups = 输入通道数的 Conv2D 表示"""
    width = float(alpha)
    b = GraphBuilder(f"mobilenet_v1_{alpha}", "mobilenet_v1", alpha)
    x = b.input()
    channels = int(32 * width)
    x = b.conv_bn_act(x, channels, 3, 2, fn="relu6")

    plan = [(64, 1), (128, 2), (128, 1), (256, 2), (256, 1), (512, 2)]
    plan += [(512, 1)] * 5 + [(1024, 2), (1024, 1)]
    for filters, stride in plan:
        x = b.act(b.bn(b.depthwise(x, channels, 3, stride)), "relu6")
        channels = int(filters * width)
        x = b.conv_bn_act(x, channels, 1, fn="relu6")

    x = b.global_pool(x, "avg")
    b.dense(x, classes)
    return b.build()


def densenet(variant: str = "121", classes: int = 1000, growth: int = 32) -> ModelGraph:
    blocks = DENSENET_BLOCKS[str(variant)]
    b = GraphBuilder(f"densenet{variant}", "densenet", variant)
    x = b.input()
    x = b.conv_bn_act(x, 64, 7, 2)
    x = b.pool(x, "max", 3, 2, padding="same")

    channels = 64
    for index, count in enumerate(blocks):
        for _ in range(count):
            y = b.conv(b.act(b.bn(x)), 4 * growth, 1, use_bias=False)
            y = b.conv(b.act(b.bn(y)), growth, 3, use_bias=False)
            x = b.concat([x, y])
            channels += growth
        if index < len(blocks) - 1:
            channels //= 2
            x = b.conv(b.act(b.bn(x)), channels, 1, use_bias=False)
            x = b.pool(x, "avg", 2, 2)

    x = b.act(b.bn(x))
    x = b.global_pool(x, "avg")
    b.dense(x, classes)
    return b.build()


def vgg(variant: str = "16", classes: int = 1000) -> ModelGraph:
    repeats = VGG_STAGES[str(variant)]
    b = GraphBuilder(f"vgg{variant}", "vgg", variant)
    x = b.input()
    for stage, count in enumerate(repeats):
        filters = min(64 * 2**stage, 512)
        for _ in range(count):
            x = b.act(b.conv(x, filters, 3))
        x = b.pool(x, "max", 2, 2)

    x = b.flatten(x)
    x = b.act(b.dense(x, 4096))
    x = b.act(b.dense(x, 4096))
    b.dense(x, classes)
    return b.build()


# family -> (构造函数, 变体列表)
ZOO: dict[str, tuple[Callable[[str], ModelGraph], tuple[str, ...]]] = {
    "resnet_v1": (resnet_v1, tuple(RESNET_STAGES)),
    "mobilenet_v1": (mobilenet_v1, MOBILENET_ALPHAS),
    "densenet": (densenet, tuple(DENSENET_BLOCKS)),
    "vgg": (vgg, tuple(VGG_STAGES)),
}


def zoo_model(family: str, variant: str) -> ModelGraph:
    if family not in ZOO:
        raise KeyError(f"Unknown reference family '{family}'. Available: {sorted(ZOO)}")
    builder, variants = ZOO[family]
    if str(variant) not in variants:
        raise KeyError(f"Unknown variant '{variant}' of {family}. Available: {list(variants)}")
    return builder(str(variant))
