"""
按固定超参数训练一个预测器

train / tune / 交叉验证都经过 train_predictor：构造配置、输入预处理、内部验证集与元数据。
"""

import time
from typing import Any

import numpy as np

from src import __version__
from src.config import config
from src.dataset.standardize import Standardizer
from src.evaluation.predictor import PredictorMetadata, TrainedPredictor
from src.models import PredictorFactory, RegressorConfig
from src.utils import derive_rng, fingerprint_arrays, logger
from src.utils.datetime_utils import pinned_utc, utc_isoformat, utc_now

# 内部验证集的随机流编号，与折划分、模型初始化的流区分开
HOLDOUT_STREAM = 7
MIN_HOLDOUT_ROWS = 20


def needs_validation(kind: str, cfg: RegressorConfig) -> bool:
    """GBT 早停与 MLP 最优轮次恢复需要内部验证集"""
    if kind == "gbt":
        return cfg.early_stopping_rounds > 0
    return kind == "mlp"


def with_seed(kind: str, params: dict[str, Any] | None, seed: int) -> dict[str, Any]:
    """没有显式给出 seed 时，把运行种子写入带 seed 字段的配置"""
    params = dict(params or {})
    if "seed" in PredictorFactory.model_class(kind).config_cls.model_fields:
        params.setdefault("seed", seed)
    return params


def holdout_split(n: int, fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """返回 (拟合行, 验证行)，两者都升序"""
    n_valid = max(1, round(fraction * n))
    order = derive_rng(seed, HOLDOUT_STREAM).permutation(n)
    return np.sort(order[n_valid:]), np.sort(order[:n_valid])


def train_predictor(
    kind: str,
    params: dict[str, Any] | None,
    X,
    y,
    seed: int | None = None,
    device: str = "unknown",
    valid_fraction: float | None = None,
    pinned: bool = False,
) -> TrainedPredictor:
    """训练单个预测器

    Args:
        params: 超参数字典，缺省字段取配置类默认值
        X: 原始（未变换）特征矩阵
        pinned: 固定种子运行，时间戳取 SOURCE_DATE_EPOCH，训练耗时记为未测量
    """
    seed = config.seed if seed is None else seed
    valid_fraction = config.valid_fraction if valid_fraction is None else valid_fraction
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    cfg = PredictorFactory.make_config(kind, with_seed(kind, params, seed))

    transform = PredictorFactory.input_transform(kind)
    Xm = np.log1p(X) if transform == "log1p" else X
    standardizer = None
    if transform == "log1p":
        standardizer = Standardizer.fit(Xm)
        Xm = standardizer.transform(Xm)

    start = time.perf_counter()
    if needs_validation(kind, cfg) and valid_fraction > 0 and X.shape[0] >= MIN_HOLDOUT_ROWS:
        fit_rows, valid_rows = holdout_split(X.shape[0], valid_fraction, seed)
        model = PredictorFactory.fit(kind, cfg, Xm[fit_rows], y[fit_rows], valid=(Xm[valid_rows], y[valid_rows]))
    else:
        model = PredictorFactory.fit(kind, cfg, Xm, y)
    elapsed = time.perf_counter() - start
    logger.debug(f"Trained {kind} on {X.shape[0]} rows in {elapsed:.3f}s")

    metadata = PredictorMetadata(
        device=device,
        train_fingerprint=fingerprint_arrays(X, y),
        created_at=utc_isoformat(pinned_utc() if pinned else utc_now()),
        version=__version__,
        params=cfg.model_dump(mode="json"),
        training_time_s=None if pinned else elapsed,
    )
    return TrainedPredictor(kind, model, metadata, standardizer, transform)
