"""
K 折交叉验证与穷举网格搜索

每个配置的随机种子由 (seed, 配置序号) 派生，串行与并行执行得到相同的 CvReport。
只使用传入的训练行，测试行从不经过这里。
"""

import json
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Any

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict
from tqdm import tqdm

from src.config import config
from src.evaluation.metrics import mape
from src.evaluation.predictor import TrainedPredictor
from src.exceptions import AllConfigsFailedError, ConfigError, LatprophError, PreconditionError
from src.tuning.grid import HyperGrid, grid_expand
from src.tuning.training import train_predictor
from src.utils import derive_rng, derive_seed, logger


def kfold_split(n: int, k: int, seed: int) -> list[np.ndarray]:
    """打乱后连续切分，各折大小相差不超过 1"""
    if k < 2:
        raise ConfigError(f"K-fold cross validation needs k >= 2, got k={k}")
    if k > n:
        raise ConfigError(f"K-fold cross validation needs k <= n, got k={k} for n={n}")
    order = derive_rng(seed).permutation(n)
    return [np.sort(fold) for fold in np.array_split(order, k)]


class ConfigResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    index: int
    params: dict[str, Any]
    fold_mapes: tuple[float, ...] = ()
    mean_mape: float | None = None
    std_mape: float | None = None
    wall_time_s: float | None = None
    status: str = "ok"
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"


class CvReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    model_kind: str
    results: tuple[ConfigResult, ...]
    best_index: int
    fold_count: int
    seed: int
    tuning_time_s: float | None = None

    @property
    def total_configs(self) -> int:
        return len(self.results)

    @property
    def best(self) -> ConfigResult:
        return self.results[self.best_index]

    @property
    def best_config(self) -> dict[str, Any]:
        return self.best.params

    @property
    def failed(self) -> list[ConfigResult]:
        return [r for r in self.results if not r.ok]

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {
                "config": r.index,
                "params": json.dumps(r.params, sort_keys=True),
                "mean_mape": r.mean_mape,
                "std_mape": r.std_mape,
                "folds": self.fold_count,
                "wall_time_s": r.wall_time_s,
                "status": r.status,
                "best": r.index == self.best_index,
                "error": r.error,
            }
            for r in self.results
        ]
        return pd.DataFrame(rows)


def _evaluate_config(
    kind: str,
    index: int,
    params: dict[str, Any],
    X: np.ndarray,
    y: np.ndarray,
    folds: list[np.ndarray],
    seed: int,
    pinned: bool,
) -> ConfigResult:
    config_seed = derive_seed(seed, index)
    start = time.perf_counter()
    scores = []
    try:
        for f, valid in enumerate(folds):
            train = np.concatenate([fold for g, fold in enumerate(folds) if g != f])
            train.sort()
            predictor = train_predictor(kind, params, X[train], y[train], seed=config_seed, pinned=True)
            scores.append(mape(y[valid], predictor.predict(X[valid])))
    except (LatprophError, FloatingPointError, np.linalg.LinAlgError) as e:
        logger.warning(f"Grid config {index} {params} failed: {e}")
        return ConfigResult(index=index, params=params, status="failed", error=str(e))

    scores_arr = np.asarray(scores)
    elapsed = time.perf_counter() - start
    if not np.all(np.isfinite(scores_arr)):
        logger.warning(f"Grid config {index} {params} produced non-finite MAPE")
        return ConfigResult(index=index, params=params, status="failed", error="non-finite validation MAPE")
    return ConfigResult(
        index=index,
        params=params,
        fold_mapes=tuple(float(s) for s in scores_arr),
        mean_mape=float(scores_arr.mean()),
        std_mape=float(scores_arr.std()),
        wall_time_s=None if pinned else elapsed,
    )


def grid_search(
    g: HyperGrid,
    X,
    y,
    k: int | None = None,
    seed: int | None = None,
    jobs: int | None = None,
    device: str = "unknown",
    pinned: bool = False,
    progress: bool = False,
) -> tuple[TrainedPredictor, CvReport]:
    """对每个配置做 K 折交叉验证，按平均验证 MAPE 选优，再在全部训练行上重训

    平均 MAPE 并列时取枚举顺序靠前的配置。
    """
    k = config.k_folds if k is None else k
    seed = config.seed if seed is None else seed
    jobs = config.jobs if jobs is None else jobs
    if jobs < 1:
        raise PreconditionError(f"jobs must be >= 1, got {jobs}")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    folds = kfold_split(X.shape[0], k, seed)
    configs = grid_expand(g)

    logger.info(f"Grid search over {len(configs)} {g.model_kind} configs, {k} folds, {X.shape[0]} rows, jobs={jobs}")
    start = time.perf_counter()
    tasks = [(g.model_kind, i, params, X, y, folds, seed, pinned) for i, params in enumerate(configs)]
    bar = tqdm(total=len(tasks), desc=f"tune {g.model_kind}", disable=not progress, leave=False)
    if jobs == 1:
        results = []
        for task in tasks:
            results.append(_evaluate_config(*task))
            bar.update()
    else:
        with ThreadPoolExecutor(max_workers=jobs) as executor:
            futures = [executor.submit(_evaluate_config, *task) for task in tasks]
            results = []
            for future in futures:
                results.append(future.result())
                bar.update()
    bar.close()

    survivors = [r for r in results if r.ok]
    if not survivors:
        raise AllConfigsFailedError(f"All {len(results)} {g.model_kind} configurations failed")
    best = min(survivors, key=lambda r: (r.mean_mape, r.index))
    elapsed = time.perf_counter() - start

    predictor = train_predictor(
        g.model_kind, best.params, X, y, seed=derive_seed(seed, best.index), device=device, pinned=pinned
    )
    predictor.metadata = predictor.metadata.model_copy(update={"tuning_time_s": None if pinned else elapsed})
    report = CvReport(
        model_kind=g.model_kind,
        results=tuple(results),
        best_index=best.index,
        fold_count=k,
        seed=seed,
        tuning_time_s=None if pinned else elapsed,
    )
    logger.info(
        f"Grid search picked config {best.index} {best.params} with CV MAPE {best.mean_mape:.3f}% "
        f"({len(survivors)}/{len(results)} configs succeeded, {elapsed:.1f}s)"
    )
    return predictor, report
